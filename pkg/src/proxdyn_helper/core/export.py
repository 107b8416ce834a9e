"""Deterministic trajectory exports: CSV tables and SVG figures."""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.patches import Circle, Rectangle  # noqa: E402

from proxdyn_helper.core.dynamics import Trajectory  # noqa: E402
from proxdyn_helper.core.formats import atomic_write  # noqa: E402
from proxdyn_helper.core.prox import Box  # noqa: E402
from proxdyn_helper.utils.logging import logger  # noqa: E402
from proxdyn_helper.utils.validation import StructuralError, UnsupportedPlotError  # noqa: E402

CSV_FLOAT_FORMAT = "%.12g"
SVG_HASH_SALT = "proxdyn-helper"
PLOT_MARGIN = 0.05
TARGET_RING_FRACTIONS = (0.01, 0.02, 0.03)
OBSTACLE_COLOR = "0.6"

__all__ = ["trajectory_frame", "export_csv", "render_figure", "export_svg"]


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """One row per (step, agent): step, agent, dim0..dim{n-1}, residual, mode.

    Agents are numbered from 1. The initial state has no residual and no mode;
    runs without switching leave the mode column empty.
    """
    if not trajectory.states:
        logger.error("Cannot export an empty trajectory")
        raise StructuralError("trajectory has no states")
    states = np.stack([np.atleast_2d(s) for s in trajectory.states])
    K, N, n = states.shape
    steps = trajectory.steps if len(trajectory.steps) == K else list(range(K))
    residuals = [np.nan] + list(trajectory.residuals)
    modes = [pd.NA] + list(trajectory.modes) if trajectory.modes else [pd.NA] * K

    frame = pd.DataFrame({
        "step": np.repeat(np.asarray(steps, dtype=np.int64), N),
        "agent": np.tile(np.arange(1, N + 1, dtype=np.int64), K),
    })
    flat = states.reshape(K * N, n)
    for d in range(n):
        frame[f"dim{d}"] = flat[:, d]
    frame["residual"] = np.repeat(np.asarray(residuals[:K], dtype=float), N)
    frame["mode"] = pd.array(np.repeat(np.asarray(modes[:K], dtype=object), N), dtype="Int64")
    return frame


def export_csv(trajectory: Trajectory, path) -> None:
    """Write the trajectory table; numbers carry 12 significant digits and the file appears atomically."""
    text = trajectory_frame(trajectory).to_csv(
        index=False, float_format=CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n"
    )
    atomic_write(path, text)
    logger.info(f"Wrote trajectory CSV {path}")


def _paths_array(paths: Sequence[np.ndarray]) -> list[np.ndarray]:
    arrays = [np.atleast_2d(np.asarray(p, dtype=float)) for p in paths]
    if not arrays:
        raise StructuralError("at least one path is required")
    for p in arrays:
        if p.shape[-1] != 2:
            logger.error(f"Only planar trajectories can be plotted, got dimension {p.shape[-1]}")
            raise UnsupportedPlotError(f"only planar (n = 2) trajectories can be plotted, got n = {p.shape[-1]}")
    return arrays


def render_figure(paths: Sequence[np.ndarray], targets, obstacles: Sequence[Box] = (),
                  title: str | None = None):
    """Figure with one polyline per agent, dashed target rings and gray obstacle rectangles.

    Args:
        paths: Per-agent (K, 2) arrays of positions.
        targets: (N, 2) array of target positions.
        obstacles: Axis-aligned boxes to draw.
        title: Optional axes title.
    """
    paths = _paths_array(paths)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[-1] != 2:
        raise UnsupportedPlotError(f"only planar (n = 2) targets can be plotted, got n = {targets.shape[-1]}")

    points = [np.vstack(paths), targets]
    points += [np.vstack([b.lower, b.upper]) for b in obstacles]
    cloud = np.vstack(points)
    lo, hi = cloud.min(axis=0), cloud.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    ring_unit = float(np.max(span))

    fig, ax = plt.subplots(figsize=(6, 6))
    for box in obstacles:
        ax.add_patch(Rectangle(tuple(box.lower), *(2.0 * box.half_width),
                               facecolor=OBSTACLE_COLOR, edgecolor="none", zorder=1))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, path in enumerate(paths):
        color = colors[i % len(colors)]
        ax.plot(path[:, 0], path[:, 1], color=color, linewidth=1.2, label=f"agent {i + 1}", zorder=3)
        if i < len(targets):
            for fraction in TARGET_RING_FRACTIONS:
                ax.add_patch(Circle(tuple(targets[i]), fraction * ring_unit, fill=False,
                                    linestyle="--", edgecolor=color, zorder=2))
    ax.set_xlim(lo[0] - PLOT_MARGIN * span[0], hi[0] + PLOT_MARGIN * span[0])
    ax.set_ylim(lo[1] - PLOT_MARGIN * span[1], hi[1] + PLOT_MARGIN * span[1])
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    return fig


def export_svg(paths: Sequence[np.ndarray], targets, obstacles: Sequence[Box], path,
               seed: int | None = None, title: str | None = None) -> None:
    """Render and write an SVG whose bytes depend only on the inputs."""
    fig = render_figure(paths, targets, obstacles, title=title)
    buffer = io.BytesIO()
    metadata = {"Date": None, "Creator": "proxdyn-helper"}
    if seed is not None:
        metadata["Description"] = f"seed={seed}"
    try:
        with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
            fig.savefig(buffer, format="svg", metadata=metadata)
    finally:
        plt.close(fig)
    atomic_write(path, buffer.getvalue())
    logger.info(f"Wrote figure {path}")
