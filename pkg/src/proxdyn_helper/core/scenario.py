"""Planar multi-robot exploration with moving constraint boxes and obstacles.

Every step each robot may only move inside a square of edge r centred on its
current position. When that square overlaps an obstacle, the robot is
restricted to the largest of the four axis-aligned pieces of the square that
lie left of, right of, below or above the obstacle. Robots then take one
projected forward-backward step toward their targets and their neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from proxdyn_helper.core.certify import WeightMatrix
from proxdyn_helper.core.dynamics import GameInstance, Trajectory, fb_step, nwe_residual
from proxdyn_helper.core.graph import AdjacencyMatrix
from proxdyn_helper.core.prox import Box, ConvexSet, SubBox
from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import DegenerateConstraintError, InvalidStateError, StructuralError

DEFAULT_STEPS = 2000
DEFAULT_DISPLACEMENT_TOL = 1e-9

__all__ = [
    "ObstacleSet",
    "RobotScenario",
    "ExplorationResult",
    "build_constraint",
    "run_exploration",
]

# Candidate order doubles as the tie-break order.
_SIDES = ("left", "right", "below", "above")


@dataclass(frozen=True)
class ObstacleSet:
    boxes: tuple[Box, ...] = ()

    def __post_init__(self):
        boxes = tuple(self.boxes)
        for index, box in enumerate(boxes, 1):
            if box.dim != 2 or np.any(box.half_width <= 0):
                logger.error(f"Obstacle {index} must be a planar box with positive half widths")
                raise StructuralError(f"obstacle {index} must be a planar box with positive half widths")
        object.__setattr__(self, "boxes", boxes)

    def __len__(self) -> int:
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    def blocking(self, pos) -> Box | None:
        """The obstacle whose interior contains `pos`, if any."""
        for box in self.boxes:
            if box.interior_contains(pos):
                return box
        return None


def _side_candidate(outer: Box, obstacle: Box, side: str) -> Box | None:
    lower, upper = outer.lower.copy(), outer.upper.copy()
    if side == "left":
        upper[0] = min(upper[0], obstacle.lower[0])
    elif side == "right":
        lower[0] = max(lower[0], obstacle.upper[0])
    elif side == "below":
        upper[1] = min(upper[1], obstacle.lower[1])
    else:
        lower[1] = max(lower[1], obstacle.upper[1])
    if np.any(upper < lower):
        return None
    return Box.from_bounds(lower, upper)


def build_constraint(pos, r: float, obstacles: ObstacleSet) -> ConvexSet:
    """Constraint set of a robot at `pos`: the r-box, or its best obstacle-free piece.

    For a `pos` outside the obstacle interiors, the piece on the robot's side of
    the obstacle always exists and keeps at least half the box, so the
    degenerate case cannot come from the four axis-aligned cuts alone. It stays
    as the contract for callers: `run_exploration` holds such a robot in place.

    Raises:
        InvalidStateError: If `pos` lies inside an obstacle.
        DegenerateConstraintError: If no piece is left; `fallback` is the singleton {pos}.
    """
    pos = np.asarray(pos, dtype=float)
    if obstacles.blocking(pos) is not None:
        logger.error(f"Robot position {pos} lies inside an obstacle")
        raise InvalidStateError(f"position {pos.tolist()} lies inside an obstacle")

    outer = Box(center=pos, half_width=np.full(pos.shape, r / 2.0))
    hits = [box for box in obstacles if outer.interiors_overlap(box)]
    if not hits:
        return outer

    obstacle = min(hits, key=lambda box: float(np.linalg.norm(box.center - pos)))
    best: Box | None = None
    best_area = -1.0
    for side in _SIDES:
        candidate = _side_candidate(outer, obstacle, side)
        if candidate is not None and candidate.volume > best_area:
            best, best_area = candidate, candidate.volume
    if best is None:
        raise DegenerateConstraintError(
            f"no obstacle-free piece of the box around {pos.tolist()}",
            fallback=Box(center=pos, half_width=np.zeros_like(pos)),
        )
    return SubBox(outer=outer, obstacle=obstacle, resolved=best)


@dataclass(frozen=True, eq=False)
class RobotScenario:
    """Robots, their targets and the moving-box exploration parameters."""

    initial: np.ndarray
    targets: np.ndarray
    gammas: np.ndarray
    r: float
    epsilon: float
    P: AdjacencyMatrix
    Qtilde: WeightMatrix
    obstacles: ObstacleSet = field(default_factory=ObstacleSet)
    steps: int = DEFAULT_STEPS
    tol: float = DEFAULT_DISPLACEMENT_TOL

    def __post_init__(self):
        initial = np.atleast_2d(np.asarray(self.initial, dtype=float))
        targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        gammas = np.broadcast_to(np.asarray(self.gammas, dtype=float), (initial.shape[0],)).copy()
        if initial.shape != targets.shape or initial.shape[1] != 2:
            raise StructuralError(f"initial positions {initial.shape} and targets {targets.shape} must both be N×2")
        if initial.shape[0] != self.P.N:
            raise StructuralError(f"{initial.shape[0]} robots for a {self.P.N}-agent graph")
        if not (np.all(np.isfinite(targets)) and np.all(np.isfinite(initial))):
            raise StructuralError("robot positions and targets must be finite")
        if not self.r > 0 or not self.epsilon > 0:
            raise StructuralError(f"r and epsilon must be positive, got r={self.r}, epsilon={self.epsilon}")
        for i, pos in enumerate(initial, 1):
            if self.obstacles.blocking(pos) is not None:
                logger.error(f"Robot {i} starts inside an obstacle")
                raise InvalidStateError(f"robot {i} starts inside an obstacle at {pos.tolist()}")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "gammas", gammas)

    @property
    def N(self) -> int:
        return self.initial.shape[0]

    def game(self, constraints: Sequence[ConvexSet]) -> GameInstance:
        return GameInstance.build(self.P, self.Qtilde, self.gammas, self.targets, constraints)

    def without_obstacles(self) -> "RobotScenario":
        return RobotScenario(self.initial, self.targets, self.gammas, self.r, self.epsilon,
                             self.P, self.Qtilde, ObstacleSet(), self.steps, self.tol)


@dataclass
class ExplorationResult:
    """Collective trajectory plus the constraint sets used at every step.

    `constraints[k]` holds the sets that produced `trajectory.states[k + 1]`;
    the trajectory residuals are ∞-norm displacements.
    """

    trajectory: Trajectory
    constraints: list[tuple[ConvexSet, ...]]
    stalled: list[bool]
    final_nwe_residual: float

    @property
    def converged(self) -> bool:
        return self.trajectory.converged

    def robot_paths(self) -> list[np.ndarray]:
        stacked = np.stack(self.trajectory.states)
        return [stacked[:, i, :] for i in range(stacked.shape[1])]


def run_exploration(scn: RobotScenario) -> ExplorationResult:
    """Iterate the projected forward-backward update with per-step constraint boxes."""
    x = scn.initial.copy()
    stalled = [False] * scn.N
    trajectory = Trajectory()
    trajectory.record(0, x)
    history: list[tuple[ConvexSet, ...]] = []
    game = scn.game([Box(center=p, half_width=np.full(2, scn.r / 2.0)) for p in x])

    for k in range(scn.steps):
        constraints: list[ConvexSet] = []
        for i, pos in enumerate(x):
            try:
                constraints.append(build_constraint(pos, scn.r, scn.obstacles))
            except DegenerateConstraintError as e:
                if not stalled[i]:
                    logger.warning(f"Robot {i + 1} stalled at step {k}: {e}")
                stalled[i] = True
                constraints.append(e.fallback)
        x_next = fb_step(game, x, scn.epsilon, constraints)
        displacement = float(np.max(np.abs(x_next - x)))
        x = x_next
        history.append(tuple(constraints))
        trajectory.record(k + 1, x, displacement)
        trajectory.iterations = k + 1
        if displacement < scn.tol:
            trajectory.converged = True
            break

    final_residual = nwe_residual(game.with_constraints(history[-1]), x) if history else 0.0
    if trajectory.converged:
        logger.info(f"Exploration settled after {trajectory.iterations} steps "
                    f"(final network-equilibrium residual {final_residual:.3e})")
    else:
        logger.warning(f"Exploration did not settle within {scn.steps} steps")
    return ExplorationResult(trajectory=trajectory, constraints=history, stalled=stalled,
                             final_nwe_residual=final_residual)
