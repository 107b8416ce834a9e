#!/usr/bin/env python

import argparse
import dataclasses
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from proxdyn_helper.core.certify import WeightMatrix, check_feasible, solve_diagonal_Q
from proxdyn_helper.core.config import (
    ConfigBundle,
    RunConfig,
    build_run_config,
    bundle_to_document,
    certified_bundle,
    parse_config,
    write_record,
)
from proxdyn_helper.core.dynamics import iterate
from proxdyn_helper.core.export import export_csv, export_svg
from proxdyn_helper.core.formats import FIGURE_EXTENSION, SUPPORTED_FORMATS, TRAJECTORY_EXTENSION, get_file_extension
from proxdyn_helper.core.graph import is_strongly_connected, stationary_distribution
from proxdyn_helper.core.scenario import run_exploration
from proxdyn_helper.core.switching import dwell_lower_bound, switched_iterate
from proxdyn_helper.utils.logging import LOG_LEVEL_NAMES, configure_logging, level_from_name, logger
from proxdyn_helper.utils.validation import ConfigError, GraphValidationError, SignalError

DEFAULT_SEED = 0


def process_args(argv: list[str] | None = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="Configuration document (json, yaml/yml, or md with front matter)")
    common.add_argument(
        "--output-dir",
        default=".",
        help="Directory for CSV, SVG and record outputs (default: current directory)",
    )
    common.add_argument(
        "--format",
        default="yaml",
        choices=SUPPORTED_FORMATS,
        help="Format of written records (default: yaml)",
    )
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=LOG_LEVEL_NAMES,
        help="Logging level (default: INFO)",
    )

    parser = argparse.ArgumentParser(description="Proximal dynamics for network equilibrium seeking")
    sub = parser.add_subparsers(dest="mode", required=True)

    sub.add_parser("validate-graph", parents=[common], help="Check the communication matrix")

    solve = sub.add_parser("solve-lmi", parents=[common], help="Search a diagonal weight certifying the LMI")
    solve.add_argument("--eta", type=float, default=None, help="Averagedness constant in (0, 1) (default: weights.eta)")
    solve.add_argument("--seed", type=int, default=None, help=f"Seed for the solver restarts (default: {DEFAULT_SEED})")
    solve.add_argument("--restarts", type=int, default=32, help="Number of solver restarts (default: 32)")
    solve.add_argument("--iterations", type=int, default=5000, help="Iterations per restart (default: 5000)")

    simulate = sub.add_parser("simulate", parents=[common], help="Run the fixed-set Picard iteration")
    simulate.add_argument("--tol", type=float, default=None, help="Stopping tolerance (default: 1e-9)")
    simulate.add_argument("--max-iter", type=int, default=None, help="Iteration cap (default: 100000)")

    switch = sub.add_parser("switch-sim", parents=[common], help="Run the switched Picard iteration")
    switch.add_argument("--tau", type=int, default=None, help="Dwell time overriding signal.tau")
    switch.add_argument("--tol", type=float, default=None, help="Stopping tolerance (default: 1e-9)")
    switch.add_argument("--max-iter", type=int, default=None, help="Step cap (default: 100000)")

    sub.add_parser("dwell-bound", parents=[common], help="Compute the dwell-time lower bound of the signal modes")

    explore = sub.add_parser("explore", parents=[common], help="Run the multi-robot exploration")
    explore.add_argument(
        "--obstacles",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Use (or ignore with --no-obstacles) the scenario's obstacles (default: use)",
    )

    return parser.parse_args(argv)


def setup_logging(log_level_name: str) -> None:
    try:
        configure_logging(level=level_from_name(log_level_name), propagate=True)
    except Exception:  # pragma: no cover
        configure_logging()


def get_run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "eta": getattr(args, "eta", None),
        "seed": getattr(args, "seed", None),
        "tol": getattr(args, "tol", None),
        "max_iter": getattr(args, "max_iter", None),
        "tau": getattr(args, "tau", None),
        "obstacles": getattr(args, "obstacles", None),
    }
    return build_run_config(args.mode, args.config, args.output_dir, args.format, **overrides)


def _output_path(run: RunConfig, suffix: str, extension: str) -> Path:
    run.output_dir.mkdir(parents=True, exist_ok=True)
    path = run.output_dir / f"{run.input_path.stem}_{suffix}{extension}"
    run.outputs.append(path)
    return path


@contextmanager
def _discard_outputs_on_failure(run: RunConfig):
    """Remove every file the run wrote if it does not finish."""
    try:
        yield
    except BaseException:
        for path in run.outputs:
            if path.exists():
                path.unlink()
                logger.info(f"Removed partial output {path}")
        raise


def write_summary(run: RunConfig, **fields) -> Path:
    """Per-run record: mode, seed, overrides and the run's outcome."""
    document = {
        "mode": run.mode,
        "config": str(run.input_path),
        "seed": run.get("seed", DEFAULT_SEED),
        "overrides": dict(run.overrides),
    }
    document.update(fields)
    path = _output_path(run, f"{run.mode}_summary", get_file_extension(run.format))
    return write_record(document, path, run.format)


def handle_validate_graph_arg(run: RunConfig, bundle: ConfigBundle) -> None:
    P = bundle.P
    pi = stationary_distribution(P)
    logger.info(f"Graph valid: N={P.N}, a_bar={P.a_bar:g}, strongly connected={is_strongly_connected(P)}")
    print(f"valid N={P.N} a_bar={P.a_bar:g}")
    write_summary(run, valid=True, N=P.N, a_bar=float(P.a_bar), stationary=[float(v) for v in pi])


def handle_solve_lmi_arg(args: argparse.Namespace, run: RunConfig, bundle: ConfigBundle) -> None:
    eta = run.get("eta", bundle.eta)
    seed = run.get("seed", DEFAULT_SEED)
    logger.info(f"Searching a diagonal weight for eta={eta} (seed={seed}, restarts={args.restarts})")
    result = solve_diagonal_Q(bundle.P.entries, eta=eta, seed=seed, restarts=args.restarts,
                              iterations=args.iterations)
    if not isinstance(result, WeightMatrix):
        logger.error(f"No diagonal weight certifies eta={eta}; best lambda_min {result.best_lambda_min:.3e}")
        sys.exit(1)

    certificate = check_feasible(result.entries, bundle.P.entries, eta)
    certified, section = certified_bundle(bundle, result, eta, certificate.min_eigenvalue, seed)
    record = _output_path(run, "certified", get_file_extension(run.format))
    write_record(bundle_to_document(certified, section), record, run.format)
    print(" ".join(f"{q:.6g}" for q in result.diagonal))
    logger.info(f"Certified weight written to {record} (lambda_min={certificate.min_eigenvalue:.3e})")
    write_summary(run, eta=float(eta), feasible=True, lambda_min=float(certificate.min_eigenvalue),
                  Q=[float(q) for q in result.diagonal], record=str(record))


def _plot_if_planar(run: RunConfig, states: list, targets, obstacles=()) -> str | None:
    stacked = np.stack(states)
    if stacked.shape[-1] != 2:
        logger.info(f"States have dimension {stacked.shape[-1]}; skipping the figure")
        return None
    figure = _output_path(run, run.mode, FIGURE_EXTENSION)
    paths = [stacked[:, i, :] for i in range(stacked.shape[1])]
    export_svg(paths, targets, obstacles, figure, seed=run.get("seed", DEFAULT_SEED))
    return str(figure)


def handle_simulate_arg(run: RunConfig, bundle: ConfigBundle) -> None:
    game = bundle.game()
    trajectory = iterate(game, bundle.initial, tol=run.get("tol", 1e-9), max_iter=run.get("max_iter", 10**5))
    table = _output_path(run, run.mode, TRAJECTORY_EXTENSION)
    export_csv(trajectory, table)
    figure = _plot_if_planar(run, trajectory.states, game.targets)
    write_summary(run, converged=trajectory.converged, iterations=trajectory.iterations,
                  final_residual=trajectory.residuals[-1] if trajectory.residuals else 0.0,
                  projected_initial=trajectory.projected_initial, csv=str(table), svg=figure)


def handle_switch_sim_arg(run: RunConfig, bundle: ConfigBundle) -> None:
    if bundle.signal is None:
        raise _missing_signal()
    signal = bundle.signal
    if run.get("tau") is not None:
        signal = dataclasses.replace(signal, tau=run.get("tau"))
    costs = bundle.costs()
    trajectory = switched_iterate(costs, bundle.modes, signal, bundle.initial,
                                  tol=run.get("tol", 1e-9), max_steps=run.get("max_iter", 10**5))
    table = _output_path(run, run.mode, TRAJECTORY_EXTENSION)
    export_csv(trajectory, table)
    figure = _plot_if_planar(run, trajectory.states, np.vstack([c.target for c in costs]))
    write_summary(run, tau=signal.tau, converged=trajectory.converged, iterations=trajectory.iterations,
                  final_residual=trajectory.residuals[-1] if trajectory.residuals else 0.0,
                  csv=str(table), svg=figure)


def handle_dwell_bound_arg(run: RunConfig, bundle: ConfigBundle) -> None:
    if not bundle.modes:
        raise _missing_signal()
    bound = dwell_lower_bound(bundle.modes)
    print(f"{bound:.12g}")
    logger.info(f"Dwell-time lower bound {bound:.6g} (tau >= {math.ceil(bound)})")
    write_summary(run, dwell_lower_bound=float(bound), tau_min=int(math.ceil(bound)),
                  phi=[float(m.phi) for m in bundle.modes])


def handle_explore_arg(run: RunConfig, bundle: ConfigBundle) -> None:
    scenario = bundle.robot_scenario(with_obstacles=run.get("obstacles", True))
    result = run_exploration(scenario)
    table = _output_path(run, run.mode, TRAJECTORY_EXTENSION)
    export_csv(result.trajectory, table)
    figure = _plot_if_planar(run, result.trajectory.states, scenario.targets, scenario.obstacles.boxes)
    stalled = [i + 1 for i, flag in enumerate(result.stalled) if flag]
    if stalled:
        logger.warning(f"Robots {stalled} stalled against an obstacle")
    write_summary(run, converged=result.converged, iterations=result.trajectory.iterations,
                  final_nwe_residual=float(result.final_nwe_residual), stalled=stalled,
                  obstacles=len(scenario.obstacles), csv=str(table), svg=figure)


def _missing_signal() -> ConfigError:
    logger.error("Section 'signal' is required for switched runs")
    return ConfigError("signal: section 'signal' is required for switched runs")


def main(argv: list[str] | None = None) -> None:
    args = process_args(argv)

    setup_logging(log_level_name=args.log_level)

    try:
        run = get_run_config(args)
        bundle = parse_config(run.input_path)

        with _discard_outputs_on_failure(run):
            if run.mode == "validate-graph":
                handle_validate_graph_arg(run, bundle)
            elif run.mode == "solve-lmi":
                handle_solve_lmi_arg(args, run, bundle)
            elif run.mode == "simulate":
                handle_simulate_arg(run, bundle)
            elif run.mode == "switch-sim":
                handle_switch_sim_arg(run, bundle)
            elif run.mode == "dwell-bound":
                handle_dwell_bound_arg(run, bundle)
            elif run.mode == "explore":
                handle_explore_arg(run, bundle)
    except GraphValidationError as e:
        for violation in e.report.violations:
            logger.error(f"Graph validation failed: {violation}")
        sys.exit(1)
    except SignalError as e:
        for violation in e.report.violations:
            logger.error(f"Signal validation failed: {violation}")
        sys.exit(1)
    except (ValueError, RuntimeError, OSError) as e:
        logger.error(f"{args.mode} failed: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
