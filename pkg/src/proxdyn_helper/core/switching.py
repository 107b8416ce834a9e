"""Dwell-time switched proximal dynamics.

A switching signal picks, at every step, one of M communication modes
(P_m, Q̃_m, η_m, κ_m); the agents' costs stay the same. Convergence to a
persistent network equilibrium (a common fixed point of all modes) is
guaranteed once consecutive switches are more than τ steps apart with

    τ_min = log_{∏ φ_j}( 2^{-M} ∏ λ_min,j / λ_max,j ),
    φ_j   = sqrt(α_j⁻¹κ_j² / (1 + α_j⁻¹κ_j²)),   α_j = (1 − η_j) / η_j.

κ_j is a linear-regularity constant that cannot be computed in general; it is
supplied per mode and can be estimated from data with `contraction_diagnostic`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from proxdyn_helper.core.certify import WeightMatrix, check_feasible
from proxdyn_helper.core.dynamics import (
    DEFAULT_TOL,
    GameInstance,
    Trajectory,
    picard_step,
    project_state,
)
from proxdyn_helper.core.graph import AdjacencyMatrix
from proxdyn_helper.core.prox import AgentCost
from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import InvalidModeError, SignalError, ValidationReport

MODE_CERTIFICATE_TOL = 1e-9
VACUOUS_DISTANCE = 1e-15

__all__ = [
    "SwitchMode",
    "SwitchingSignal",
    "ContractionReport",
    "phi_from_kappa",
    "calibrate_kappa",
    "dwell_bound_from_parameters",
    "dwell_lower_bound",
    "validate_signal",
    "mode_game",
    "switched_iterate",
    "pnwe_residual",
    "contraction_diagnostic",
]


def phi_from_kappa(kappa: float, eta: float) -> float:
    alpha = (1.0 - eta) / eta
    c = kappa**2 / alpha
    return math.sqrt(c / (1.0 + c))


def calibrate_kappa(phi: float, eta: float) -> float:
    """Inverse of `phi_from_kappa`: the κ whose φ equals `phi` (φ ∈ [0, 1))."""
    if not 0.0 <= phi < 1.0:
        raise InvalidModeError(f"phi must lie in [0, 1), got {phi}")
    alpha = (1.0 - eta) / eta
    return math.sqrt(alpha * phi**2 / (1.0 - phi**2))


@dataclass(frozen=True, eq=False)
class SwitchMode:
    """One communication mode; Q̃ must be diagonal and certify P at η."""

    P: AdjacencyMatrix
    Qtilde: WeightMatrix
    eta: float = 0.5
    kappa: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise InvalidModeError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.kappa > 0:
            raise InvalidModeError(f"kappa must be positive, got {self.kappa}")
        if not self.Qtilde.diagonal_only:
            logger.error("Switching modes need a diagonal weight")
            raise InvalidModeError("switching modes need a diagonal weight")
        certificate = check_feasible(self.Qtilde.entries, self.P.entries, self.eta, MODE_CERTIFICATE_TOL)
        if not certificate.feasible:
            logger.error(f"Mode weight does not certify eta={self.eta} (lambda_min={certificate.min_eigenvalue:.3e})")
            raise InvalidModeError(
                f"mode weight does not certify eta={self.eta} (lambda_min={certificate.min_eigenvalue:.3e})"
            )

    @property
    def alpha(self) -> float:
        return (1.0 - self.eta) / self.eta

    @property
    def phi(self) -> float:
        return phi_from_kappa(self.kappa, self.eta)

    @property
    def lambda_min(self) -> float:
        return float(np.min(self.Qtilde.diagonal))

    @property
    def lambda_max(self) -> float:
        return float(np.max(self.Qtilde.diagonal))


@dataclass(frozen=True)
class SwitchingSignal:
    """Piecewise-constant schedule of 1-based mode indices, repeated cyclically past its horizon."""

    segments: tuple[tuple[int, int], ...]
    tau: int
    exhaustive: bool = False

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple((int(m), int(d)) for m, d in self.segments))

    @property
    def horizon(self) -> int:
        return sum(d for _, d in self.segments)

    def mode_at(self, k: int) -> int:
        """Mode index active at step k."""
        offset = k % self.horizon
        for mode, duration in self.segments:
            if offset < duration:
                return mode
            offset -= duration
        raise AssertionError("unreachable: offset exceeds horizon")


def dwell_bound_from_parameters(phis: Sequence[float], ratios: Sequence[float]) -> float:
    """ln(2^{-M} ∏ ratios) / ln(∏ φ); zero when some φ_j is zero.

    Raises:
        InvalidModeError: If any φ_j is outside [0, 1) or a ratio is outside (0, 1].
    """
    if len(phis) != len(ratios) or not phis:
        raise InvalidModeError("need one eigenvalue ratio per mode")
    for phi in phis:
        if not 0.0 <= phi < 1.0:
            logger.error(f"Mode contraction factor phi={phi} is not below 1")
            raise InvalidModeError(f"phi must lie in [0, 1), got {phi}")
    for ratio in ratios:
        if not 0.0 < ratio <= 1.0:
            raise InvalidModeError(f"eigenvalue ratio must lie in (0, 1], got {ratio}")
    if any(phi == 0.0 for phi in phis):
        return 0.0
    M = len(phis)
    numerator = sum(math.log(r) for r in ratios) - M * math.log(2.0)
    denominator = sum(math.log(phi) for phi in phis)
    return numerator / denominator


def dwell_lower_bound(modes: Sequence[SwitchMode]) -> float:
    """Real-valued dwell-time lower bound; round up for an integer τ."""
    return dwell_bound_from_parameters([m.phi for m in modes], [m.lambda_min / m.lambda_max for m in modes])


def validate_signal(signal: SwitchingSignal, modes: Sequence[SwitchMode]) -> ValidationReport:
    """Durations must strictly exceed τ, modes must be in range, and an exhaustive signal must visit every mode."""
    violations: list[str] = []
    M = len(modes)
    if not signal.segments:
        violations.append("signal has no segments")
    if signal.tau < 0:
        violations.append(f"dwell time {signal.tau} is negative")
    for index, (mode, duration) in enumerate(signal.segments, 1):
        if not 1 <= mode <= M:
            violations.append(f"segment {index} uses mode {mode}, outside 1..{M}")
        if duration <= signal.tau:
            violations.append(f"segment {index} lasts {duration} steps, must exceed tau={signal.tau}")
    if signal.exhaustive:
        seen = {mode for mode, _ in signal.segments}
        missing = [m for m in range(1, M + 1) if m not in seen]
        if missing:
            violations.append(f"exhaustive signal never activates mode(s) {missing}")
    return ValidationReport.from_violations(violations)


def mode_game(costs: Sequence[AgentCost], mode: SwitchMode) -> GameInstance:
    """The game seen under one mode: same targets and sets, the mode's P and Q̃."""
    n = costs[0].dim
    weights = mode.Qtilde.diagonal
    mode_costs = tuple(c.with_weight(np.full(n, w)) for c, w in zip(costs, weights, strict=True))
    return GameInstance(P=mode.P, n=n, costs=mode_costs, Qtilde=mode.Qtilde, eta=mode.eta)


def pnwe_residual(costs: Sequence[AgentCost], modes: Sequence[SwitchMode], x) -> float:
    """max over modes of ‖T_m(x) − x‖ in that mode's norm; zero exactly on the common fixed-point set."""
    residual = 0.0
    for mode in modes:
        game = mode_game(costs, mode)
        state = game.state(x)
        residual = max(residual, game.norm(picard_step(game, state) - state))
    return residual


def switched_iterate(costs: Sequence[AgentCost], modes: Sequence[SwitchMode], signal: SwitchingSignal,
                     x0, tol: float = DEFAULT_TOL, max_steps: int = 10**5) -> Trajectory:
    """Run the switched Picard iteration, recording the active mode and the PNWE residual per step.

    Raises:
        SignalError: If `signal` fails `validate_signal`.
    """
    report = validate_signal(signal, modes)
    if not report.is_valid:
        logger.error(f"Invalid switching signal: {'; '.join(report.violations)}")
        raise SignalError(report)
    games = [mode_game(costs, mode) for mode in modes]

    x = games[0].state(x0)
    trajectory = Trajectory()
    projected = project_state(games[0], x)
    if not np.array_equal(projected, x):
        logger.warning("Initial state outside the constraint sets; projected before iterating")
        trajectory.projected_initial = True
        x = projected
    trajectory.record(0, x)

    for k in range(max_steps):
        mode = signal.mode_at(k)
        x = picard_step(games[mode - 1], x)
        residual = pnwe_residual(costs, modes, x)
        trajectory.record(k + 1, x, residual, mode)
        trajectory.iterations = k + 1
        if residual < tol:
            trajectory.converged = True
            break

    if trajectory.converged:
        logger.info(f"Switched iteration reached a persistent equilibrium after {trajectory.iterations} steps")
    else:
        logger.warning(f"Switched iteration stopped at max_steps={max_steps} without reaching tol={tol:g}")
    return trajectory


@dataclass
class ContractionReport:
    """Distance ratios d(k)/d(0) of a single-mode segment against the envelope 2φ^k."""

    phi: float
    distances: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    envelope: list[float] = field(default_factory=list)
    violations: list[int] = field(default_factory=list)
    vacuous: bool = False
    observed_rate: float = 0.0
    envelope_phi: float = 0.0
    calibrated_kappa: float = 0.0


def contraction_diagnostic(mode: SwitchMode, states: Sequence[np.ndarray], reference,
                           phi: float | None = None, slack: float = 1e-12) -> ContractionReport:
    """Compare the decay of ‖x(n+k) − x_ref‖_{Q̃} along one mode's segment with 2φ^k.

    Args:
        mode: The mode active over the whole segment.
        states: Consecutive states x(n), x(n+1), ...
        reference: A point of the persistent equilibrium set, e.g. the converged limit.
        phi: Envelope base; defaults to the mode's φ.
        slack: Absolute tolerance on envelope checks.

    Returns:
        The report. `observed_rate` is the largest one-step distance ratio and
        `calibrated_kappa` maps it back through the φ formula; `envelope_phi`
        is the smallest φ for which the envelope holds on this segment.
    """
    phi = mode.phi if phi is None else phi
    weights = mode.Qtilde.diagonal
    reference = np.asarray(reference, dtype=float)

    def distance(x) -> float:
        diff = np.asarray(x, dtype=float).reshape(reference.shape) - reference
        return float(np.sqrt(np.sum(weights[:, None] * diff.reshape(len(weights), -1) ** 2)))

    distances = [distance(x) for x in states]
    report = ContractionReport(phi=phi, distances=distances)
    if not distances or distances[0] <= VACUOUS_DISTANCE:
        report.vacuous = True
        return report

    d0 = distances[0]
    for k, d in enumerate(distances):
        ratio = d / d0
        bound = 2.0 * phi**k
        report.ratios.append(ratio)
        report.envelope.append(bound)
        if ratio > bound + slack:
            report.violations.append(k)

    steps = [b / a for a, b in zip(distances, distances[1:]) if a > VACUOUS_DISTANCE]
    report.observed_rate = max(steps, default=0.0)
    report.envelope_phi = max(((r / 2.0) ** (1.0 / k) for k, r in enumerate(report.ratios) if k > 0), default=0.0)
    if report.observed_rate < 1.0:
        report.calibrated_kappa = calibrate_kappa(report.observed_rate, mode.eta)
    else:
        report.calibrated_kappa = math.inf
    if report.violations:
        logger.warning(f"Contraction envelope 2*{phi:.4f}^k violated at steps {report.violations}")
    return report
