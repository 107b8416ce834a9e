"""Weight matrices certifying averagedness of the proximal dynamics.

For a row-stochastic P and η ∈ (0, 1) the LMI

    PᵀQP ≼ (2η − 1)Q + (1 − η)(PᵀQ + QP)

holds iff M(Q) ⪰ 0, where with E = I − P the residual expands to

    M(Q) = η(EᵀQ + QE) − EᵀQE.

Because E·1 = 0, 1ᵀM(Q)1 = 0 for every Q, so λ_min(M(Q)) ≤ 0 and a diagonal
Q = diag(q) can only be feasible when M(Q)·1 = η(q − Pᵀq) vanishes, i.e.
when q is proportional to the stationary distribution π of P. The solver
therefore tries diag(π) first and only then searches.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from proxdyn_helper.core.graph import LiftedMatrix, kron_lift, min_self_loop, stationary_distribution
from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import ConvergenceError, StructuralError, require_square

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-12
DEFAULT_ETA = 0.5
DIAGONAL_FLOOR = 1e-6
DEFAULT_MAX_ENTRY = 0.25

__all__ = [
    "DEFAULT_ETA",
    "WeightMatrix",
    "FeasibilityCertificate",
    "InfeasibleReport",
    "symmetric_min_eig",
    "lmi_residual",
    "check_feasible",
    "solve_diagonal_Q",
    "averagedness_eta",
    "smallest_certified_eta",
]


def symmetric_min_eig(S, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector by cyclic Jacobi rotations.

    The input is symmetrised as (S + Sᵀ)/2. Sweeps continue until the
    off-diagonal Frobenius mass drops below `tol` (scaled by ‖S‖_F when that
    exceeds 1). The eigenvector's first non-negligible entry is made positive.

    Raises:
        ConvergenceError: If `max_sweeps` sweeps do not reach the tolerance.
    """
    A = require_square(S, "symmetric matrix")
    A = (A + A.T) / 2.0
    m = A.shape[0]
    V = np.eye(m)
    threshold = tol * max(1.0, float(np.linalg.norm(A)))

    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off < threshold:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vec_p, vec_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
    else:
        logger.error(f"Jacobi eigenvalue iteration did not converge in {max_sweeps} sweeps")
        raise ConvergenceError(f"Jacobi eigenvalue iteration did not converge in {max_sweeps} sweeps")

    index = int(np.argmin(np.diag(A)))
    vector = V[:, index] / np.linalg.norm(V[:, index])
    leading = np.flatnonzero(np.abs(vector) > 1e-12)
    if leading.size and vector[leading[0]] < 0:
        vector = -vector
    return float(A[index, index]), vector


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Symmetric positive-definite N×N weight Q̃."""

    entries: np.ndarray

    def __post_init__(self):
        entries = require_square(self.entries, "weight matrix")
        if not np.allclose(entries, entries.T, rtol=0.0, atol=SYMMETRY_TOL):
            logger.error("Weight matrix is not symmetric")
            raise StructuralError("weight matrix is not symmetric")
        entries = (entries + entries.T) / 2.0
        if symmetric_min_eig(entries)[0] <= 0:
            logger.error("Weight matrix is not positive definite")
            raise StructuralError("weight matrix is not positive definite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_diagonal(cls, values) -> "WeightMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    @cached_property
    def diagonal_only(self) -> bool:
        return bool(np.count_nonzero(self.entries - np.diag(np.diag(self.entries))) == 0)

    @property
    def lambda_min(self) -> float:
        return symmetric_min_eig(self.entries)[0]

    @property
    def lambda_max(self) -> float:
        return -symmetric_min_eig(-self.entries)[0]

    def lifted(self, n: int) -> LiftedMatrix:
        return kron_lift(self, n)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class FeasibilityCertificate:
    eta: float
    min_eigenvalue: float
    feasible: bool
    Q: np.ndarray
    q_positive_definite: bool


@dataclass(frozen=True)
class InfeasibleReport:
    """Returned by `solve_diagonal_Q` when no restart certified the LMI."""

    eta: float
    best_lambda_min: float
    best_diagonal: tuple[float, ...]
    restarts: int
    seed: int

    @property
    def feasible(self) -> bool:
        return False


def _check_eta(eta: float) -> float:
    if not 0.0 < eta < 1.0:
        logger.error(f"eta must lie in (0, 1), got {eta}")
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    return float(eta)


def lmi_residual(Q, P, eta: float) -> np.ndarray:
    """M(Q) = (2η−1)Q + (1−η)(PᵀQ + QP) − PᵀQP, symmetrised; the LMI holds iff M ⪰ 0."""
    eta = _check_eta(eta)
    Q = require_square(Q, "weight matrix")
    P = require_square(P, "adjacency matrix")
    if Q.shape != P.shape:
        raise StructuralError(f"weight shape {Q.shape} does not match adjacency shape {P.shape}")
    E = np.eye(P.shape[0]) - P
    M = eta * (E.T @ Q + Q @ E) - E.T @ Q @ E
    return (M + M.T) / 2.0


def check_feasible(Q, P, eta: float, tol: float = 1e-9) -> FeasibilityCertificate:
    """Certificate for the LMI at (Q, P, η): feasible iff λ_min(M) ≥ −tol and Q ≻ 0."""
    M = lmi_residual(Q, P, eta)
    min_eigenvalue, _ = symmetric_min_eig(M)
    Q = np.asarray(Q, dtype=float)
    symmetric = np.allclose(Q, Q.T, rtol=0.0, atol=SYMMETRY_TOL)
    q_pd = symmetric and symmetric_min_eig(Q)[0] > 0
    feasible = bool(q_pd and min_eigenvalue >= -tol)
    logger.debug(f"LMI check eta={eta}: lambda_min={min_eigenvalue:.3e}, Q positive definite={q_pd}")
    return FeasibilityCertificate(eta=float(eta), min_eigenvalue=min_eigenvalue, feasible=feasible,
                                  Q=(Q + Q.T) / 2.0, q_positive_definite=bool(q_pd))


def _project_capped_simplex(q: np.ndarray, floor: float) -> np.ndarray:
    """Euclidean projection onto {q : q_d ≥ floor, Σ q_d = 1}."""
    N = q.shape[0]
    budget = 1.0 - N * floor
    u = q - floor
    s = np.sort(u)[::-1]
    cumulative = np.cumsum(s) - budget
    rho = np.nonzero(s - cumulative / np.arange(1, N + 1) > 0)[0][-1]
    shift = cumulative[rho] / (rho + 1.0)
    return np.maximum(u - shift, 0.0) + floor


def _diagonal_supergradient(q: np.ndarray, E: np.ndarray, eta: float) -> tuple[float, np.ndarray]:
    lam, v = symmetric_min_eig(eta * (E.T * q + (q[:, None] * E)) - (E.T * q) @ E)
    Ev = E @ v
    return lam, 2.0 * eta * v * Ev - Ev**2


def _rescaled(q: np.ndarray, target_max: float) -> WeightMatrix:
    return WeightMatrix.from_diagonal(q * (target_max / np.max(q)))


def solve_diagonal_Q(P, eta: float = DEFAULT_ETA, seed: int = 0, restarts: int = 32,
                     iterations: int = 5000, floor: float = DIAGONAL_FLOOR,
                     target_max: float = DEFAULT_MAX_ENTRY, accept_tol: float = 1e-10,
                     stall: int = 500) -> WeightMatrix | InfeasibleReport:
    """Search for a diagonal Q̃ satisfying the LMI.

    The stationary-distribution candidate is tried first. Otherwise runs
    projected supergradient ascent of q ↦ λ_min(M(diag q)) on the simplex
    {q ≥ floor, Σq = 1} with steps 0.1/√k, from `restarts` starting points
    (uniform, then Dirichlet draws from `numpy.random.default_rng(seed)`).
    The first certified point, rescaled so its largest entry is
    `target_max`, is returned.

    Returns:
        The certified WeightMatrix, or an InfeasibleReport carrying the best
        λ_min seen (on the trace-normalised scale).
    """
    eta = _check_eta(eta)
    P = require_square(P, "adjacency matrix")
    N = P.shape[0]
    E = np.eye(N) - P

    pi = stationary_distribution(P)
    if np.all(pi >= floor):
        candidate = _rescaled(pi / pi.sum(), target_max)
        certificate = check_feasible(candidate.entries, P, eta, accept_tol)
        if certificate.feasible:
            logger.info(f"Stationary-distribution weights certify eta={eta} "
                        f"(lambda_min={certificate.min_eigenvalue:.3e})")
            return candidate
        logger.debug(f"Stationary-distribution weights fail at eta={eta} "
                     f"(lambda_min={certificate.min_eigenvalue:.3e}); searching")

    rng = np.random.default_rng(seed)
    best_lam, best_q = -np.inf, np.full(N, 1.0 / N)
    for restart in range(restarts):
        q = np.full(N, 1.0 / N) if restart == 0 else _project_capped_simplex(rng.dirichlet(np.ones(N)), floor)
        restart_best, since_improved = -np.inf, 0
        for k in range(1, iterations + 1):
            lam, g = _diagonal_supergradient(q, E, eta)
            if lam > best_lam:
                best_lam, best_q = lam, q.copy()
            if lam > restart_best + 1e-15:
                restart_best, since_improved = lam, 0
            else:
                since_improved += 1
            if lam >= 0.0 and np.min(q) >= floor:
                candidate = _rescaled(q, target_max)
                if check_feasible(candidate.entries, P, eta, accept_tol).feasible:
                    logger.info(f"Restart {restart} certified eta={eta} after {k} iterations")
                    return candidate
            if since_improved >= stall:
                break
            norm = np.linalg.norm(g)
            if norm == 0.0:
                break
            q = _project_capped_simplex(q + (0.1 / np.sqrt(k)) * g / norm, floor)
        logger.debug(f"Restart {restart}: best lambda_min {restart_best:.3e}")

    logger.warning(f"No diagonal weight certifies eta={eta}; best lambda_min {best_lam:.3e}")
    return InfeasibleReport(eta=eta, best_lambda_min=float(best_lam),
                            best_diagonal=tuple(float(v) for v in best_q),
                            restarts=restarts, seed=seed)


def averagedness_eta(P) -> float:
    """1 − ā: with Q̃ = diag(π), P is (1 − ā)-averaged in the Q̃-norm."""
    return 1.0 - min_self_loop(P)


def smallest_certified_eta(P, tol: float = 1e-9, precision: float = 1e-6) -> float:
    """Bisection for the smallest η at which diag(π) passes `check_feasible`."""
    P = require_square(P, "adjacency matrix")
    pi = stationary_distribution(P)
    Q = np.diag(pi / pi.sum())
    lo, hi = 0.0, averagedness_eta(P)
    if hi <= precision:
        return precision
    if not check_feasible(Q, P, hi, tol).feasible:
        hi = 1.0 - precision
    while hi - lo > precision:
        mid = (lo + hi) / 2.0
        if check_feasible(Q, P, mid, tol).feasible:
            hi = mid
        else:
            lo = mid
    return hi
