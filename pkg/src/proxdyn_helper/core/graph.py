"""Communication matrices: validation, self-loop margin and Kronecker lifts.

An adjacency matrix P holds the weight a_ij that agent i gives to the state
of agent j. The rules checked here are nonnegativity, unit row sums,
strictly positive self-loops and strong connectivity of the support digraph
(edge j -> i iff a_ij > 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import (
    GraphValidationError,
    StructuralError,
    ValidationReport,
    require_square,
)

DEFAULT_ROW_TOL = 1e-9

__all__ = [
    "DEFAULT_ROW_TOL",
    "AdjacencyMatrix",
    "LiftedMatrix",
    "validate_adjacency",
    "min_self_loop",
    "kron_lift",
    "is_strongly_connected",
    "stationary_distribution",
]


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def is_strongly_connected(P) -> bool:
    """True when the support digraph of `P` has a single strongly connected component."""
    support = csr_matrix(np.asarray(P) > 0)
    n_components, _ = connected_components(support, directed=True, connection="strong")
    return n_components == 1


def validate_adjacency(P, row_tol: float = DEFAULT_ROW_TOL) -> ValidationReport:
    """Check every adjacency rule and list the ones that fail.

    Args:
        P: Square array of weights.
        row_tol: Allowed deviation of each row sum from 1.

    Returns:
        A report whose violations name the failing rule and, for row sums and
        self-loops, the 1-based row.

    Raises:
        StructuralError: If `P` is not square or holds non-finite values.
    """
    P = require_square(P, "adjacency matrix")
    violations: list[str] = []

    negative = np.argwhere(P < 0)
    for i, j in negative:
        violations.append(f"entry ({i + 1},{j + 1}) is negative ({P[i, j]:g})")

    row_sums = P.sum(axis=1)
    for i, total in enumerate(row_sums):
        if abs(total - 1.0) > row_tol:
            violations.append(f"row {i + 1} sums to {total:.12g}")

    diagonal = np.diag(P)
    for i, a_ii in enumerate(diagonal):
        if not a_ii > 0:
            violations.append(f"self-loop a_{i + 1}{i + 1} is not strictly positive ({a_ii:g})")

    if not is_strongly_connected(P):
        violations.append("graph is not strongly connected")

    if violations:
        logger.debug(f"Adjacency validation failed: {violations}")
    return ValidationReport.from_violations(violations)


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """A validated row-stochastic communication matrix with self-loops."""

    entries: np.ndarray
    row_tol: float = DEFAULT_ROW_TOL

    @classmethod
    def from_array(cls, P, row_tol: float = DEFAULT_ROW_TOL) -> "AdjacencyMatrix":
        report = validate_adjacency(P, row_tol)
        if not report.is_valid:
            logger.error(f"Invalid adjacency matrix: {'; '.join(report.violations)}")
            raise GraphValidationError(report)
        return cls(entries=_readonly(P), row_tol=row_tol)

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    @property
    def a_bar(self) -> float:
        return min_self_loop(self)

    def lifted(self, n: int) -> "LiftedMatrix":
        return kron_lift(self, n)

    @cached_property
    def self_loops(self) -> np.ndarray:
        return _readonly(np.diag(self.entries))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class LiftedMatrix:
    """`base ⊗ I_n`, stored densely."""

    base: object
    n: int
    entries: np.ndarray

    def block(self, i: int, j: int) -> np.ndarray:
        n = self.n
        return self.entries[i * n:(i + 1) * n, j * n:(j + 1) * n]

    def __matmul__(self, other):
        if isinstance(other, LiftedMatrix):
            return self.entries @ other.entries
        return self.entries @ np.asarray(other, dtype=float)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def min_self_loop(P) -> float:
    """ā = min_i a_ii."""
    return float(np.min(np.diag(np.asarray(P, dtype=float))))


def kron_lift(M, n: int) -> LiftedMatrix:
    """Lift an N×N coupling matrix to act on stacked n-dimensional agent states.

    Raises:
        StructuralError: If `M` is not square or `n` is not a positive integer.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        logger.error(f"Lift dimension must be a positive integer, got {n!r}")
        raise StructuralError(f"lift dimension must be a positive integer, got {n!r}")
    base_entries = require_square(M, "lifted matrix base")
    return LiftedMatrix(base=M, n=int(n), entries=_readonly(np.kron(base_entries, np.eye(int(n)))))


def stationary_distribution(P) -> np.ndarray:
    """Left Perron vector π of a row-stochastic matrix, normalised to sum 1.

    Solves ``[Pᵀ − I; 1ᵀ] π = [0; 1]`` in the least-squares sense; when the
    stationary vector is not unique (e.g. P = I) the minimum-norm solution
    is returned.
    """
    P = require_square(P, "adjacency matrix")
    N = P.shape[0]
    system = np.vstack([P.T - np.eye(N), np.ones((1, N))])
    rhs = np.zeros(N + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return pi
