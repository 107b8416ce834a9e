"""Constraint sets with exact projections and the agents' proximal operators.

Each agent i owns a cost

    f_i(y) = (γ_i / 2)‖y − x*_i‖²_{Q_i} + ι_{X_i}(y)

and its proximal step with respect to the neighbourhood average z is

    prox_i(z) = argmin_y f_i(y) + ½‖y − z‖²_{Q_i}.

When Q_i is a multiple of the identity, or X_i is a box and Q_i is diagonal,
the weight cancels and prox_i(z) = proj_{X_i}((γ_i x*_i + z) / (1 + γ_i)).
Other combinations go through `prox_numerical_oracle`.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import (
    ConvergenceError,
    StructuralError,
    UnsupportedConfigurationError,
    require_finite,
)

ORACLE_TOL = 1e-10
ORACLE_MAX_ITER = 10**6

__all__ = [
    "ConvexSet",
    "Box",
    "Ball",
    "SubBox",
    "AgentCost",
    "CollectiveState",
    "as_collective",
    "project",
    "agent_objective",
    "has_closed_form",
    "prox_agent",
    "prox_numerical_oracle",
    "prox_collective",
]

# A collective state is an (N, n) array; row i is agent i's block and
# `x.ravel()` is the stacked nN-vector.
CollectiveState = np.ndarray


def _vector(values, name: str) -> np.ndarray:
    array = require_finite(np.atleast_1d(np.asarray(values, dtype=float)), name)
    if array.ndim != 1:
        raise StructuralError(f"{name} must be a vector, got shape {array.shape}")
    array = array.copy()
    array.setflags(write=False)
    return array


class ConvexSet(ABC):
    """Non-empty compact convex subset of R^n with an exact Euclidean projection."""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def project(self, x) -> np.ndarray:
        ...

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(self.project(x) - x) <= tol)


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Axis-aligned box ``center ± half_width``; zero widths give a point or a segment.

    Bounds are computed once and kept. A box built with `from_bounds` keeps the
    given bounds bit for bit, so a piece cut at an obstacle edge shares that edge.
    """

    center: np.ndarray
    half_width: np.ndarray

    def __post_init__(self):
        center = _vector(self.center, "box center")
        half_width = _vector(np.broadcast_to(self.half_width, center.shape), "box half_width")
        if np.any(half_width < 0):
            logger.error(f"Box half widths must be nonnegative, got {half_width}")
            raise StructuralError(f"box half widths must be nonnegative, got {half_width}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_width", half_width)
        self._set_bounds(center - half_width, center + half_width)

    def _set_bounds(self, lower: np.ndarray, upper: np.ndarray) -> None:
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "_lower", lower)
        object.__setattr__(self, "_upper", upper)

    @classmethod
    def from_bounds(cls, lower, upper) -> "Box":
        lower = _vector(lower, "box lower bound")
        upper = _vector(upper, "box upper bound")
        if lower.shape != upper.shape or np.any(upper < lower):
            logger.error(f"Box bounds are inconsistent: lower {lower}, upper {upper}")
            raise StructuralError(f"box bounds are inconsistent: lower {lower}, upper {upper}")
        box = cls(center=(lower + upper) / 2.0, half_width=(upper - lower) / 2.0)
        box._set_bounds(lower, upper)
        return box

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def project(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def interior_contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def interiors_overlap(self, other: "Box") -> bool:
        return bool(np.all(self.lower < other.upper) and np.all(other.lower < self.upper))


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vector(self.center, "ball center"))
        if not np.isfinite(self.radius) or self.radius <= 0:
            logger.error(f"Ball radius must be positive, got {self.radius}")
            raise StructuralError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x) -> np.ndarray:
        offset = np.asarray(x, dtype=float) - self.center
        distance = np.linalg.norm(offset)
        if distance <= self.radius:
            return self.center + offset
        return self.center + offset * (self.radius / distance)


@dataclass(frozen=True, eq=False)
class SubBox(ConvexSet):
    """Box `outer` with an obstacle carved out, represented by the chosen convex piece `resolved`."""

    outer: Box
    obstacle: Box
    resolved: Box

    @property
    def dim(self) -> int:
        return self.resolved.dim

    def project(self, x) -> np.ndarray:
        return self.resolved.project(x)

    @property
    def lower(self) -> np.ndarray:
        return self.resolved.lower

    @property
    def upper(self) -> np.ndarray:
        return self.resolved.upper


@dataclass(frozen=True, eq=False)
class AgentCost:
    """Quadratic-target cost of one agent.

    Attributes:
        gamma: "Discover" weight pulling the agent toward `target`.
        target: Desired state x*_i.
        constraint: Local constraint set X_i.
        weight: Diagonal of Q_i.
    """

    gamma: float
    target: np.ndarray
    constraint: ConvexSet
    weight: np.ndarray

    def __post_init__(self):
        target = _vector(self.target, "target")
        weight = _vector(np.broadcast_to(self.weight, target.shape), "weight")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            logger.error(f"gamma must be nonnegative, got {self.gamma}")
            raise StructuralError(f"gamma must be nonnegative, got {self.gamma}")
        if np.any(weight <= 0):
            logger.error(f"weight diagonal must be positive, got {weight}")
            raise StructuralError(f"weight diagonal must be positive, got {weight}")
        if self.constraint.dim != target.shape[0]:
            raise StructuralError(
                f"constraint dimension {self.constraint.dim} does not match target dimension {target.shape[0]}"
            )
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "weight", weight)

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    def with_constraint(self, constraint: ConvexSet) -> "AgentCost":
        return AgentCost(self.gamma, self.target, constraint, self.weight)

    def with_weight(self, weight) -> "AgentCost":
        return AgentCost(self.gamma, self.target, self.constraint, weight)


def as_collective(x, n_agents: int, n: int) -> CollectiveState:
    """Reshape a stacked nN-vector or an (N, n) array into an (N, n) float array."""
    array = np.asarray(x, dtype=float)
    if array.size != n_agents * n:
        logger.error(f"State has {array.size} entries, expected {n_agents}×{n}")
        raise StructuralError(f"state has {array.size} entries, expected {n_agents * n}")
    return array.reshape(n_agents, n).copy()


def project(constraint: ConvexSet, x) -> np.ndarray:
    """Euclidean projection of `x` onto `constraint`."""
    return constraint.project(x)


def agent_objective(cost: AgentCost, y, z) -> float:
    """(γ/2)‖y − x*‖²_Q + ½‖y − z‖²_Q, or +inf outside the constraint set."""
    y = np.asarray(y, dtype=float)
    if not cost.constraint.contains(y, tol=1e-9):
        return float("inf")
    z = np.asarray(z, dtype=float)
    w = cost.weight
    return float(0.5 * cost.gamma * np.sum(w * (y - cost.target) ** 2) + 0.5 * np.sum(w * (y - z) ** 2))


def has_closed_form(cost: AgentCost) -> bool:
    scalar_weight = bool(np.all(cost.weight == cost.weight[0]))
    return scalar_weight or isinstance(cost.constraint, (Box, SubBox))


def prox_agent(cost: AgentCost, z) -> np.ndarray:
    """Closed-form proximal step of one agent.

    Raises:
        UnsupportedConfigurationError: If Q_i is not scalar and X_i is not a box.
    """
    if not has_closed_form(cost):
        logger.error(
            f"No closed-form prox for a non-scalar weight on a {type(cost.constraint).__name__}; "
            "use prox_numerical_oracle"
        )
        raise UnsupportedConfigurationError(
            "closed-form prox needs Q_i = q·I, or a box constraint with diagonal Q_i; "
            "use prox_numerical_oracle for this agent"
        )
    z = np.asarray(z, dtype=float)
    return cost.constraint.project((cost.gamma * cost.target + z) / (1.0 + cost.gamma))


def prox_numerical_oracle(cost: AgentCost, z, tol: float = ORACLE_TOL,
                          max_iter: int = ORACLE_MAX_ITER) -> np.ndarray:
    """Proximal step by projected gradient descent with step 1/L, L = (1 + γ)·max(Q_i).

    Raises:
        ConvergenceError: If successive iterates still differ by `tol` after `max_iter` steps.
    """
    z = np.asarray(z, dtype=float)
    w = cost.weight
    step = 1.0 / ((1.0 + cost.gamma) * float(np.max(w)))
    y = cost.constraint.project(z)
    for _ in range(max_iter):
        gradient = cost.gamma * w * (y - cost.target) + w * (y - z)
        y_next = cost.constraint.project(y - step * gradient)
        if np.linalg.norm(y_next - y) < tol:
            return y_next
        y = y_next
    logger.error(f"Projected-gradient prox did not converge in {max_iter} iterations")
    raise ConvergenceError(f"projected-gradient prox did not converge in {max_iter} iterations")


def prox_collective(costs: Sequence[AgentCost], z, allow_fallback: bool = False) -> CollectiveState:
    """Blockwise proximal step: block i of the result is prox_i(z_i).

    Args:
        costs: One cost per agent.
        z: Collective point, (N, n) or stacked.
        allow_fallback: Route agents without a closed form to the numerical oracle
            instead of raising.
    """
    if not costs:
        raise StructuralError("at least one agent cost is required")
    n = costs[0].dim
    blocks = as_collective(z, len(costs), n)
    out = np.empty_like(blocks)
    for i, cost in enumerate(costs):
        if cost.dim != n:
            raise StructuralError(f"agent {i + 1} has dimension {cost.dim}, expected {n}")
        if allow_fallback and not has_closed_form(cost):
            out[i] = prox_numerical_oracle(cost, blocks[i])
        else:
            out[i] = prox_agent(cost, blocks[i])
    return out
