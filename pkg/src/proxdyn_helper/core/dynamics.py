"""Time-invariant proximal dynamics and network-equilibrium residuals.

The Picard iteration x(k+1) = prox(A x(k)) with A = P ⊗ I_n, its stopping
rule in the Q̃-lifted norm, and the explicit projected forward-backward
update used by the robot exploration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from proxdyn_helper.core.certify import WeightMatrix
from proxdyn_helper.core.graph import AdjacencyMatrix, kron_lift
from proxdyn_helper.core.prox import (
    AgentCost,
    CollectiveState,
    ConvexSet,
    as_collective,
    prox_collective,
)
from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import StructuralError

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10**5

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
    "GameInstance",
    "Trajectory",
    "picard_step",
    "iterate",
    "nwe_residual",
    "fb_step",
    "project_state",
]


@dataclass(frozen=True, eq=False)
class GameInstance:
    """Agents, their couplings and the certifying weight of one game."""

    P: AdjacencyMatrix
    n: int
    costs: tuple[AgentCost, ...]
    Qtilde: WeightMatrix
    eta: float = 0.5

    def __post_init__(self):
        costs = tuple(self.costs)
        object.__setattr__(self, "costs", costs)
        if len(costs) != self.P.N:
            raise StructuralError(f"{len(costs)} agent costs for a {self.P.N}-agent graph")
        if self.Qtilde.N != self.P.N:
            raise StructuralError(f"weight is {self.Qtilde.N}×{self.Qtilde.N}, graph has {self.P.N} agents")
        for i, cost in enumerate(costs):
            if cost.dim != self.n:
                raise StructuralError(f"agent {i + 1} has dimension {cost.dim}, expected {self.n}")
        if self.Qtilde.diagonal_only:
            expected = self.Qtilde.diagonal
            for i, cost in enumerate(costs):
                if not np.allclose(cost.weight, expected[i], rtol=0.0, atol=1e-12):
                    logger.error(f"Agent {i + 1} weight {cost.weight} differs from Q̃[{i + 1},{i + 1}]={expected[i]}")
                    raise StructuralError(f"agent {i + 1} weight does not match the collective weight")

    @classmethod
    def build(cls, P: AdjacencyMatrix, Qtilde: WeightMatrix, gammas: Sequence[float], targets,
              constraints: Sequence[ConvexSet], eta: float = 0.5) -> "GameInstance":
        """Assemble a game whose per-agent weights are read off the diagonal of Q̃."""
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        counts = {"gammas": len(gammas), "targets": len(targets), "constraints": len(constraints),
                  "weights": Qtilde.N}
        for name, count in counts.items():
            if count != P.N:
                logger.error(f"Got {count} {name} for a {P.N}-agent graph")
                raise StructuralError(f"{count} {name} for a {P.N}-agent graph")
        n = targets.shape[1]
        weights = Qtilde.diagonal
        costs = tuple(
            AgentCost(gamma=g, target=t, constraint=c, weight=np.full(n, w))
            for g, t, c, w in zip(gammas, targets, constraints, weights)
        )
        return cls(P=P, n=n, costs=costs, Qtilde=Qtilde, eta=eta)

    @property
    def N(self) -> int:
        return self.P.N

    @cached_property
    def A(self) -> np.ndarray:
        return kron_lift(self.P, self.n).entries

    @cached_property
    def Q_lifted(self) -> np.ndarray:
        return kron_lift(self.Qtilde, self.n).entries

    @cached_property
    def D_lifted(self) -> np.ndarray:
        return kron_lift(np.diag(1.0 - self.P.self_loops), self.n).entries

    @property
    def gammas(self) -> np.ndarray:
        return np.array([c.gamma for c in self.costs])

    @property
    def targets(self) -> CollectiveState:
        return np.vstack([c.target for c in self.costs])

    def norm(self, v) -> float:
        """‖v‖ in the Q̃ ⊗ I_n norm."""
        flat = np.asarray(v, dtype=float).ravel()
        return float(np.sqrt(max(flat @ self.Q_lifted @ flat, 0.0)))

    def state(self, x) -> CollectiveState:
        return as_collective(x, self.N, self.n)

    def with_constraints(self, constraints: Sequence[ConvexSet]) -> "GameInstance":
        costs = tuple(c.with_constraint(s) for c, s in zip(self.costs, constraints, strict=True))
        return GameInstance(P=self.P, n=self.n, costs=costs, Qtilde=self.Qtilde, eta=self.eta)


@dataclass
class Trajectory:
    """Recorded run of a dynamics.

    `residuals[j]` belongs to the step that produced `states[j + 1]`;
    `steps[j]` is the iteration index of `states[j]`; `modes[j]` (switched runs
    only) is the mode active for that step.
    """

    states: list[CollectiveState] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    steps: list[int] = field(default_factory=list)
    modes: list[int] = field(default_factory=list)
    projected_initial: bool = False

    @property
    def final(self) -> CollectiveState:
        return self.states[-1]

    def record(self, step: int, state: CollectiveState, residual: float | None = None,
               mode: int | None = None) -> None:
        if residual is not None:
            self.residuals.append(float(residual))
        if mode is not None:
            self.modes.append(int(mode))
        self.steps.append(int(step))
        self.states.append(np.array(state, copy=True))


def project_state(game: GameInstance, x) -> CollectiveState:
    x = game.state(x)
    return np.vstack([c.constraint.project(x[i]) for i, c in enumerate(game.costs)])


def picard_step(game: GameInstance, x) -> CollectiveState:
    """prox(A x) for the game's agents."""
    x = game.state(x)
    z = (game.A @ x.ravel()).reshape(game.N, game.n)
    return prox_collective(game.costs, z)


def nwe_residual(game: GameInstance, x) -> float:
    """‖picard_step(x) − x‖ in the Q̃-lifted norm; zero exactly at a network equilibrium."""
    x = game.state(x)
    return game.norm(picard_step(game, x) - x)


def iterate(game: GameInstance, x0, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
            stride: int = 1) -> Trajectory:
    """Picard iteration until ‖x(k+1) − x(k)‖_Q̃ < tol or `max_iter` steps.

    Initial blocks outside their sets are projected in first and the
    trajectory is flagged. With `stride` > 1 only every stride-th state (and
    the last one) is stored.
    """
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    x = game.state(x0)
    trajectory = Trajectory()
    projected = project_state(game, x)
    if not np.array_equal(projected, x):
        logger.warning("Initial state outside the constraint sets; projected before iterating")
        trajectory.projected_initial = True
        x = projected
    trajectory.record(0, x)

    for k in range(1, max_iter + 1):
        x_next = picard_step(game, x)
        residual = game.norm(x_next - x)
        x = x_next
        trajectory.iterations = k
        if residual < tol:
            trajectory.converged = True
            trajectory.record(k, x, residual)
            break
        if k % stride == 0 or k == max_iter:
            trajectory.record(k, x, residual)

    if trajectory.converged:
        logger.info(f"Picard iteration converged after {trajectory.iterations} steps")
    else:
        logger.warning(f"Picard iteration stopped at max_iter={max_iter} without reaching tol={tol:g}")
    return trajectory


def fb_step(game: GameInstance, x, epsilon: float,
            constraints: Sequence[ConvexSet] | None = None) -> CollectiveState:
    """Projected forward-backward update

        x⁺ = proj_X[x − ε(Q̃(γ ⊙ (x − x*)) + D(x − A x))],  D = diag(1 − a_ii) ⊗ I_n,

    with γ applied blockwise. `constraints` overrides the agents' own sets
    for this call.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    x = game.state(x)
    flat = x.ravel()
    pull = (np.repeat(game.gammas, game.n) * (flat - game.targets.ravel()))
    forward = flat - epsilon * (game.Q_lifted @ pull + game.D_lifted @ (flat - game.A @ flat))
    sets = constraints if constraints is not None else [c.constraint for c in game.costs]
    if len(sets) != game.N:
        raise StructuralError(f"{len(sets)} constraint sets for {game.N} agents")
    forward = forward.reshape(game.N, game.n)
    return np.vstack([s.project(forward[i]) for i, s in enumerate(sets)])
