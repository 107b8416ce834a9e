"""
Shared test fixtures and configuration for the proxdyn_helper tests.
"""

from pathlib import Path

import numpy as np
import pytest

from proxdyn_helper.core.certify import WeightMatrix
from proxdyn_helper.core.dynamics import GameInstance
from proxdyn_helper.core.graph import AdjacencyMatrix
from proxdyn_helper.core.prox import Box
from proxdyn_helper.core.scenario import ObstacleSet, RobotScenario
from . import test_consts

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def rng():
    """Seeded generator for property tests."""
    return np.random.default_rng(20240611)


@pytest.fixture
def configs_dir():
    return CONFIGS_DIR


@pytest.fixture
def robot_P():
    return AdjacencyMatrix.from_array(np.array(test_consts.ROBOT_P))


@pytest.fixture
def robot_Q():
    return WeightMatrix.from_diagonal(test_consts.ROBOT_Q)


@pytest.fixture
def two_agent_game():
    """Scalar game with uniform averaging, γ = 1 and targets 0 and 2; its equilibrium is (0.5, 1.5)."""
    P = AdjacencyMatrix.from_array(np.array(test_consts.TWO_AGENT_P))
    Q = WeightMatrix.from_diagonal([0.5, 0.5])
    box = Box(center=[0.0], half_width=[10.0])
    return GameInstance.build(P, Q, gammas=[1.0, 1.0], targets=test_consts.TWO_AGENT_TARGETS,
                              constraints=[box, box])


@pytest.fixture
def exploration_scenario(robot_P, robot_Q):
    def _build(with_obstacle: bool = False, steps: int = 2000) -> RobotScenario:
        obstacles = ObstacleSet((Box(**test_consts.ROBOT_OBSTACLE),)) if with_obstacle else ObstacleSet()
        return RobotScenario(
            initial=np.array(test_consts.ROBOT_INITIAL),
            targets=np.array(test_consts.ROBOT_TARGETS),
            gammas=np.full(4, test_consts.ROBOT_GAMMA),
            r=test_consts.ROBOT_R,
            epsilon=test_consts.ROBOT_EPSILON,
            P=robot_P,
            Qtilde=robot_Q,
            obstacles=obstacles,
            steps=steps,
        )
    return _build


def random_stochastic(rng, N: int, self_loop: float = 0.2) -> np.ndarray:
    """Random row-stochastic matrix with a full support (strongly connected) and a_ii ≥ self_loop."""
    raw = rng.random((N, N)) + 0.05
    raw /= raw.sum(axis=1, keepdims=True)
    return self_loop * np.eye(N) + (1.0 - self_loop) * raw


def random_doubly_stochastic(rng, N: int, terms: int = 4) -> np.ndarray:
    """Convex combination of the identity and random permutations (Birkhoff)."""
    weights = rng.dirichlet(np.ones(terms + 1))
    matrix = weights[0] * np.eye(N)
    for w in weights[1:]:
        matrix += w * np.eye(N)[rng.permutation(N)]
    # keep the support strongly connected
    cycle = np.roll(np.eye(N), 1, axis=1)
    return 0.9 * matrix + 0.1 * (0.5 * np.eye(N) + 0.5 * cycle)
