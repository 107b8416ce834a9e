import numpy as np
import pytest

from proxdyn_helper.core.certify import (
    InfeasibleReport,
    WeightMatrix,
    averagedness_eta,
    check_feasible,
    lmi_residual,
    smallest_certified_eta,
    solve_diagonal_Q,
    symmetric_min_eig,
)
from proxdyn_helper.core.graph import stationary_distribution
from proxdyn_helper.utils.logging import configure_logging
from proxdyn_helper.utils.validation import StructuralError
from . import test_consts
from .conftest import random_stochastic

configure_logging(propagate=True)


def _random_symmetric(rng, m):
    A = rng.normal(size=(m, m))
    return (A + A.T) / 2.0


class TestSymmetricMinEig:

    def test_diagonal_matrix(self):
        value, vector = symmetric_min_eig(np.diag([3.0, -1.0, 2.0]))
        assert value == pytest.approx(-1.0)
        np.testing.assert_allclose(vector, [0.0, 1.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("diagonal", [
        test_consts.ROBOT_Q,
        [3.0, 1e-4, 7.5, 0.2],
        [1e6, 1e-6, 42.0],
    ])
    def test_diagonal_input_stops_before_any_sweep(self, diagonal):
        value, vector = symmetric_min_eig(np.diag(diagonal), max_sweeps=1)
        assert value == min(diagonal)
        assert vector[int(np.argmin(diagonal))] == 1.0

    def test_near_diagonal_converges_quickly(self, rng):
        S = np.diag([3.0, 1e-4, 7.5, 0.2]) + 1e-9 * _random_symmetric(rng, 4)
        value, _ = symmetric_min_eig(S, max_sweeps=5)
        assert value == pytest.approx(np.linalg.eigvalsh(S)[0], abs=1e-14)

    def test_matches_library_eigenvalues(self, rng):
        for _ in range(100):
            S = _random_symmetric(rng, int(rng.integers(1, 9)))
            value, vector = symmetric_min_eig(S)
            assert value == pytest.approx(np.linalg.eigvalsh(S)[0], abs=1e-10)
            assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(S @ vector, value * vector, atol=1e-9)

    def test_eigenvector_sign_is_normalised(self, rng):
        S = _random_symmetric(rng, 5)
        _, vector = symmetric_min_eig(S)
        leading = vector[np.flatnonzero(np.abs(vector) > 1e-12)[0]]
        assert leading > 0

    def test_non_square_raises(self):
        with pytest.raises(StructuralError):
            symmetric_min_eig(np.ones((2, 3)))


class TestWeightMatrix:

    def test_diagonal(self, robot_Q):
        assert robot_Q.N == 4
        assert robot_Q.diagonal_only
        np.testing.assert_array_equal(robot_Q.diagonal, test_consts.ROBOT_Q)
        assert robot_Q.lambda_min == pytest.approx(0.03)
        assert robot_Q.lambda_max == pytest.approx(0.214)

    def test_from_diagonal_of_robot_weights(self):
        Q = WeightMatrix.from_diagonal(test_consts.ROBOT_Q)
        assert Q.lambda_min == min(test_consts.ROBOT_Q)
        assert Q.lambda_max == max(test_consts.ROBOT_Q)

    def test_rejects_non_symmetric(self):
        with pytest.raises(StructuralError):
            WeightMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(StructuralError):
            WeightMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_lift(self, robot_Q):
        lifted = robot_Q.lifted(2)
        np.testing.assert_array_equal(lifted.block(1, 1), 0.214 * np.eye(2))


class TestLmiResidual:

    def test_identity_graph_gives_zero(self, rng):
        Q = np.diag(rng.uniform(0.1, 1.0, size=4))
        np.testing.assert_array_equal(lmi_residual(Q, np.eye(4), 0.5), np.zeros((4, 4)))

    def test_matches_expanded_form(self, rng):
        for _ in range(50):
            N = int(rng.integers(2, 6))
            P = random_stochastic(rng, N)
            A = rng.normal(size=(N, N))
            Q = A @ A.T + N * np.eye(N)
            eta = float(rng.uniform(0.05, 0.95))
            expanded = (2 * eta - 1) * Q + (1 - eta) * (P.T @ Q + Q @ P) - P.T @ Q @ P
            np.testing.assert_allclose(lmi_residual(Q, P, eta), expanded, atol=1e-10)

    def test_consensus_direction_is_in_the_kernel_quadratic_form(self, rng):
        for _ in range(50):
            N = int(rng.integers(2, 6))
            P = random_stochastic(rng, N)
            Q = np.diag(rng.uniform(0.1, 1.0, size=N))
            M = lmi_residual(Q, P, 0.5)
            ones = np.ones(N)
            assert ones @ M @ ones == pytest.approx(0.0, abs=1e-12)
            q = np.diag(Q)
            np.testing.assert_allclose(M @ ones, 0.5 * (q - P.T @ q), atol=1e-12)

    @pytest.mark.parametrize("eta", [0.0, 1.0, -0.1, 1.5])
    def test_eta_outside_open_interval_raises(self, robot_P, robot_Q, eta):
        with pytest.raises(ValueError):
            lmi_residual(robot_Q, robot_P, eta)

    def test_shape_mismatch_raises(self, robot_P):
        with pytest.raises(StructuralError):
            lmi_residual(np.eye(3), robot_P, 0.5)


class TestCheckFeasible:

    def test_reference_weight_is_near_feasible_at_one_half(self, robot_P, robot_Q):
        certificate = check_feasible(robot_Q, robot_P, 0.5)
        assert -3e-3 < certificate.min_eigenvalue < 0.0
        assert not certificate.feasible
        assert certificate.q_positive_definite

    def test_stationary_weight_certifies_averagedness(self, robot_P):
        pi = stationary_distribution(robot_P)
        eta = averagedness_eta(robot_P)
        assert eta == pytest.approx(0.75)
        assert check_feasible(np.diag(pi), robot_P, eta).feasible

    def test_random_graphs_certified_at_averagedness(self, rng):
        for _ in range(30):
            P = random_stochastic(rng, int(rng.integers(2, 7)), self_loop=float(rng.uniform(0.1, 0.6)))
            pi = stationary_distribution(P)
            assert check_feasible(np.diag(pi), P, averagedness_eta(P)).feasible

    def test_non_positive_definite_weight_is_infeasible(self, robot_P):
        certificate = check_feasible(np.zeros((4, 4)), robot_P, 0.75)
        assert not certificate.q_positive_definite
        assert not certificate.feasible


class TestSolveDiagonalQ:

    def test_robot_graph_at_one_half_is_infeasible(self, robot_P):
        result = solve_diagonal_Q(robot_P, eta=0.5, seed=3, restarts=2, iterations=200)
        assert isinstance(result, InfeasibleReport)
        assert not result.feasible
        assert result.best_lambda_min < 0.0
        assert result.seed == 3
        assert result.restarts == 2
        assert len(result.best_diagonal) == 4

    @pytest.mark.parametrize("eta", [0.6, 0.75])
    def test_robot_graph_certified(self, robot_P, eta):
        result = solve_diagonal_Q(robot_P, eta=eta)
        assert isinstance(result, WeightMatrix)
        assert result.diagonal_only
        assert np.max(result.diagonal) == pytest.approx(0.25)
        assert check_feasible(result, robot_P, eta, tol=1e-9).feasible
        ratios = result.diagonal / result.diagonal[1]
        np.testing.assert_allclose(ratios, test_consts.ROBOT_PI_RATIOS, atol=1e-9)

    def test_seed_is_deterministic(self, robot_P):
        first = solve_diagonal_Q(robot_P, eta=0.5, seed=7, restarts=3, iterations=100)
        second = solve_diagonal_Q(robot_P, eta=0.5, seed=7, restarts=3, iterations=100)
        assert first == second

    def test_identity_graph(self):
        result = solve_diagonal_Q(np.eye(3), eta=0.5)
        assert isinstance(result, WeightMatrix)
        np.testing.assert_allclose(result.diagonal, np.full(3, 0.25))


class TestSmallestCertifiedEta:

    def test_robot_graph(self, robot_P):
        eta = smallest_certified_eta(robot_P, precision=1e-6)
        assert 0.5 < eta < 0.6
        pi = stationary_distribution(robot_P)
        assert check_feasible(np.diag(pi), robot_P, eta).feasible
        assert not check_feasible(np.diag(pi), robot_P, eta - 1e-5).feasible
