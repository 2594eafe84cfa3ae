import numpy as np
import pytest

from dmoc.lipschitz_bounds import (
    ConvergenceError,
    WeightStack,
    power_iteration,
    random_stack,
    relu_forward,
    spectral_norm,
    trivial_bound,
)
from dmoc.metric_space import DataSet
from dmoc.seminorms import lipschitz_from_dmoc


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-15)

    def test_close_singular_values(self):
        # slow convergence; the Ritz step still recovers sigma
        M = np.diag([1.0, 0.99, 0.5])
        assert spectral_norm(M) == pytest.approx(1.0, rel=1e-14)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((2, 3))) == 0.0

    def test_against_dense_eigensolver(self, rng):
        for _ in range(50):
            M = rng.standard_normal((5, 8))
            oracle = np.sqrt(np.linalg.eigvalsh(M.T @ M).max())
            assert spectral_norm(M) == pytest.approx(oracle, rel=1e-12)

    def test_deterministic(self, rng):
        M = rng.standard_normal((6, 6))
        assert spectral_norm(M) == spectral_norm(M)

    def test_non_convergence_is_reported(self):
        # two nearly equal singular values converge slowly
        M = np.diag([1.0, 1.0 - 1e-9, 0.5])
        with pytest.raises(ConvergenceError) as info:
            spectral_norm(M, tol=1e-16, max_iter=5)
        assert info.value.last_estimate == pytest.approx(1.0, rel=1e-4)
        res = power_iteration(M, tol=1e-16, max_iter=5)
        assert not res.converged and res.iterations == 5

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            spectral_norm(np.array([[np.nan]]))


class TestWeightStack:
    def test_shape_chain(self):
        with pytest.raises(ValueError, match="layers 0 and 1"):
            WeightStack([np.ones((3, 2)), np.ones((4, 4))])

    def test_activation_constants(self):
        with pytest.raises(ValueError):
            WeightStack([np.eye(2)], [0.0])
        with pytest.raises(ValueError):
            WeightStack([np.eye(2), np.eye(2)], [1.0])


class TestTrivialBound:
    def test_single(self):
        assert trivial_bound(WeightStack([np.diag([2.0])])) == pytest.approx(2.0, rel=1e-12)

    def test_product(self):
        assert trivial_bound(WeightStack([np.diag([2.0, 1.0]), np.diag([3.0, 0.5])])) == pytest.approx(6.0, rel=1e-12)

    def test_activation_scaling(self):
        assert trivial_bound(WeightStack([np.eye(2), np.eye(2)], [2.0, 0.5])) == pytest.approx(1.0, rel=1e-12)

    def test_dominates_dmoc_estimate(self, rng):
        for _ in range(10):
            stack = random_stack(rng, int(rng.integers(1, 5)), 4, 16)
            X = rng.uniform(-1, 1, (400, 4))
            ds = DataSet(X, relu_forward(stack, X))
            assert trivial_bound(stack) >= lipschitz_from_dmoc(ds).value

    def test_one_layer_is_exact(self, rng):
        W = rng.standard_normal((3, 5))
        X = rng.uniform(-1, 1, (2000, 5))
        est = lipschitz_from_dmoc(DataSet(X, relu_forward(WeightStack([W]), X))).value
        bound = trivial_bound(WeightStack([W]))
        assert bound == pytest.approx(np.linalg.svd(W, compute_uv=False)[0], rel=1e-8)
        assert 0.5 * bound < est <= bound


def test_one_input_linear_layer_attains_bound_up_to_rounding(rng):
    # every pair realizes |w|, so only output rounding separates the two
    stack = WeightStack([rng.standard_normal((16, 1))])
    X = rng.uniform(-1, 1, (1000, 1))
    est = lipschitz_from_dmoc(DataSet(X, relu_forward(stack, X))).value
    assert est == pytest.approx(trivial_bound(stack), rel=1e-9)


def test_relu_forward_matches_manual(rng):
    W1 = rng.standard_normal((4, 3))
    W2 = rng.standard_normal((2, 4))
    x = rng.standard_normal(3)
    expected = W2 @ np.maximum(W1 @ x, 0)
    assert np.allclose(relu_forward(WeightStack([W1, W2]), x)[0], expected)
