"""
Tests for the numeric core: matrix helpers, seeded RNG, finite differences.
"""

import numpy as np
import pytest

from rsg_core.models import NumericError, ShapeError, SpecError
from rsg_core.numeric import (
    ElementwiseOp,
    RngState,
    as_matrix,
    elementwise,
    finite_diff_gradient,
    init_uniform,
    matmul,
    relative_error,
)


class TestMatmul:
    """Standard product and shape errors."""

    def test_identity(self):
        a = np.arange(6, dtype=float).reshape(2, 3)
        assert np.array_equal(matmul(np.eye(2), a), a)

    def test_known_product(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[5.0], [6.0]])
        assert np.array_equal(matmul(a, b), np.array([[17.0], [39.0]]))

    def test_associative_on_random_chains(self, gen):
        for _ in range(100):
            a, b, c = (gen.standard_normal((3, 3)) for _ in range(3))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert relative_error(left, right) < 1e-9

    def test_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError) as exc:
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))
        assert "2x3" in str(exc.value)
        assert exc.value.code == "SHAPE_MISMATCH"
        assert exc.value.exit_code == 3


class TestElementwise:
    """add / sub / mul with shape checks."""

    def test_ops(self):
        a = np.array([[1.0, 2.0]])
        b = np.array([[3.0, 5.0]])
        assert np.array_equal(elementwise(a, b, ElementwiseOp.ADD), [[4.0, 7.0]])
        assert np.array_equal(elementwise(a, b, ElementwiseOp.SUB), [[-2.0, -3.0]])
        assert np.array_equal(elementwise(a, b, "mul"), [[3.0, 10.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            elementwise(np.zeros((1, 2)), np.zeros((2, 1)), ElementwiseOp.ADD)

    def test_as_matrix_promotes_vectors(self):
        m = as_matrix([1, 2, 3])
        assert m.shape == (1, 3)
        assert m.dtype == np.float64
        assert m.flags["C_CONTIGUOUS"]


class TestRngState:
    """Seeded, reproducible stream."""

    def test_same_seed_same_stream(self):
        a, b = RngState(42), RngState(42)
        assert np.array_equal(a.uniform(-1, 1, (4, 5)), b.uniform(-1, 1, (4, 5)))
        assert np.array_equal(a.permutation(10), b.permutation(10))

    def test_different_seeds_differ(self):
        assert not np.array_equal(RngState(1).random((8,)), RngState(2).random((8,)))

    def test_position_counts_draws(self):
        rng = RngState(0)
        rng.random((3, 4))
        rng.uniform(0.0, 1.0, (5,))
        assert rng.position == 17

    def test_pinned_uniform_vector(self):
        # Philox4x64-10 keyed by the seed, counter starting at zero
        values = RngState(1).uniform(-0.5, 0.5, (2, 2))
        expected = np.array([
            [-0.19643196569324139, 0.34870874968577692],
            [-0.34386522195652691, -0.46889356304562391],
        ])
        assert np.array_equal(values, expected)

    def test_pinned_permutation(self):
        assert RngState(1).permutation(8).tolist() == [0, 5, 4, 1, 2, 6, 3, 7]

    def test_pinned_random_vector(self):
        expected = [0.30356803430675861, 0.84870874968577692, 0.15613477804347309]
        assert RngState(1).random((3,)).tolist() == expected

    def test_seed_range(self):
        RngState(2 ** 64 - 1)
        with pytest.raises(SpecError):
            RngState(-1)
        with pytest.raises(SpecError):
            RngState(2 ** 64)


class TestInitUniform:
    """Seeded uniform initialization."""

    def test_bounds_and_determinism(self):
        w1 = init_uniform(RngState(3), 16, 8, 0.25)
        w2 = init_uniform(RngState(3), 16, 8, 0.25)
        assert w1.shape == (16, 8)
        assert np.all(np.abs(w1) <= 0.25)
        assert np.array_equal(w1, w2)

    def test_mean_of_many_draws(self):
        w = init_uniform(RngState(0), 1000, 1000, 1.0)
        assert abs(float(w.mean())) < 0.01

    def test_nonpositive_bound(self):
        with pytest.raises(SpecError):
            init_uniform(RngState(0), 2, 2, 0.0)


class TestFiniteDifferences:
    """Central-difference oracle."""

    def test_quadratic(self, gen):
        x = gen.standard_normal((3, 4))
        grad = finite_diff_gradient(lambda m: float(np.sum(m * m)), x)
        assert np.allclose(grad, 2 * x, atol=1e-8)

    def test_input_untouched(self, gen):
        x = gen.standard_normal((2, 2))
        before = x.copy()
        finite_diff_gradient(lambda m: float(np.sum(np.sin(m))), x)
        assert np.array_equal(x, before)

    def test_non_finite_function_value(self):
        with pytest.raises(NumericError):
            finite_diff_gradient(lambda m: float("nan"), np.zeros((1, 1)))

    def test_relative_error(self):
        a = np.array([1.0, 2.0])
        assert relative_error(a, a) == 0.0
        assert relative_error(np.zeros(2), np.zeros(2)) == 0.0
        assert relative_error(a, -a) == pytest.approx(1.0)
