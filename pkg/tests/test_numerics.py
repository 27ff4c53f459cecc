import numpy as np
import pytest

from grassopt import numerics
from grassopt.errors import DimensionError, NumericalError


def test_dot_orthogonal_basis():
    assert numerics.dot([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_dot_analytic():
    assert numerics.dot([2.0, 3.0], [2.0, 3.0]) == 13.0


def test_dot_matches_elementwise_oracle():
    rng = np.random.default_rng(7)
    a = rng.standard_normal(50)
    oracle = sum(float(v) * float(v) for v in a)
    assert numerics.dot(a, a) == pytest.approx(oracle, rel=1e-14)


def test_dot_length_mismatch():
    with pytest.raises(DimensionError):
        numerics.dot([1.0, 2.0], [1.0, 2.0, 3.0])


def test_norm_zero_vector():
    assert numerics.norm([0.0, 0.0, 0.0]) == 0.0


def test_norm_analytic():
    assert numerics.norm([3.0, 4.0]) == pytest.approx(5.0, abs=1e-15)


def test_norm_matches_dot_oracle():
    rng = np.random.default_rng(11)
    a = rng.standard_normal(33)
    assert numerics.norm(a) == pytest.approx(np.sqrt(numerics.dot(a, a)), rel=1e-14)


def test_matmul_identity():
    rng = np.random.default_rng(3)
    b = rng.standard_normal((4, 5))
    assert np.array_equal(numerics.matmul(np.eye(4), b), b)


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        numerics.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_frobenius_norm_analytic():
    assert numerics.frobenius_norm([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(np.sqrt(2.0))


def test_frobenius_squared_is_sum_of_squares():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((6, 4))
    assert numerics.frobenius_norm(a) ** 2 == pytest.approx(float(np.sum(a * a)), rel=1e-12)


def test_trace_cyclic_property():
    rng = np.random.default_rng(9)
    for _ in range(20):
        a = rng.standard_normal((5, 5))
        b = rng.standard_normal((5, 5))
        t1 = numerics.trace(numerics.matmul(a, b))
        t2 = numerics.trace(numerics.matmul(b, a))
        assert t1 == pytest.approx(t2, rel=1e-12, abs=1e-12)


def test_transpose_round_trip():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((3, 7))
    assert np.array_equal(numerics.transpose(numerics.transpose(a)), a)


def _random_spd(n, rng):
    b = rng.standard_normal((n, n))
    return b @ b.T + n * np.eye(n)


def test_solve_spd_residual_oracle():
    rng = np.random.default_rng(17)
    for _ in range(10):
        a = _random_spd(8, rng)
        inv = numerics.solve_spd(a, np.eye(8))
        residual = numerics.frobenius_norm(a @ inv - np.eye(8)) / numerics.frobenius_norm(np.eye(8))
        assert residual < 1e-10


def test_solve_spd_rejects_indefinite():
    a = np.diag([1.0, -1.0])
    with pytest.raises(NumericalError):
        numerics.solve_spd(a, np.eye(2))


def test_solve_spd_rejects_asymmetric():
    a = np.array([[2.0, 1.0], [0.0, 2.0]])
    with pytest.raises(NumericalError):
        numerics.solve_spd(a, np.eye(2))


def test_solve_spd_shape_checks():
    with pytest.raises(DimensionError):
        numerics.solve_spd(np.eye(3), np.eye(2))


def test_non_finite_rejected():
    with pytest.raises(NumericalError):
        numerics.as_vector([1.0, np.nan])
    with pytest.raises(NumericalError):
        numerics.as_matrix([[np.inf, 0.0], [0.0, 1.0]])
