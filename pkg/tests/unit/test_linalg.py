"""Unit tests for the float64 matrix helpers."""

import numpy as np
import pytest

from bdc_adapter.errors import ConfigError, DegenerateInputError, NonFiniteError, ShapeError
from bdc_adapter.linalg import (
    RNG_ALGORITHM,
    as_matrix,
    frobenius_norm,
    l2_normalize,
    l2_normalize_rows,
    make_rng,
    matmul,
)


def test_make_rng_is_seed_deterministic():
    assert RNG_ALGORITHM == "PCG64"
    a = make_rng(42).standard_normal(5)
    b = make_rng(42).standard_normal(5)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, make_rng(43).standard_normal(5))


def test_make_rng_rejects_out_of_range_seed():
    for seed in (-1, 2**64):
        with pytest.raises(ConfigError) as err:
            make_rng(seed)
        assert err.value.exit_code == 1
    make_rng(2**64 - 1)


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    np.testing.assert_allclose(matmul(np.eye(2), [[1.0, 2.0], [3.0, 4.0]]), [[1, 2], [3, 4]])


def test_as_matrix_rejects_nan_and_wrong_rank():
    with pytest.raises(NonFiniteError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ShapeError):
        as_matrix([1.0, 2.0])


def test_l2_normalize_three_four_five():
    np.testing.assert_allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8])
    with pytest.raises(DegenerateInputError):
        l2_normalize([0.0, 0.0])


def test_l2_normalize_rows_zero_row():
    out = l2_normalize_rows([[3.0, 4.0], [0.0, 2.0]])
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), [1.0, 1.0])
    with pytest.raises(DegenerateInputError):
        l2_normalize_rows([[1.0, 0.0], [0.0, 0.0]])


def test_frobenius_norm():
    assert frobenius_norm([[3.0, 0.0], [0.0, 4.0]]) == pytest.approx(5.0)


def test_matmul_matches_triple_loop_and_associates():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))
    loop = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for k in range(4):
                loop[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose(matmul(a, b), loop, atol=1e-12)
    for _ in range(10):
        x, y, z = (rng.standard_normal(s) for s in ((3, 5), (5, 4), (4, 6)))
        left = matmul(matmul(x, y), z)
        right = matmul(x, matmul(y, z))
        assert np.linalg.norm(left - right) <= 1e-9 * np.linalg.norm(left)
    assert not np.any(matmul([[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]))


def test_l2_normalize_is_idempotent():
    rng = np.random.default_rng(1)
    for _ in range(10):
        once = l2_normalize(rng.standard_normal(7))
        np.testing.assert_allclose(l2_normalize(once), once, atol=1e-12)


def test_frobenius_norm_agrees_with_trace_form():
    rng = np.random.default_rng(2)
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    for _ in range(10):
        a = rng.standard_normal((5, 5))
        assert frobenius_norm(a) == pytest.approx(np.sqrt(np.sum(a * a)), abs=1e-12)
        assert frobenius_norm(a) == pytest.approx(np.sqrt(np.trace(a.T @ a)), abs=1e-10)
