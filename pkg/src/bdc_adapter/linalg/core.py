"""
Matrix / vector plumbing on top of numpy.

A Matrix is a 2-D C-ordered float64 ndarray, a Vector a 1-D one. Public
functions validate shape and finiteness on the way in and never return
non-finite values. Randomness comes only from ``make_rng``; nothing here
touches numpy's global RNG.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from ..errors import ConfigError, DegenerateInputError, NonFiniteError, ShapeError

RNG_ALGORITHM = "PCG64"


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator over numpy's PCG64 bit generator."""
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def _check_finite(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")


def as_matrix(x: Any, name: str = "matrix") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    _check_finite(arr, name)
    return arr


def as_vector(x: Any, name: str = "vector") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    _check_finite(arr, name)
    return arr


def matmul(a: Any, b: Any) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    _check_finite(out, "matmul result")
    return out


def l2_normalize(v: Any) -> np.ndarray:
    v = as_vector(v)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize a zero-norm vector")
    return v / norm


def l2_normalize_rows(a: Any, name: str = "rows") -> np.ndarray:
    a = as_matrix(a, name)
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    bad = np.flatnonzero(norms[:, 0] == 0.0)
    if bad.size:
        raise DegenerateInputError(f"{name}: row {int(bad[0])} has zero norm")
    return a / norms


def frobenius_norm(a: Any) -> float:
    a = as_matrix(a)
    return float(np.sqrt(np.sum(a * a)))
