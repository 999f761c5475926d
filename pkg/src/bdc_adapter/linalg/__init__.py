"""Dense float64 matrix helpers shared by every other package."""

from .core import (
    RNG_ALGORITHM,
    as_matrix,
    as_vector,
    frobenius_norm,
    l2_normalize,
    l2_normalize_rows,
    make_rng,
    matmul,
)

__all__ = [
    "RNG_ALGORITHM",
    "as_matrix",
    "as_vector",
    "frobenius_norm",
    "l2_normalize",
    "l2_normalize_rows",
    "make_rng",
    "matmul",
]
