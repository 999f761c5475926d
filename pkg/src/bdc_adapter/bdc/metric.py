"""
BDC matrices from observation matrices.

An observation matrix is k x m: m observations (columns) of dimension k.
The pipeline is

    distance_matrix  ->  double_center  ->  (optional unit-Frobenius scaling)

and ``bdc_measure`` is the trace form tr(R_t^T R_s) on two unnormalized
centered matrices. It carries no 1/m^2 factor; ``dependence.dcov_oracle``
returns the same quantity divided by m^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import DegenerateInputError, ShapeError
from ..linalg import as_matrix, frobenius_norm

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class BdcMatrix:
    """Double-centered distance matrix R (m x m)."""

    values: np.ndarray
    normalized: bool = False

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def vec(self) -> np.ndarray:
        """Row-major flattening vec(R), length m*m."""
        return self.values.reshape(-1).copy()


def distance_matrix(obs: Any) -> np.ndarray:
    """Pairwise Euclidean distances between the columns of ``obs``.

    Squared distances use the Gram expansion |t_i|^2 + |t_j|^2 - 2 t_i.t_j,
    with the norms read off the Gram diagonal so identical columns give an
    exact zero, and are clamped at 0 before the square root.
    """
    obs = as_matrix(obs, "observations")
    m = obs.shape[1]
    if m < 2:
        raise ShapeError(f"need at least 2 observation columns, got {m}")
    gram = obs.T @ obs
    gram = 0.5 * (gram + gram.T)
    sq_norms = np.diag(gram)
    sq = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
    np.maximum(sq, 0.0, out=sq)
    d = np.sqrt(sq)
    np.fill_diagonal(d, 0.0)
    return d


def _validate_distances(d: np.ndarray) -> None:
    if d.shape[0] != d.shape[1]:
        raise ShapeError(f"distance matrix must be square, got {d.shape}")
    if d.shape[0] < 2:
        raise ShapeError("distance matrix must be at least 2 x 2")
    scale = max(1.0, float(np.max(np.abs(d))))
    if np.max(np.abs(d - d.T)) > _SYMMETRY_TOL * scale:
        raise ShapeError("distance matrix is not symmetric")
    if np.max(np.abs(np.diag(d))) > _SYMMETRY_TOL * scale:
        raise ShapeError("distance matrix has a non-zero diagonal")
    if np.min(d) < 0.0:
        raise ShapeError("distance matrix has negative entries")


def double_center(d: Any) -> BdcMatrix:
    """r_kl = d_kl - rowmean_k - colmean_l + grandmean (unnormalized)."""
    d = as_matrix(d, "distance matrix")
    _validate_distances(d)
    row_means = d.mean(axis=1)
    col_means = d.mean(axis=0)
    grand = d.mean()
    r = d - row_means[:, None] - col_means[None, :] + grand
    return BdcMatrix(values=r, normalized=False)


def bdc_matrix(obs: Any, normalize: bool = True) -> BdcMatrix:
    """The training-free pooling layer: centered distances of the columns of ``obs``."""
    obs = as_matrix(obs, "observations")
    centered = double_center(distance_matrix(obs))
    if not normalize:
        return centered
    norm = frobenius_norm(centered.values)
    if norm == 0.0 or np.all(obs == obs[:, :1]):
        raise DegenerateInputError(
            "all observations coincide; the BDC matrix is zero and cannot be normalized"
        )
    return BdcMatrix(values=centered.values / norm, normalized=True)


def bdc_measure(rt: BdcMatrix, rs: BdcMatrix) -> float:
    """tr(R_t^T R_s) on two unnormalized BDC matrices of equal size."""
    if rt.size != rs.size:
        raise ShapeError(f"BDC size mismatch: {rt.size} vs {rs.size}")
    if rt.normalized or rs.normalized:
        raise ShapeError("bdc_measure is defined on unnormalized BDC matrices")
    return float(np.einsum("ij,ij->", rt.values, rs.values))
