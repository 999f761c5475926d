"""
Dependence statistics on paired samples (rows are samples).

``dcov_oracle`` is a deliberately naive reference: explicit pairwise loops and
explicit mean subtraction, no matrix algebra. It returns the V-statistic
dCov^2 = (1/n^2) sum A_kl B_kl, i.e. the trace measure of ``metric`` divided
by n^2. ``dcov`` / ``dcorr`` use the vectorized ``metric`` path.
"""

from __future__ import annotations

import math
from typing import Any, List

import numpy as np
from scipy import stats

from ..errors import DegenerateInputError, ShapeError
from ..linalg import as_matrix, as_vector
from .metric import bdc_measure, distance_matrix, double_center


def _as_samples(x: Any, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return as_matrix(arr, name)


def _paired(x: Any, y: Any) -> tuple[np.ndarray, np.ndarray]:
    xs = _as_samples(x, "x_samples")
    ys = _as_samples(y, "y_samples")
    if xs.shape[0] != ys.shape[0]:
        raise ShapeError(f"sample count mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    if xs.shape[0] < 2:
        raise ShapeError("need at least 2 paired samples")
    return xs, ys


def _loop_centered_distances(samples: np.ndarray) -> List[List[float]]:
    rows = samples.tolist()
    n = len(rows)
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(rows[i], rows[j])))
            d[i][j] = dist
            d[j][i] = dist

    row_means = [sum(d[i]) / n for i in range(n)]
    col_means = [sum(d[i][j] for i in range(n)) / n for j in range(n)]
    grand = sum(row_means) / n
    return [
        [d[i][j] - row_means[i] - col_means[j] + grand for j in range(n)]
        for i in range(n)
    ]


def dcov_oracle(x_samples: Any, y_samples: Any) -> float:
    """Brute-force squared distance covariance (V-statistic)."""
    xs, ys = _paired(x_samples, y_samples)
    n = xs.shape[0]
    a = _loop_centered_distances(xs)
    b = _loop_centered_distances(ys)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i][j] * b[i][j]
    return total / (n * n)


def _centered(samples: np.ndarray):
    return double_center(distance_matrix(samples.T))


def dcov(x_samples: Any, y_samples: Any) -> float:
    """Squared distance covariance via the vectorized path (same value as the oracle)."""
    xs, ys = _paired(x_samples, y_samples)
    n = xs.shape[0]
    return bdc_measure(_centered(xs), _centered(ys)) / (n * n)


def dcorr(x_samples: Any, y_samples: Any) -> float:
    """Distance correlation dCov / sqrt(dVar_x dVar_y), in [0, 1]."""
    xs, ys = _paired(x_samples, y_samples)
    a = _centered(xs)
    b = _centered(ys)
    v_xx = bdc_measure(a, a)
    v_yy = bdc_measure(b, b)
    if v_xx <= 0.0 or v_yy <= 0.0:
        raise DegenerateInputError("distance variance is zero (constant sample)")
    v_xy = max(bdc_measure(a, b), 0.0)
    return float(min(1.0, math.sqrt(v_xy / math.sqrt(v_xx * v_yy))))


def pearson(x: Any, y: Any) -> float:
    """Pearson correlation of two 1-D samples."""
    xv = as_vector(x, "x")
    yv = as_vector(y, "y")
    if xv.shape != yv.shape:
        raise ShapeError(f"sample count mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    if np.ptp(xv) == 0.0 or np.ptp(yv) == 0.0:
        raise DegenerateInputError("Pearson correlation undefined for a constant sample")
    return float(stats.pearsonr(xv, yv)[0])
