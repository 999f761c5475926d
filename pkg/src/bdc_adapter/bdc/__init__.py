"""Distance matrices, double-centering, BDC matrices and dependence statistics."""

from .dependence import dcorr, dcov, dcov_oracle, pearson
from .metric import (
    BdcMatrix,
    bdc_matrix,
    bdc_measure,
    distance_matrix,
    double_center,
)

__all__ = [
    "BdcMatrix",
    "bdc_matrix",
    "bdc_measure",
    "dcorr",
    "dcov",
    "dcov_oracle",
    "distance_matrix",
    "double_center",
    "pearson",
]
