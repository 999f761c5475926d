"""BDC-Adapter: Brownian distance covariance prototypes plus a reasoning head
for few-shot classification."""

__version__ = "0.1.0"
__author__ = "BDC Adapter Team"
__description__ = (
    "Offline few-shot classifier over precomputed feature banks: BDC prototype "
    "similarity fused with a text-initialized linear head"
)
