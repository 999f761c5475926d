"""Fixed channel reduction applied before BDC pooling."""

from .projection import (
    DEFAULT_OUT_DIM,
    Projection,
    ProjectionConfig,
    clamp_out_dim,
    fit_projection,
    observation_view,
    project,
)

__all__ = [
    "DEFAULT_OUT_DIM",
    "Projection",
    "ProjectionConfig",
    "clamp_out_dim",
    "fit_projection",
    "observation_view",
    "project",
]
