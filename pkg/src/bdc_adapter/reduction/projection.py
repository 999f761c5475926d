"""
Dimension reduction: a fixed out_dim x in_dim linear map applied to every
spatial position of a k x m feature map (a 1x1 convolution with frozen
weights). Two kinds: seeded random-orthogonal rows, or the top principal
directions of mean-centered fit data.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..errors import InsufficientDataError, ShapeError
from ..linalg import as_matrix, make_rng

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIM = 64

ProjectionKind = Literal["random-orthogonal", "pca"]


class ProjectionConfig(BaseModel):
    kind: ProjectionKind = "random-orthogonal"
    out_dim: int = Field(default=DEFAULT_OUT_DIM, ge=1)
    seed: int = Field(default=0, ge=0)
    channels_as_observations: bool = Field(
        default=True,
        description="Transpose after projecting so each channel is one BDC observation",
    )


@dataclass(frozen=True)
class Projection:
    kind: str
    in_dim: int
    out_dim: int
    weights: np.ndarray
    seed: int = 0
    channels_as_observations: bool = True

    def equals(self, other: "Projection") -> bool:
        return (
            self.kind == other.kind
            and self.in_dim == other.in_dim
            and self.out_dim == other.out_dim
            and self.seed == other.seed
            and self.channels_as_observations == other.channels_as_observations
            and self.weights.tobytes() == other.weights.tobytes()
        )


def clamp_out_dim(requested: int, in_dim: int) -> int:
    if requested > in_dim:
        logger.info(
            "proj_dim %s exceeds channel count %s; using %s", requested, in_dim, in_dim
        )
        return in_dim
    return requested


def _random_orthogonal(in_dim: int, out_dim: int, seed: int) -> np.ndarray:
    rng = make_rng(seed)
    g = rng.standard_normal((in_dim, out_dim))
    q, r = np.linalg.qr(g)
    # Fix the QR sign ambiguity so the result depends only on the seed.
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    return np.ascontiguousarray((q * signs).T)


def _pca(fit_data: np.ndarray, out_dim: int) -> np.ndarray:
    centered = fit_data - fit_data.mean(axis=0, keepdims=True)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    w = vt[:out_dim].copy()
    pivots = np.argmax(np.abs(w), axis=1)
    signs = np.sign(w[np.arange(out_dim), pivots])
    signs[signs == 0.0] = 1.0
    return np.ascontiguousarray(w * signs[:, None])


def fit_projection(
    kind: str,
    in_dim: int,
    out_dim: int,
    fit_data: Optional[Any] = None,
    seed: int = 0,
    channels_as_observations: bool = True,
) -> Projection:
    if out_dim < 1 or in_dim < 1:
        raise ShapeError(f"dimensions must be positive, got in={in_dim} out={out_dim}")
    if out_dim > in_dim:
        raise ShapeError(f"out_dim {out_dim} exceeds in_dim {in_dim}")

    if kind == "random-orthogonal":
        weights = _random_orthogonal(in_dim, out_dim, seed)
    elif kind == "pca":
        if fit_data is None:
            raise InsufficientDataError("pca projection needs fit data")
        data = as_matrix(fit_data, "fit_data")
        if data.shape[1] != in_dim:
            raise ShapeError(f"fit data has {data.shape[1]} columns, expected {in_dim}")
        if data.shape[0] < out_dim:
            raise InsufficientDataError(
                f"pca needs at least {out_dim} rows of fit data, got {data.shape[0]}"
            )
        weights = _pca(data, out_dim)
    else:
        raise ShapeError(f"unknown projection kind {kind!r}")

    logger.info("Fitted %s projection %s -> %s", kind, in_dim, out_dim)
    return Projection(
        kind=kind,
        in_dim=in_dim,
        out_dim=out_dim,
        weights=weights,
        seed=seed if kind == "random-orthogonal" else 0,
        channels_as_observations=channels_as_observations,
    )


def project(p: Projection, obs: Any) -> np.ndarray:
    """W @ obs: k x m -> out_dim x m."""
    obs = as_matrix(obs, "feature map")
    if obs.shape[0] != p.in_dim:
        raise ShapeError(f"feature map has {obs.shape[0]} rows, projection expects {p.in_dim}")
    return p.weights @ obs


def observation_view(p: Projection, fmap: Any) -> np.ndarray:
    """The matrix whose columns are the BDC observations for this projection."""
    reduced = project(p, fmap)
    if p.channels_as_observations:
        return np.ascontiguousarray(reduced.T)
    return reduced
