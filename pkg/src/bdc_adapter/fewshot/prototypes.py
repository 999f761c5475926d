"""
Class-specific BDC prototypes.

Each support image is reduced, pooled into a unit-Frobenius BDC matrix and
vectorized; a class prototype is the mean of its M vectors re-normalized to
unit length, so the prototype score below is a true cosine.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from ..bdc import bdc_matrix
from ..errors import DegenerateInputError, ShapeError
from ..reduction import (
    Projection,
    ProjectionConfig,
    clamp_out_dim,
    fit_projection,
    observation_view,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrototypeSet:
    prototypes: np.ndarray  # (N, side*side), unit rows
    side: int
    shots: int
    class_names: tuple = ()

    @property
    def num_classes(self) -> int:
        return int(self.prototypes.shape[0])

    @property
    def proto_dim(self) -> int:
        return int(self.prototypes.shape[1])

    def equals(self, other: "PrototypeSet") -> bool:
        return (
            self.side == other.side
            and self.shots == other.shots
            and tuple(self.class_names) == tuple(other.class_names)
            and self.prototypes.tobytes() == other.prototypes.tobytes()
        )


def image_bdc_vector(fmap: Any, projection: Projection, normalize: bool = True) -> np.ndarray:
    """vec(B(x)) for one feature map."""
    try:
        b = bdc_matrix(observation_view(projection, fmap), normalize=normalize)
    except DegenerateInputError as e:
        raise DegenerateInputError(f"degenerate image: {e}") from e
    return b.vec()


def average_prototype(vectors: Any) -> np.ndarray:
    """Normalized arithmetic mean of the per-shot vectors."""
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1:
        raise ShapeError("need at least one shot vector")
    mean = v.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise DegenerateInputError("shot vectors cancel out; prototype has zero norm")
    return mean / norm


def build_prototypes(
    support_maps: Sequence[Sequence[Any]],
    projection: Projection,
    normalize: bool = True,
    class_names: Optional[Sequence[str]] = None,
) -> PrototypeSet:
    """One prototype per class from ``support_maps[class][shot]``."""
    if len(support_maps) < 1:
        raise ShapeError("need at least one class")
    shapes = {np.shape(fmap) for shots in support_maps for fmap in shots}
    if len(shapes) > 1:
        raise ShapeError(f"support feature maps differ in shape: {sorted(shapes)}")

    protos = []
    shot_counts = set()
    for c, shots in enumerate(support_maps):
        if len(shots) < 1:
            raise ShapeError(f"class {c} has no support shots")
        shot_counts.add(len(shots))
        vecs = np.stack([image_bdc_vector(fmap, projection, normalize) for fmap in shots])
        protos.append(average_prototype(vecs))

    stacked = np.stack(protos)
    side = int(round(np.sqrt(stacked.shape[1])))
    logger.info(
        "Built %d prototypes of side %d from %s shots", stacked.shape[0], side, sorted(shot_counts)
    )
    return PrototypeSet(
        prototypes=stacked,
        side=side,
        shots=max(shot_counts),
        class_names=tuple(class_names or ()),
    )


def fit_episode_projection(support_maps: np.ndarray, cfg: ProjectionConfig) -> Projection:
    """Fit the reduction for an episode; PCA sees every support position as a sample."""
    maps = np.asarray(support_maps, dtype=np.float64)
    k = int(maps.shape[-2])
    out_dim = clamp_out_dim(cfg.out_dim, k)
    fit_data = None
    if cfg.kind == "pca":
        fit_data = np.swapaxes(maps.reshape(-1, k, maps.shape[-1]), 1, 2).reshape(-1, k)
    return fit_projection(
        cfg.kind,
        in_dim=k,
        out_dim=out_dim,
        fit_data=fit_data,
        seed=cfg.seed,
        channels_as_observations=cfg.channels_as_observations,
    )
