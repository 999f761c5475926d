"""
Scoring a test item.

    p_b[n] = exp(-delta * (1 - vec(B(x)) . vec(P_n)))     prototype similarity
    p_m[n] = w_n . f                                       head logits (raw)
    p      = alpha * p_b + p_m                             residual fusion

Zero-shot scoring (softmax over cosine / tau against class text features)
is kept for the baseline report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import softmax

from ..errors import ShapeError
from ..head import LinearHead, forward
from ..linalg import as_vector, l2_normalize, l2_normalize_rows
from ..reduction import Projection
from .prototypes import PrototypeSet, image_bdc_vector

logger = logging.getLogger(__name__)


class FusionConfig(BaseModel):
    alpha: float = Field(default=1.0, ge=0.0, description="Residual ratio for prototype scores")
    delta: float = Field(default=1.0, gt=0.0, description="Sharpness of the prototype score")
    tau: float = Field(default=0.01, gt=0.0, description="Zero-shot softmax temperature")


@dataclass(frozen=True)
class AdapterModel:
    head: LinearHead
    projection: Projection
    prototypes: PrototypeSet


@dataclass(frozen=True)
class Prediction:
    label: int
    p_b: np.ndarray
    p_m: np.ndarray
    fused: np.ndarray


def scores_from_cosines(cosines: Any, delta: float) -> np.ndarray:
    cos = np.clip(np.asarray(cosines, dtype=np.float64), -1.0, 1.0)
    return np.exp(-delta * (1.0 - cos))


def prototype_cosines(fmap: Any, protos: PrototypeSet, projection: Projection) -> np.ndarray:
    vec = image_bdc_vector(fmap, projection)
    if vec.shape[0] != protos.proto_dim:
        raise ShapeError(
            f"test BDC vector has length {vec.shape[0]}, prototypes have {protos.proto_dim}"
        )
    return protos.prototypes @ vec


def prototype_scores(
    fmap: Any, protos: PrototypeSet, projection: Projection, delta: float
) -> np.ndarray:
    """Bounded similarity scores in (0, 1], one per class."""
    if delta <= 0.0:
        raise ShapeError("delta must be positive")
    return scores_from_cosines(prototype_cosines(fmap, protos, projection), delta)


def fuse(p_b: Any, p_m: Any, alpha: float) -> np.ndarray:
    p_b = as_vector(p_b, "p_b")
    p_m = as_vector(p_m, "p_m")
    if p_b.shape != p_m.shape:
        raise ShapeError(f"score length mismatch: {p_b.shape[0]} vs {p_m.shape[0]}")
    return alpha * p_b + p_m


def predict(
    embedding: Any,
    fmap: Any,
    head: LinearHead,
    protos: PrototypeSet,
    projection: Projection,
    cfg: FusionConfig,
) -> Prediction:
    """argmax of the fused scores; ties go to the lowest class index."""
    p_m = forward(head, embedding)
    p_b = prototype_scores(fmap, protos, projection, cfg.delta)
    if p_b.shape != p_m.shape:
        raise ShapeError(f"head has {p_m.shape[0]} classes, prototypes {p_b.shape[0]}")
    fused = fuse(p_b, p_m, cfg.alpha)
    return Prediction(label=int(np.argmax(fused)), p_b=p_b, p_m=p_m, fused=fused)


def zero_shot_scores(image_feature: Any, text_features: Any, tau: float) -> np.ndarray:
    """softmax(cos(f, t_n) / tau) over classes."""
    f = l2_normalize(image_feature)
    t = l2_normalize_rows(text_features, "text features")
    if t.shape[1] != f.shape[0]:
        raise ShapeError(f"text dim {t.shape[1]} != image dim {f.shape[0]}")
    return softmax((t @ f) / tau)
