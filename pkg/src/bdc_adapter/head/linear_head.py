"""
One-layer multi-modal reasoning head psi(f) = W f (no bias).

Row n of W is the class weight w_n; image and text features share the
same L2-normalized embedding space, so the same head scores both.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import ShapeError
from ..linalg import as_matrix, as_vector, l2_normalize_rows, make_rng

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-10


@dataclass(frozen=True)
class LinearHead:
    weights: np.ndarray

    @property
    def num_classes(self) -> int:
        return int(self.weights.shape[0])

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])


@dataclass(frozen=True)
class Batch:
    """Mixed image/text samples: unit-norm rows and their class indices.

    The last ``text_rows`` rows are prompt features; the trainer redraws them
    from the class templates on every step.
    """

    features: np.ndarray
    labels: np.ndarray
    text_rows: int = 0

    @property
    def size(self) -> int:
        return int(self.labels.shape[0])


def make_batch(
    features: Any, labels: Any, num_classes: int, text_rows: int = 0
) -> Batch:
    feats = as_matrix(features, "batch features")
    labs = np.asarray(labels, dtype=np.int64).reshape(-1)
    if feats.shape[0] != labs.shape[0]:
        raise ShapeError(f"{feats.shape[0]} feature rows but {labs.shape[0]} labels")
    if labs.size and (labs.min() < 0 or labs.max() >= num_classes):
        raise ShapeError(f"labels must lie in [0, {num_classes})")
    norms = np.linalg.norm(feats, axis=1)
    if feats.shape[0] and np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
        raise ShapeError("batch features must be L2-normalized rows")
    if not 0 <= text_rows <= labs.shape[0]:
        raise ShapeError(f"text_rows {text_rows} outside [0, {labs.shape[0]}]")
    return Batch(features=feats, labels=labs, text_rows=text_rows)


def init_from_text(text_features: Any) -> LinearHead:
    """w_n = normalize(text feature of class n)."""
    return LinearHead(weights=l2_normalize_rows(text_features, "text features"))


def init_random(num_classes: int, dim: int, seed: int) -> LinearHead:
    """Uniform(-1/sqrt(d), 1/sqrt(d)) weights, the usual linear-layer default."""
    bound = 1.0 / np.sqrt(dim)
    rng = make_rng(seed)
    return LinearHead(weights=rng.uniform(-bound, bound, size=(num_classes, dim)))


def forward(head: LinearHead, f: Any) -> np.ndarray:
    """Raw logits w_n . f for every class; no softmax."""
    f = as_vector(f, "feature")
    if f.shape[0] != head.dim:
        raise ShapeError(f"feature dim {f.shape[0]} != head dim {head.dim}")
    return head.weights @ f


def batch_logits(head: LinearHead, features: np.ndarray) -> np.ndarray:
    if features.shape[1] != head.dim:
        raise ShapeError(f"feature dim {features.shape[1]} != head dim {head.dim}")
    return features @ head.weights.T


def ce_loss(head: LinearHead, batch: Batch) -> float:
    """Summed (not averaged) cross-entropy over the batch."""
    if batch.size == 0:
        return 0.0
    logits = batch_logits(head, batch.features)
    true = logits[np.arange(batch.size), batch.labels]
    return float(np.sum(logsumexp(logits, axis=1) - true))


def ce_grad(head: LinearHead, batch: Batch) -> np.ndarray:
    """dL/dW = sum_i (softmax(W f_i) - onehot(y_i)) outer f_i."""
    if batch.size == 0:
        return np.zeros_like(head.weights)
    probs = softmax(batch_logits(head, batch.features), axis=1)
    probs[np.arange(batch.size), batch.labels] -= 1.0
    return probs.T @ batch.features
