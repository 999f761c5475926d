"""
Training loop for the reasoning head.

Each step sees a batch of image embeddings (support shots) mixed with text
embeddings of class prompts; the summed cross-entropy is minimized with
AdamW under a cosine-annealed learning rate.
"""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..errors import ConfigError, NumericalFailure, ShapeError
from ..linalg import l2_normalize_rows, make_rng
from ..observability.metrics import record_numerical_failure, record_train_step
from .linear_head import (
    Batch,
    LinearHead,
    ce_grad,
    ce_loss,
    init_from_text,
    init_random,
    make_batch,
)
from .optim import AdamW, get_lr_cosine_schedule

logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    epochs: int = Field(default=30, ge=1)
    # 0 is accepted and leaves the head exactly at its initialization.
    base_lr: float = Field(default=1e-3, ge=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    image_per_step: Optional[int] = Field(
        default=None, ge=0, description="Image samples per step; None means the shot count"
    )
    text_per_step: Optional[int] = Field(
        default=None, ge=0, description="Text samples per step; None means the class count"
    )
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_batch_size(self) -> "TrainConfig":
        if self.image_per_step == 0 and self.text_per_step == 0:
            raise ValueError("image_per_step + text_per_step must be at least 1")
        return self

    def resolved(self, shots: int, num_classes: int) -> "TrainConfig":
        """Copy with the per-step batch sizes filled in."""
        image = shots if self.image_per_step is None else self.image_per_step
        text = num_classes if self.text_per_step is None else self.text_per_step
        return self.model_copy(update={"image_per_step": image, "text_per_step": text})


def class_text_features(text_templates: Sequence[np.ndarray]) -> np.ndarray:
    """One feature per class: the re-normalized mean over its prompt templates."""
    means = np.stack([np.asarray(t, dtype=np.float64).mean(axis=0) for t in text_templates])
    return l2_normalize_rows(means, "class text features")


def build_batches(
    image_features: np.ndarray,
    image_labels: np.ndarray,
    text_templates: Sequence[np.ndarray],
    cfg: TrainConfig,
    shots: int,
) -> List[Batch]:
    """Partition the support images into steps and attach sampled prompts to each."""
    num_classes = len(text_templates)
    n_img = int(image_features.shape[0]) if image_features.size else 0
    sizes = cfg.resolved(shots, num_classes)
    per_img = min(int(sizes.image_per_step), n_img)
    per_txt = int(sizes.text_per_step)
    if per_img + per_txt < 1:
        raise ConfigError("a training step needs at least one image or text sample")

    rng = make_rng(cfg.seed)
    steps = math.ceil(n_img / per_img) if per_img > 0 else 1
    order = rng.permutation(n_img) if n_img else np.zeros(0, dtype=np.int64)

    batches: List[Batch] = []
    for s in range(steps):
        idx = order[s * per_img : (s + 1) * per_img] if per_img > 0 else order[:0]
        feats = [image_features[idx]] if idx.size else []
        labels = [image_labels[idx]] if idx.size else []
        if per_txt:
            classes = np.arange(per_txt) % num_classes
            rows = []
            for c in classes:
                templates = text_templates[int(c)]
                rows.append(templates[int(rng.integers(templates.shape[0]))])
            feats.append(np.stack(rows))
            labels.append(classes.astype(np.int64))
        batches.append(
            make_batch(
                np.concatenate(feats, axis=0),
                np.concatenate(labels),
                num_classes,
                text_rows=per_txt,
            )
        )
    return batches


def _redraw_prompts(
    batch: Batch, text_templates: Sequence[np.ndarray], rng: np.random.Generator
) -> Batch:
    if batch.text_rows == 0:
        return batch
    features = batch.features.copy()
    start = batch.size - batch.text_rows
    for row in range(start, batch.size):
        templates = text_templates[int(batch.labels[row])]
        features[row] = templates[int(rng.integers(templates.shape[0]))]
    return Batch(features=features, labels=batch.labels, text_rows=batch.text_rows)


def train(
    head: LinearHead,
    batches: Sequence[Batch],
    cfg: TrainConfig,
    text_templates: Optional[Sequence[np.ndarray]] = None,
) -> Tuple[LinearHead, List[float]]:
    """Run epochs x len(batches) AdamW steps; returns the head and per-epoch mean loss.

    With ``text_templates`` the prompt rows of every batch are redrawn from the
    class templates at each step.
    """
    if not batches:
        raise ShapeError("training needs at least one batch")

    opt = AdamW(weight_decay=cfg.weight_decay, betas=(cfg.beta1, cfg.beta2), eps=cfg.eps)
    rng = make_rng(cfg.seed)
    total_iters = cfg.epochs * len(batches)
    weights = head.weights.copy()
    trace: List[float] = []
    it = 0

    for epoch in range(cfg.epochs):
        epoch_loss = 0.0
        epoch_samples = 0
        for b in rng.permutation(len(batches)):
            batch = batches[int(b)]
            if text_templates is not None:
                batch = _redraw_prompts(batch, text_templates, rng)
            current = LinearHead(weights=weights)
            loss = ce_loss(current, batch)
            if not math.isfinite(loss):
                record_numerical_failure()
                raise NumericalFailure(f"non-finite loss {loss} at epoch {epoch} step {it}")
            lr = get_lr_cosine_schedule(it, cfg.base_lr, total_iters)
            weights = opt.step(weights, ce_grad(current, batch), lr)
            if not np.all(np.isfinite(weights)):
                record_numerical_failure()
                raise NumericalFailure(f"non-finite weights after epoch {epoch} step {it}")
            epoch_loss += loss
            epoch_samples += batch.size
            it += 1
            record_train_step()
        trace.append(epoch_loss / max(epoch_samples, 1))
        logger.debug("epoch %d mean loss %.6f", epoch, trace[-1])

    logger.info(
        "Trained head %dx%d for %d epochs (%d steps), final loss %.6f",
        head.num_classes,
        head.dim,
        cfg.epochs,
        it,
        trace[-1],
    )
    return LinearHead(weights=weights), trace


def fit_head(
    image_features: np.ndarray,
    image_labels: np.ndarray,
    text_templates: Sequence[np.ndarray],
    cfg: TrainConfig,
    shots: int,
    text_init: bool = True,
) -> Tuple[LinearHead, List[float]]:
    """Initialize (from text, or randomly for the no-init ablation) and train."""
    text = class_text_features(text_templates)
    if text_init:
        head = init_from_text(text)
    else:
        head = init_random(text.shape[0], text.shape[1], cfg.seed)
    batches = build_batches(image_features, image_labels, text_templates, cfg, shots)
    return train(head, batches, cfg, text_templates=text_templates)
