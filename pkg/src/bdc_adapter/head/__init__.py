"""Multi-modal reasoning head: initialization, scoring, loss, training."""

from .linear_head import (
    Batch,
    LinearHead,
    batch_logits,
    ce_grad,
    ce_loss,
    forward,
    init_from_text,
    init_random,
    make_batch,
)
from .optim import AdamW, get_lr_cosine_schedule
from .trainer import TrainConfig, build_batches, class_text_features, fit_head, train

__all__ = [
    "AdamW",
    "Batch",
    "LinearHead",
    "TrainConfig",
    "batch_logits",
    "build_batches",
    "ce_grad",
    "ce_loss",
    "class_text_features",
    "fit_head",
    "forward",
    "get_lr_cosine_schedule",
    "init_from_text",
    "init_random",
    "make_batch",
    "train",
]
