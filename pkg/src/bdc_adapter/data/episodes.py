"""Seeded M-shot N-class episode sampling from a feature bank."""

from __future__ import annotations

import logging
from typing import Dict, List

import numpy as np

from ..errors import InsufficientDataError
from ..fewshot import Episode
from ..linalg import l2_normalize_rows, make_rng
from .feature_bank import FeatureBank
from .manifest import Manifest

logger = logging.getLogger(__name__)


def _split_indices(bank: FeatureBank, manifest: Manifest, split: str) -> np.ndarray:
    """Bank indices assigned to ``split``, in bank order."""
    wanted = set(manifest.ids_in(split))
    return np.array([i for i, item_id in enumerate(bank.ids) if item_id in wanted], dtype=np.int64)


def _unit_rows(bank: FeatureBank, idx: np.ndarray) -> np.ndarray:
    # Stored float32 rows are unit only to ~1e-7; the head wants float64 unit rows.
    if idx.size == 0:
        return np.zeros((0, bank.dim), dtype=np.float64)
    return l2_normalize_rows(bank.embeddings[idx].astype(np.float64), "embeddings")


def text_templates_by_class(bank: FeatureBank, num_classes: int) -> List[np.ndarray]:
    """Prompt embeddings grouped per class; empty when the bank carries none."""
    text_idx = bank.text_indices()
    if text_idx.size == 0:
        return []
    grouped: Dict[int, List[int]] = {c: [] for c in range(num_classes)}
    for i in text_idx:
        grouped.setdefault(int(bank.labels[i]), []).append(int(i))
    missing = [c for c in range(num_classes) if not grouped[c]]
    if missing:
        raise InsufficientDataError(f"no text prompt embedding for class {missing[0]}")
    return [_unit_rows(bank, np.array(grouped[c], dtype=np.int64)) for c in range(num_classes)]


def sample_episode(
    bank: FeatureBank,
    manifest: Manifest,
    shots: int,
    seed: int,
    query_split: str = "test",
    support_split: str = "train",
) -> Episode:
    """Draw ``shots`` support items per class without replacement.

    Queries are every item of ``query_split``, in bank order.
    """
    if shots < 1:
        raise InsufficientDataError(f"shots must be at least 1, got {shots}")
    if bank.maps is None:
        raise InsufficientDataError("episodes need a bank with feature maps")
    manifest.check_against(bank)

    n_classes = manifest.num_classes
    pool = _split_indices(bank, manifest, support_split)
    rng = make_rng(seed)
    support: List[np.ndarray] = []
    for c in range(n_classes):
        members = pool[bank.labels[pool] == c]
        if members.size < shots:
            raise InsufficientDataError(
                f"class {manifest.classes[c]!r} has {members.size} {support_split} items, "
                f"{shots} requested"
            )
        support.append(members[rng.choice(members.size, size=shots, replace=False)])
    support_idx = np.stack(support)  # (N, M)

    query_idx = _split_indices(bank, manifest, query_split)
    d = bank.dim
    k, m = bank.map_shape
    episode = Episode(
        class_names=list(manifest.classes),
        support_ids=[[bank.ids[int(i)] for i in row] for row in support_idx],
        support_embeddings=_unit_rows(bank, support_idx.reshape(-1)).reshape(n_classes, shots, d),
        support_maps=bank.maps[support_idx].astype(np.float64),
        query_ids=[bank.ids[int(i)] for i in query_idx],
        query_labels=bank.labels[query_idx].astype(np.int64),
        query_embeddings=_unit_rows(bank, query_idx),
        query_maps=bank.maps[query_idx].astype(np.float64).reshape(query_idx.size, k, m),
        text_templates=text_templates_by_class(bank, n_classes),
    )
    logger.info(
        "Sampled %d-shot %d-class episode (seed %d): %d %s queries",
        shots,
        n_classes,
        seed,
        episode.num_queries,
        query_split,
    )
    return episode
