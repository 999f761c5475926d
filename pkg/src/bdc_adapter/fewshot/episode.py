"""M-shot N-class episode: support maps/embeddings per class plus labeled queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..errors import ShapeError


@dataclass(frozen=True)
class Episode:
    class_names: List[str]
    support_ids: List[List[str]]
    support_embeddings: np.ndarray  # (N, M, d), unit rows
    support_maps: np.ndarray  # (N, M, k, m)
    query_ids: List[str]
    query_labels: np.ndarray  # (Q,)
    query_embeddings: np.ndarray  # (Q, d), unit rows
    query_maps: np.ndarray  # (Q, k, m)
    text_templates: List[np.ndarray] = field(default_factory=list)  # per class (T_c, d)

    def __post_init__(self) -> None:
        n, m = self.support_embeddings.shape[:2]
        if len(self.class_names) != n or self.support_maps.shape[:2] != (n, m):
            raise ShapeError("support must hold exactly M items for each of the N classes")
        if len(self.support_ids) != n or any(len(row) != m for row in self.support_ids):
            raise ShapeError("support ids must be N lists of M ids")
        q = len(self.query_ids)
        if self.query_labels.shape != (q,) or self.query_embeddings.shape[0] != q:
            raise ShapeError("query ids, labels and embeddings disagree in length")
        if self.query_maps.shape[0] != q:
            raise ShapeError("query maps disagree in length with query ids")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def shots(self) -> int:
        return int(self.support_embeddings.shape[1])

    @property
    def num_queries(self) -> int:
        return len(self.query_ids)

    def support_features(self) -> Tuple[np.ndarray, np.ndarray]:
        """Support embeddings flattened class-major, with their labels."""
        n, m, d = self.support_embeddings.shape
        labels = np.repeat(np.arange(n, dtype=np.int64), m)
        return self.support_embeddings.reshape(n * m, d), labels
