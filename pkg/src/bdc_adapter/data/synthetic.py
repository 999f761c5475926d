"""
Synthetic few-shot benchmark whose class identity lives in channel dependence.

Every class uses the same source, target and distractor channels with the
same marginals; classes differ only in which source drives which target
(target = source^2 up to centering). First-order statistics are therefore
uninformative, while a pooling that sees pairwise channel dependence
separates the classes. Global embeddings carry a weak linear class offset
so the reasoning head has something to learn.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..errors import ConfigError
from ..linalg import make_rng
from .feature_bank import TEXT_PREFIX, FeatureBank, make_bank
from .manifest import Manifest

logger = logging.getLogger(__name__)

# Centering constants: E[U] and E[U^2] for U ~ uniform(0, 1).
_MEAN_U = 0.5
_MEAN_U2 = 1.0 / 3.0

PROMPTS = ("a photo of a", "a picture of a", "an image of a", "a close-up photo of a")


class SynthSpec(BaseModel):
    classes: int = Field(default=4, ge=1, description="N")
    shots: int = Field(default=8, ge=1, description="M")
    queries: int = Field(default=200, ge=1, description="Test items, round-robin over classes")
    channels: int = Field(default=16, ge=2, description="k")
    positions: int = Field(default=32, ge=1, description="m")
    pairs: Optional[int] = Field(default=None, ge=1, description="Dependent pairs; None = k // 4")
    noise: float = Field(default=0.1, ge=0.0)
    embed_signal: float = Field(default=0.1, ge=0.0)
    text_noise: float = Field(default=0.05, ge=0.0)
    templates: int = Field(default=2, ge=1)
    train_per_class: Optional[int] = Field(default=None, ge=1, description="None = 2 * shots")
    val_per_class: int = Field(default=10, ge=0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_counts(self) -> "SynthSpec":
        if self.train_per_class is not None and self.train_per_class < self.shots:
            raise ValueError("train_per_class must be at least shots")
        return self

    @property
    def resolved_pairs(self) -> int:
        return self.pairs if self.pairs is not None else max(1, self.channels // 4)

    @property
    def resolved_train_per_class(self) -> int:
        return self.train_per_class if self.train_per_class is not None else 2 * self.shots


@dataclass(frozen=True)
class SyntheticData:
    bank: FeatureBank
    manifest: Manifest
    sources: np.ndarray  # (pairs,) channel indices
    targets: np.ndarray  # (N, pairs) target channel driven by each source, per class


def class_pairings(
    spec: SynthSpec, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source channels, per-class target assignment, and distractor channels."""
    k, p, n = spec.channels, spec.resolved_pairs, spec.classes
    if 2 * p > k:
        raise ConfigError(f"{p} dependent pairs need at least {2 * p} channels, got {k}")
    if n > p and n > math.factorial(p):
        raise ConfigError(
            f"{p} pairs allow only {math.factorial(p)} distinct classes, {n} requested"
        )

    base = rng.permutation(k)
    sources = np.sort(base[:p])
    target_pool = base[p : 2 * p]
    distractors = np.sort(base[2 * p :])

    # Cyclic shifts are pairwise disjoint; extra classes get fresh random matchings.
    assignments: List[tuple] = [tuple(np.roll(target_pool, -c)) for c in range(min(n, p))]
    seen = set(assignments)
    while len(assignments) < n:
        cand = tuple(rng.permutation(target_pool))
        if cand not in seen:
            seen.add(cand)
            assignments.append(cand)
    return sources, np.array(assignments, dtype=np.int64), distractors


def class_directions(num_classes: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unit class directions; orthonormal whenever num_classes <= dim."""
    g = rng.standard_normal((dim, num_classes))
    if num_classes <= dim:
        q, r = np.linalg.qr(g)
        return (q * np.where(np.diag(r) < 0.0, -1.0, 1.0)).T
    return (g / np.linalg.norm(g, axis=0)).T


def _feature_map(
    rng: np.random.Generator,
    spec: SynthSpec,
    sources: np.ndarray,
    targets: np.ndarray,
    distractors: np.ndarray,
) -> np.ndarray:
    k, m = spec.channels, spec.positions
    raw = rng.uniform(0.0, 1.0, size=(k, m))
    fmap = np.empty((k, m), dtype=np.float64)
    fmap[sources] = raw[sources] - _MEAN_U
    fmap[targets] = raw[sources] ** 2 - _MEAN_U2
    for j, ch in enumerate(distractors):
        fmap[ch] = raw[ch] - _MEAN_U if j % 2 == 0 else raw[ch] ** 2 - _MEAN_U2
    if spec.noise > 0.0:
        fmap += spec.noise * rng.standard_normal((k, m))
    return fmap


def _f32(a: np.ndarray) -> np.ndarray:
    return a.astype(np.float32).astype(np.float64)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_synthetic(spec: SynthSpec) -> SyntheticData:
    """Bank (images plus text prompts) and manifest for ``spec``, bit-identical per seed."""
    rng = make_rng(spec.seed)
    sources, targets, distractors = class_pairings(spec, rng)
    n, k, m = spec.classes, spec.channels, spec.positions
    directions = class_directions(n, k, rng)

    labels: List[int] = []
    splits: List[str] = []
    for c in range(n):
        labels += [c] * (spec.resolved_train_per_class + spec.val_per_class)
        splits += ["train"] * spec.resolved_train_per_class + ["val"] * spec.val_per_class
    labels += [q % n for q in range(spec.queries)]
    splits += ["test"] * spec.queries

    ids: List[str] = []
    embeddings: List[np.ndarray] = []
    maps: List[np.ndarray] = []
    for i, c in enumerate(labels):
        fmap = _f32(_feature_map(rng, spec, sources, targets[c], distractors))
        emb = _unit(fmap.mean(axis=1) + spec.embed_signal * directions[c])
        ids.append(f"img-{i:05d}")
        embeddings.append(emb)
        maps.append(fmap)

    zero_map = np.zeros((k, m), dtype=np.float64)
    for c in range(n):
        for t in range(spec.templates):
            ids.append(f"{TEXT_PREFIX}{c}:{t}")
            labels.append(c)
            embeddings.append(_unit(directions[c] + spec.text_noise * rng.standard_normal(k)))
            maps.append(zero_map)

    bank = make_bank(ids, labels, np.stack(embeddings), np.stack(maps))
    manifest = Manifest(
        classes=[f"class-{c}" for c in range(n)],
        templates=[PROMPTS[t % len(PROMPTS)] for t in range(spec.templates)],
        splits=dict(zip(ids, splits)),
    )
    logger.info(
        "Generated synthetic bank: %d classes, %d image items, %d text items, k=%d m=%d pairs=%d",
        n,
        len(splits),
        n * spec.templates,
        k,
        m,
        spec.resolved_pairs,
    )
    return SyntheticData(bank=bank, manifest=manifest, sources=sources, targets=targets)
