"""Shared fixtures: the default synthetic benchmark and a model trained on it."""

from __future__ import annotations

import os

import numpy as np
import pytest

os.environ.setdefault("METRICS_ENABLED", "true")

from bdc_adapter.data import SynthSpec, generate_synthetic, make_bank, sample_episode  # noqa: E402
from bdc_adapter.fewshot import build_model  # noqa: E402
from bdc_adapter.head import TrainConfig  # noqa: E402
from bdc_adapter.reduction import ProjectionConfig  # noqa: E402


@pytest.fixture(scope="session")
def default_data():
    return generate_synthetic(SynthSpec())


@pytest.fixture(scope="session")
def default_episode(default_data):
    return sample_episode(default_data.bank, default_data.manifest, shots=8, seed=0)


@pytest.fixture(scope="session")
def trained_model(default_episode):
    model, trace = build_model(default_episode, TrainConfig(), ProjectionConfig())
    return model, trace


@pytest.fixture
def random_bank():
    """Factory for seeded random banks with unit float32 embeddings."""

    def _make(seed: int, n: int = 5, d: int = 4, k: int = 3, m: int = 2, with_maps: bool = True):
        rng = np.random.default_rng(seed)
        emb = rng.standard_normal((n, d))
        emb /= np.linalg.norm(emb, axis=1, keepdims=True)
        maps = rng.standard_normal((n, k, m)) if with_maps else None
        ids = [f"item-{seed}-{i}" for i in range(n)]
        labels = rng.integers(0, 3, size=n)
        return make_bank(ids, labels, emb, maps)

    return _make
