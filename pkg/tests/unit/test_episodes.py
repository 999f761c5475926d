"""Manifest validation and seeded episode sampling."""

import json

import numpy as np
import pytest

from bdc_adapter.data import (
    Manifest,
    SynthSpec,
    generate_synthetic,
    load_manifest,
    sample_episode,
    save_manifest,
)
from bdc_adapter.errors import InsufficientDataError, ManifestError


@pytest.fixture(scope="module")
def ten_per_class():
    return generate_synthetic(
        SynthSpec(classes=3, shots=5, train_per_class=10, queries=12, channels=12, positions=6)
    )


def test_manifest_round_trip(tmp_path, default_data):
    path = save_manifest(tmp_path / "manifest.json", default_data.manifest)
    loaded = load_manifest(path)
    assert loaded == default_data.manifest
    assert json.loads(path.read_text())["version"] == 1


def test_manifest_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ManifestError):
        load_manifest(bad)
    bad.write_text(json.dumps({"version": 9, "classes": ["a"]}))
    with pytest.raises(ManifestError):
        load_manifest(bad)
    bad.write_text(json.dumps({"classes": ["a"], "splits": {"x": "holdout"}}))
    with pytest.raises(ManifestError):
        load_manifest(bad)


def test_manifest_ids_must_exist_in_bank(default_data):
    manifest = Manifest(classes=default_data.manifest.classes, splits={"ghost": "train"})
    with pytest.raises(ManifestError):
        manifest.check_against(default_data.bank)
    too_few = Manifest(classes=["only"], splits={})
    with pytest.raises(ManifestError):
        too_few.check_against(default_data.bank)


def test_episode_shapes_and_unit_embeddings(default_episode):
    ep = default_episode
    assert ep.num_classes == 4 and ep.shots == 8
    assert ep.support_maps.shape == (4, 8, 16, 32)
    assert ep.num_queries == 200
    norms = np.linalg.norm(ep.support_embeddings, axis=2)
    assert np.max(np.abs(norms - 1.0)) < 1e-12
    assert len(ep.text_templates) == 4
    assert all(t.shape == (2, 16) for t in ep.text_templates)


def test_support_is_drawn_per_class_without_replacement(ten_per_class):
    ep = sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=5, seed=1)
    labels = dict(zip(ten_per_class.bank.ids, ten_per_class.bank.labels))
    for c, row in enumerate(ep.support_ids):
        assert len(set(row)) == 5
        assert all(labels[i] == c for i in row)
        assert all(ten_per_class.manifest.splits[i] == "train" for i in row)


def test_full_class_support_is_the_whole_class(ten_per_class):
    ep = sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=10, seed=4)
    train_ids = set(ten_per_class.manifest.ids_in("train"))
    assert {i for row in ep.support_ids for i in row} == train_ids


def test_same_seed_same_episode(ten_per_class):
    a = sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=5, seed=9)
    b = sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=5, seed=9)
    assert a.support_ids == b.support_ids
    assert a.support_maps.tobytes() == b.support_maps.tobytes()


def test_different_seeds_differ(ten_per_class):
    for s in range(20):
        a = sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=5, seed=2 * s)
        b = sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=5, seed=2 * s + 1)
        assert any(set(ra) != set(rb) for ra, rb in zip(a.support_ids, b.support_ids))


def test_insufficient_items(ten_per_class):
    with pytest.raises(InsufficientDataError):
        sample_episode(ten_per_class.bank, ten_per_class.manifest, shots=11, seed=0)


def test_queries_follow_the_requested_split(ten_per_class):
    ep = sample_episode(
        ten_per_class.bank, ten_per_class.manifest, shots=2, seed=0, query_split="val"
    )
    assert all(ten_per_class.manifest.splits[q] == "val" for q in ep.query_ids)
    assert ep.num_queries == 3 * 10
