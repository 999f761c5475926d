"""Checkpoint and prototype containers: exact round trips, checksum and version errors."""

import hashlib
import json
import struct

import numpy as np
import pytest

from bdc_adapter.data import (
    Checkpoint,
    load_checkpoint,
    load_prototypes,
    save_checkpoint,
    save_prototypes,
)
from bdc_adapter.errors import CheckpointError, ChecksumMismatchError, CheckpointVersionError
from bdc_adapter.fewshot import FusionConfig, PrototypeSet
from bdc_adapter.head import LinearHead
from bdc_adapter.reduction import fit_projection


def _random_checkpoint(seed):
    rng = np.random.default_rng(seed)
    n, d, k = int(rng.integers(1, 6)), int(rng.integers(1, 9)), int(rng.integers(2, 10))
    out = int(rng.integers(1, k + 1))
    return Checkpoint(
        head=LinearHead(weights=rng.standard_normal((n, d))),
        projection=fit_projection("random-orthogonal", in_dim=k, out_dim=out, seed=seed),
        fusion=FusionConfig(
            alpha=float(rng.uniform(0, 5)), delta=float(rng.uniform(0.1, 5)), tau=0.01
        ),
        seeds={"episode": seed, "projection": seed, "train": seed + 1},
        class_names=tuple(f"c{i}" for i in range(n)),
        shots=int(rng.integers(1, 17)),
    )


def test_hundred_checkpoint_round_trips(tmp_path):
    for seed in range(100):
        ckpt = _random_checkpoint(seed)
        path = save_checkpoint(tmp_path / f"{seed}.bdck", ckpt)
        assert load_checkpoint(path).equals(ckpt)


def test_flipped_payload_byte_is_a_checksum_error(tmp_path):
    path = save_checkpoint(tmp_path / "c.bdck", _random_checkpoint(0))
    data = bytearray(path.read_bytes())
    data[-3] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumMismatchError):
        load_checkpoint(path)


def test_old_version_is_a_version_error(tmp_path):
    path = save_checkpoint(tmp_path / "c.bdck", _random_checkpoint(1))
    data = bytearray(path.read_bytes())
    data[4:8] = struct.pack("<I", 0)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointVersionError) as err:
        load_checkpoint(path)
    assert err.value.offset == 4


def test_truncated_and_foreign_files(tmp_path):
    path = save_checkpoint(tmp_path / "c.bdck", _random_checkpoint(2))
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(b"FBNK" + data[4:])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
    path.write_bytes(b"BD")
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_prototype_file_carries_its_projection(tmp_path):
    proj = fit_projection("random-orthogonal", in_dim=6, out_dim=3, seed=5)
    vecs = np.random.default_rng(0).standard_normal((2, 9))
    protos = PrototypeSet(
        prototypes=vecs / np.linalg.norm(vecs, axis=1, keepdims=True),
        side=3,
        shots=4,
        class_names=("a", "b"),
    )
    path = save_prototypes(tmp_path / "p.bdcp", protos, proj)
    loaded, loaded_proj = load_prototypes(path)
    assert loaded.equals(protos)
    assert loaded_proj.equals(proj)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def _sealed(meta_json: bytes, magic=b"BDCK") -> bytes:
    payload = struct.pack("<I", len(meta_json)) + meta_json
    header = struct.pack("<4sIQ", magic, 1, len(payload))
    return header + hashlib.sha256(payload).digest() + payload


@pytest.mark.parametrize(
    "meta",
    [
        [1, 2, 3],
        "just a string",
        {"arrays": [{"name": "head.weights", "shape": [-1, 2]}]},
        {"arrays": [{"name": "head.weights", "shape": [1.5]}]},
        {"arrays": [{"shape": [2]}]},
        {"arrays": 7},
    ],
)
def test_malformed_meta_with_valid_checksum_is_a_checkpoint_error(tmp_path, meta):
    path = tmp_path / "odd.bdck"
    path.write_bytes(_sealed(json.dumps(meta).encode("utf-8")))
    with pytest.raises(CheckpointError) as err:
        load_checkpoint(path)
    assert err.value.exit_code == 2
