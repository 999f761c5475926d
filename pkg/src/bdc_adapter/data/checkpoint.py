"""
Checksummed binary containers for trained artifacts.

    magic     4 bytes (b"BDCK" checkpoint, b"BDCP" prototype file)
    version   <I
    length    <Q   payload byte count
    sha256    32 bytes over the payload
    payload   <I meta length, UTF-8 JSON meta, then <f8 C-order arrays

The meta lists every array's name and shape in storage order. The version
is checked before the checksum so old files fail with a version error.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from ..errors import CheckpointError, ChecksumMismatchError, CheckpointVersionError
from ..fewshot import FusionConfig, PrototypeSet
from ..head import LinearHead
from ..reduction import Projection
from .atomic import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"BDCK"
PROTOTYPES_MAGIC = b"BDCP"
CONTAINER_VERSION = 1

_PREFIX = struct.Struct("<4sIQ")
_DIGEST_SIZE = 32
_HEADER_SIZE = _PREFIX.size + _DIGEST_SIZE
_U32 = struct.Struct("<I")
_F64 = np.dtype("<f8")


def encode_container(magic: bytes, meta: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> bytes:
    meta = dict(meta)
    meta["arrays"] = [{"name": name, "shape": list(a.shape)} for name, a in arrays.items()]
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    blobs = [np.ascontiguousarray(a, dtype=_F64).tobytes() for a in arrays.values()]
    payload = _U32.pack(len(meta_bytes)) + meta_bytes + b"".join(blobs)
    digest = hashlib.sha256(payload).digest()
    return _PREFIX.pack(magic, CONTAINER_VERSION, len(payload)) + digest + payload


def _array_layout(entries: Any) -> List[Tuple[str, Tuple[int, ...]]]:
    layout: List[Tuple[str, Tuple[int, ...]]] = []
    try:
        for entry in entries:
            shape = tuple(entry["shape"])
            if not all(isinstance(s, int) and s >= 0 for s in shape):
                raise ValueError(f"bad shape {list(shape)}")
            layout.append((str(entry["name"]), shape))
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"bad array table in meta block: {e}", offset=_HEADER_SIZE) from e
    return layout


def decode_container(data: bytes, magic: bytes) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    if len(data) < _HEADER_SIZE:
        raise CheckpointError(
            f"file is {len(data)} bytes, shorter than the header", offset=len(data)
        )
    found, version, length = _PREFIX.unpack_from(data, 0)
    if found != magic:
        raise CheckpointError(f"expected magic {magic!r}, got {found!r}", offset=0)
    if version != CONTAINER_VERSION:
        raise CheckpointVersionError(
            f"container version {version}, this reader supports {CONTAINER_VERSION}", offset=4
        )
    payload = data[_HEADER_SIZE:]
    if len(payload) != length:
        raise CheckpointError(
            f"header declares a {length}-byte payload, file holds {len(payload)}",
            offset=min(len(data), _HEADER_SIZE + length),
        )
    if hashlib.sha256(payload).digest() != data[_PREFIX.size : _HEADER_SIZE]:
        raise ChecksumMismatchError("payload checksum does not match", offset=_PREFIX.size)

    try:
        (meta_len,) = _U32.unpack_from(payload, 0)
        meta = json.loads(payload[_U32.size : _U32.size + meta_len].decode("utf-8"))
    except (struct.error, ValueError) as e:
        raise CheckpointError(f"unreadable meta block: {e}", offset=_HEADER_SIZE) from e
    if not isinstance(meta, dict):
        raise CheckpointError("meta block is not a JSON object", offset=_HEADER_SIZE)

    arrays: Dict[str, np.ndarray] = {}
    pos = _U32.size + meta_len
    for name, shape in _array_layout(meta.pop("arrays", [])):
        nbytes = int(np.prod(shape, dtype=np.int64)) * _F64.itemsize
        if pos + nbytes > len(payload):
            raise CheckpointError(
                f"array {name!r} runs past the payload", offset=_HEADER_SIZE + pos
            )
        block = np.frombuffer(payload[pos : pos + nbytes], dtype=_F64)
        arrays[name] = block.reshape(shape).copy()
        pos += nbytes
    if pos != len(payload):
        raise CheckpointError(
            f"{len(payload) - pos} unaccounted payload bytes", offset=_HEADER_SIZE + pos
        )
    return meta, arrays


def projection_meta(p: Projection) -> Dict[str, Any]:
    return {
        "kind": p.kind,
        "in_dim": p.in_dim,
        "out_dim": p.out_dim,
        "seed": p.seed,
        "channels_as_observations": p.channels_as_observations,
    }


def _projection_from(meta: Dict[str, Any], weights: np.ndarray) -> Projection:
    return Projection(
        kind=meta["kind"],
        in_dim=int(meta["in_dim"]),
        out_dim=int(meta["out_dim"]),
        weights=weights,
        seed=int(meta["seed"]),
        channels_as_observations=bool(meta["channels_as_observations"]),
    )


@dataclass(frozen=True)
class Checkpoint:
    head: LinearHead
    projection: Projection
    fusion: FusionConfig
    seeds: Dict[str, int] = field(default_factory=dict)
    class_names: Tuple[str, ...] = ()
    shots: int = 0

    def equals(self, other: "Checkpoint") -> bool:
        return (
            self.head.weights.shape == other.head.weights.shape
            and self.head.weights.tobytes() == other.head.weights.tobytes()
            and self.projection.equals(other.projection)
            and self.fusion == other.fusion
            and self.seeds == other.seeds
            and tuple(self.class_names) == tuple(other.class_names)
            and self.shots == other.shots
        )


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> Path:
    meta = {
        "kind": "checkpoint",
        "projection": projection_meta(ckpt.projection),
        "fusion": ckpt.fusion.model_dump(),
        "seeds": {k: int(v) for k, v in ckpt.seeds.items()},
        "class_names": list(ckpt.class_names),
        "shots": ckpt.shots,
    }
    arrays = {"head.weights": ckpt.head.weights, "projection.weights": ckpt.projection.weights}
    out = atomic_write_bytes(path, encode_container(CHECKPOINT_MAGIC, meta, arrays))
    logger.info("Wrote checkpoint %s (head %dx%d)", out, ckpt.head.num_classes, ckpt.head.dim)
    return out


def load_checkpoint(path: PathLike) -> Checkpoint:
    meta, arrays = decode_container(Path(path).read_bytes(), CHECKPOINT_MAGIC)
    try:
        return Checkpoint(
            head=LinearHead(weights=arrays["head.weights"]),
            projection=_projection_from(meta["projection"], arrays["projection.weights"]),
            fusion=FusionConfig(**meta["fusion"]),
            seeds={k: int(v) for k, v in meta.get("seeds", {}).items()},
            class_names=tuple(meta.get("class_names", ())),
            shots=int(meta.get("shots", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: incomplete checkpoint ({e})") from e


def save_prototypes(path: PathLike, protos: PrototypeSet, projection: Projection) -> Path:
    meta = {
        "kind": "prototypes",
        "side": protos.side,
        "shots": protos.shots,
        "class_names": list(protos.class_names),
        "projection": projection_meta(projection),
    }
    arrays = {"prototypes": protos.prototypes, "projection.weights": projection.weights}
    out = atomic_write_bytes(path, encode_container(PROTOTYPES_MAGIC, meta, arrays))
    logger.info("Wrote %d prototypes to %s", protos.num_classes, out)
    return out


def load_prototypes(path: PathLike) -> Tuple[PrototypeSet, Projection]:
    meta, arrays = decode_container(Path(path).read_bytes(), PROTOTYPES_MAGIC)
    try:
        protos = PrototypeSet(
            prototypes=arrays["prototypes"],
            side=int(meta["side"]),
            shots=int(meta["shots"]),
            class_names=tuple(meta.get("class_names", ())),
        )
        projection = _projection_from(meta["projection"], arrays["projection.weights"])
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: incomplete prototype file ({e})") from e
    return protos, projection
