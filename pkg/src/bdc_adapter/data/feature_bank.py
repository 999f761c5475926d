"""
Feature bank: precomputed global embeddings and spatial feature maps.

Layout (all little-endian)::

    header  <4sIQIII   magic b"FBNK", version, item count, d, k, m
    item    <I         id length in bytes
            bytes      UTF-8 id
            <I         label index
            d x <f4    global embedding (unit norm)
            k*m x <f4  feature map, row-major (absent when k == m == 0)

Items whose id starts with ``text:`` hold class prompt embeddings; their
label is the class and their map (when the bank has maps) is all zeros.
Arrays are held as float32 in memory so a loaded bank equals its file.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    BadMagicError,
    BankFormatError,
    NormViolationError,
    ShapeError,
    TrailingBytesError,
    TruncatedError,
    VersionMismatchError,
)
from ..observability.metrics import record_bank_items
from .atomic import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)

BANK_MAGIC = b"FBNK"
BANK_VERSION = 1
TEXT_PREFIX = "text:"
NORM_TOL = 1e-5

_HEADER = struct.Struct("<4sIQIII")
_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")


@dataclass(frozen=True)
class FeatureBank:
    ids: List[str]
    labels: np.ndarray  # (n,) int64
    embeddings: np.ndarray  # (n, d) float32
    maps: Optional[np.ndarray] = None  # (n, k, m) float32

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])

    @property
    def map_shape(self) -> Tuple[int, int]:
        if self.maps is None:
            return (0, 0)
        return (int(self.maps.shape[1]), int(self.maps.shape[2]))

    def index_of(self) -> Dict[str, int]:
        return {item_id: i for i, item_id in enumerate(self.ids)}

    def text_indices(self) -> np.ndarray:
        return np.array(
            [i for i, item_id in enumerate(self.ids) if item_id.startswith(TEXT_PREFIX)],
            dtype=np.int64,
        )

    def image_indices(self) -> np.ndarray:
        return np.array(
            [i for i, item_id in enumerate(self.ids) if not item_id.startswith(TEXT_PREFIX)],
            dtype=np.int64,
        )

    def validate(self) -> None:
        n = len(self.ids)
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] != n:
            raise ShapeError(f"embeddings must be ({n}, d), got {self.embeddings.shape}")
        if self.labels.shape != (n,):
            raise ShapeError(f"labels must be ({n},), got {self.labels.shape}")
        if n and (self.labels.min() < 0 or self.labels.max() >= 2**32):
            raise ShapeError("labels must fit in an unsigned 32-bit integer")
        if len(set(self.ids)) != n:
            raise ShapeError("item ids must be unique")
        if self.maps is not None:
            if self.maps.ndim != 3 or self.maps.shape[0] != n:
                raise ShapeError(f"maps must be ({n}, k, m), got {self.maps.shape}")
            if 0 in self.maps.shape[1:]:
                raise ShapeError("feature maps need k >= 1 and m >= 1")
        for i in range(n):
            norm = float(np.linalg.norm(self.embeddings[i].astype(np.float64)))
            if not abs(norm - 1.0) <= NORM_TOL:
                raise NormViolationError(f"item {self.ids[i]!r} embedding norm {norm}")

    def equals(self, other: "FeatureBank") -> bool:
        """Bit-for-bit equality of ids, labels, embeddings and maps."""
        if self.ids != other.ids or (self.maps is None) != (other.maps is None):
            return False
        same = (
            np.array_equal(self.labels, other.labels)
            and self.embeddings.shape == other.embeddings.shape
            and self.embeddings.astype(_F32).tobytes() == other.embeddings.astype(_F32).tobytes()
        )
        if same and self.maps is not None:
            same = (
                self.maps.shape == other.maps.shape
                and self.maps.astype(_F32).tobytes() == other.maps.astype(_F32).tobytes()
            )
        return bool(same)


def make_bank(
    ids: Sequence[str],
    labels: Sequence[int],
    embeddings: np.ndarray,
    maps: Optional[np.ndarray] = None,
) -> FeatureBank:
    """Build a bank with the on-disk dtypes."""
    emb = np.ascontiguousarray(embeddings, dtype=np.float32)
    if emb.ndim == 1 and emb.size == 0:
        emb = emb.reshape(0, 0)
    return FeatureBank(
        ids=list(ids),
        labels=np.asarray(labels, dtype=np.int64).reshape(-1),
        embeddings=emb,
        maps=None if maps is None else np.ascontiguousarray(maps, dtype=np.float32),
    )


def encode_bank(bank: FeatureBank) -> bytes:
    bank.validate()
    k, m = bank.map_shape
    parts = [_HEADER.pack(BANK_MAGIC, BANK_VERSION, len(bank), bank.dim, k, m)]
    for i, item_id in enumerate(bank.ids):
        raw_id = item_id.encode("utf-8")
        parts.append(_U32.pack(len(raw_id)))
        parts.append(raw_id)
        parts.append(_U32.pack(int(bank.labels[i])))
        parts.append(bank.embeddings[i].astype(_F32).tobytes())
        if bank.maps is not None:
            parts.append(bank.maps[i].astype(_F32).tobytes())
    return b"".join(parts)


def write_bank(path: PathLike, bank: FeatureBank) -> Path:
    out = atomic_write_bytes(path, encode_bank(bank))
    record_bank_items(len(bank), "write")
    logger.info(
        "Wrote feature bank %s (%d items, d=%d, maps=%s)",
        out,
        len(bank),
        bank.dim,
        bank.map_shape,
    )
    return out


class _Cursor:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise TruncatedError(
                f"file ends inside {what}: needed {n} bytes, {len(self.data) - self.pos} left",
                offset=len(self.data),
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk


def decode_bank(data: bytes) -> FeatureBank:
    if len(data) >= 4 and data[:4] != BANK_MAGIC:
        raise BadMagicError(f"expected magic {BANK_MAGIC!r}, got {data[:4]!r}", offset=0)
    cur = _Cursor(data)
    magic, version, count, d, k, m = _HEADER.unpack(cur.take(_HEADER.size, "header"))
    if magic != BANK_MAGIC:
        raise BadMagicError(f"expected magic {BANK_MAGIC!r}, got {magic!r}", offset=0)
    if version != BANK_VERSION:
        raise VersionMismatchError(
            f"bank format version {version}, this reader supports {BANK_VERSION}", offset=4
        )
    if (k == 0) != (m == 0):
        raise BankFormatError(f"map shape {k}x{m}: both or neither must be zero", offset=20)

    has_maps = k > 0
    ids: List[str] = []
    min_item = 8 + 4 * d + 4 * k * m
    if count * min_item > len(data) - cur.pos:
        raise TruncatedError(
            f"header claims {count} items but only {len(data) - cur.pos} bytes follow",
            offset=len(data),
        )
    labels = np.zeros(count, dtype=np.int64)
    embeddings = np.zeros((count, d), dtype=np.float32)
    maps = np.zeros((count, k, m), dtype=np.float32) if has_maps else None

    for i in range(count):
        (id_len,) = _U32.unpack(cur.take(_U32.size, f"id length of item {i}"))
        id_offset = cur.pos
        try:
            item_id = cur.take(id_len, f"id of item {i}").decode("utf-8")
        except UnicodeDecodeError as e:
            raise BankFormatError(f"item {i} id is not valid UTF-8", offset=id_offset) from e
        (labels[i],) = _U32.unpack(cur.take(_U32.size, f"label of item {i}"))
        emb_offset = cur.pos
        emb = np.frombuffer(cur.take(4 * d, f"embedding of item {i}"), dtype=_F32)
        norm = float(np.linalg.norm(emb.astype(np.float64)))
        if not abs(norm - 1.0) <= NORM_TOL:
            raise NormViolationError(
                f"item {item_id!r} embedding norm {norm} is not 1 within {NORM_TOL}",
                offset=emb_offset,
            )
        embeddings[i] = emb
        if maps is not None:
            raw = cur.take(4 * k * m, f"feature map of item {i}")
            maps[i] = np.frombuffer(raw, dtype=_F32).reshape(k, m)
        ids.append(item_id)

    if cur.pos != len(data):
        raise TrailingBytesError(
            f"{len(data) - cur.pos} bytes after the last item", offset=cur.pos
        )
    return FeatureBank(ids=ids, labels=labels, embeddings=embeddings, maps=maps)


def read_bank(path: PathLike) -> FeatureBank:
    bank = decode_bank(Path(path).read_bytes())
    record_bank_items(len(bank), "read")
    logger.info(
        "Read feature bank %s (%d items, d=%d, maps=%s)",
        path,
        len(bank),
        bank.dim,
        bank.map_shape,
    )
    return bank
