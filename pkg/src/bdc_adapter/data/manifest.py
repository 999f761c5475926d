"""Bank manifest: class names, prompt templates and per-item split assignment (JSON)."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List, Literal

from pydantic import BaseModel, Field, ValidationError, field_validator

from ..errors import ManifestError
from .atomic import PathLike, atomic_write_text
from .feature_bank import TEXT_PREFIX, FeatureBank

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1

Split = Literal["train", "val", "test"]


class Manifest(BaseModel):
    version: int = MANIFEST_VERSION
    classes: List[str] = Field(min_length=1, description="Class names; index = label")
    templates: List[str] = Field(default_factory=lambda: ["a photo of a"])
    splits: Dict[str, Split] = Field(default_factory=dict)

    @field_validator("version")
    @classmethod
    def _known_version(cls, v: int) -> int:
        if v != MANIFEST_VERSION:
            raise ValueError(f"manifest version {v} is not supported")
        return v

    @field_validator("classes")
    @classmethod
    def _unique_classes(cls, v: List[str]) -> List[str]:
        if len(set(v)) != len(v):
            raise ValueError("class names must be unique")
        return v

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def ids_in(self, split: str) -> List[str]:
        return [item_id for item_id, s in self.splits.items() if s == split]

    def check_against(self, bank: FeatureBank) -> None:
        """Every split id exists in the bank and every bank label names a class."""
        known = set(bank.ids)
        missing = [item_id for item_id in self.splits if item_id not in known]
        if missing:
            raise ManifestError(
                f"{len(missing)} manifest ids are not in the bank, e.g. {missing[0]!r}"
            )
        texts = [item_id for item_id in self.splits if item_id.startswith(TEXT_PREFIX)]
        if texts:
            raise ManifestError(f"text item {texts[0]!r} cannot be assigned to a split")
        if len(bank) and int(bank.labels.max()) >= self.num_classes:
            raise ManifestError(
                f"bank label {int(bank.labels.max())} has no class "
                f"(manifest lists {self.num_classes})"
            )


def load_manifest(path: PathLike) -> Manifest:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return Manifest.model_validate(raw)
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: not valid JSON ({e.msg})", offset=e.pos) from e
    except ValidationError as e:
        raise ManifestError(f"{path}: {e.errors()[0]['msg']}") from e


def save_manifest(path: PathLike, manifest: Manifest) -> Path:
    text = json.dumps(manifest.model_dump(), indent=2, sort_keys=True) + "\n"
    out = atomic_write_text(path, text)
    logger.info(
        "Wrote manifest %s (%d classes, %d items)",
        out,
        manifest.num_classes,
        len(manifest.splits),
    )
    return out
