"""Feature banks, manifests, checkpoints, episode sampling, synthetic data and reports."""

from .checkpoint import (
    Checkpoint,
    load_checkpoint,
    load_prototypes,
    save_checkpoint,
    save_prototypes,
)
from .episodes import sample_episode, text_templates_by_class
from .feature_bank import TEXT_PREFIX, FeatureBank, make_bank, read_bank, write_bank
from .manifest import Manifest, load_manifest, save_manifest
from .reports import read_jsonl, write_jsonl
from .synthetic import SynthSpec, SyntheticData, generate_synthetic

__all__ = [
    "Checkpoint",
    "FeatureBank",
    "Manifest",
    "SynthSpec",
    "SyntheticData",
    "TEXT_PREFIX",
    "generate_synthetic",
    "load_checkpoint",
    "load_manifest",
    "load_prototypes",
    "make_bank",
    "read_bank",
    "read_jsonl",
    "sample_episode",
    "save_checkpoint",
    "save_manifest",
    "save_prototypes",
    "text_templates_by_class",
    "write_bank",
    "write_jsonl",
]
