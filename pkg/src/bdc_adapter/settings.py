"""Environment-driven defaults. CLI flags override every value here."""

from __future__ import annotations

import os
from pathlib import Path

from .errors import ConfigError


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes")


def data_dir() -> Path:
    return Path(os.getenv("BDC_DATA_DIR", "data"))


def _env_int(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


def default_seed() -> int:
    return _env_int("BDC_SEED", "0")


def eval_workers() -> int:
    return max(1, _env_int("BDC_EVAL_WORKERS", "1"))


def log_level() -> str:
    return os.getenv("BDC_LOG_LEVEL", "INFO").upper()


def log_format() -> str:
    fmt = os.getenv("BDC_LOG_FORMAT", "text").lower().strip()
    return "json" if fmt == "json" else "text"


def metrics_enabled() -> bool:
    return _env_flag("METRICS_ENABLED", "true")
