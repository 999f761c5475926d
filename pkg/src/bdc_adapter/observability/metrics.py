"""Prometheus metrics for pipeline runs (bounded labels only).

Nothing is served; the CLI can dump the registry to a text file at exit.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from prometheus_client import REGISTRY, Counter, Histogram, write_to_textfile

from ..settings import metrics_enabled

STAGE_GENERATE = "generate"
STAGE_PROTOTYPES = "prototypes"
STAGE_TRAIN = "train"
STAGE_EVAL = "eval"
STAGE_GRID = "grid"
STAGE_ABLATE = "ablate"
STAGE_DCOV = "dcov"

VALID_STAGES = frozenset(
    {
        STAGE_GENERATE,
        STAGE_PROTOTYPES,
        STAGE_TRAIN,
        STAGE_EVAL,
        STAGE_GRID,
        STAGE_ABLATE,
        STAGE_DCOV,
    }
)

MODE_FUSED = "fused"
MODE_HEAD_ONLY = "head_only"

BDC_STAGE_DURATION = Histogram(
    "bdc_stage_duration_seconds",
    "Time spent in pipeline stages",
    ["stage"],
    buckets=(0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0, 60.0),
)

BDC_TRAIN_STEPS = Counter(
    "bdc_train_steps_total",
    "Optimizer steps taken by the reasoning head",
)

BDC_PREDICTIONS = Counter(
    "bdc_predictions_total",
    "Query predictions by fusion mode",
    ["mode"],
)

BDC_BANK_ITEMS = Counter(
    "bdc_bank_items_total",
    "Feature bank items read or written",
    ["direction"],
)

BDC_NUMERICAL_FAILURES = Counter(
    "bdc_numerical_failures_total",
    "Runs aborted on non-finite values",
)


def normalize_stage(stage: Optional[str]) -> str:
    if not stage or stage not in VALID_STAGES:
        return "unknown"
    return stage


def observe_stage_seconds(stage: str, seconds: float) -> None:
    if not metrics_enabled():
        return
    BDC_STAGE_DURATION.labels(stage=normalize_stage(stage)).observe(seconds)


def record_train_step() -> None:
    if not metrics_enabled():
        return
    BDC_TRAIN_STEPS.inc()


def record_predictions(count: int, alpha: float) -> None:
    if not metrics_enabled() or count <= 0:
        return
    mode = MODE_HEAD_ONLY if alpha == 0.0 else MODE_FUSED
    BDC_PREDICTIONS.labels(mode=mode).inc(count)


def record_bank_items(count: int, direction: str) -> None:
    if not metrics_enabled() or count <= 0:
        return
    if direction not in ("read", "write"):
        direction = "read"
    BDC_BANK_ITEMS.labels(direction=direction).inc(count)


def record_numerical_failure() -> None:
    if not metrics_enabled():
        return
    BDC_NUMERICAL_FAILURES.inc()


def dump_metrics(path: Path) -> None:
    """Write the default registry in Prometheus text format (no-op when disabled)."""
    if not metrics_enabled():
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
