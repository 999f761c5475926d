"""Run correlation and stage timing helpers."""

from __future__ import annotations

import logging
import time
import uuid
from contextlib import contextmanager
from typing import Any, Dict, Iterator, Optional

from .metrics import observe_stage_seconds

logger = logging.getLogger(__name__)


def new_run_id() -> str:
    return str(uuid.uuid4())


@contextmanager
def stage_timer(
    log: logging.Logger,
    *,
    run_id: str,
    stage: str,
    extra: Optional[Dict[str, Any]] = None,
) -> Iterator[Dict[str, float]]:
    """
    Context manager that records duration_ms, logs a structured line and
    feeds the stage histogram.

    Yields a dict with key 'start' (perf_counter); on exit sets 'duration_ms'.
    """
    ctx: Dict[str, float] = {"start": time.perf_counter()}
    try:
        yield ctx
    finally:
        seconds = time.perf_counter() - ctx["start"]
        ctx["duration_ms"] = seconds * 1000.0
        observe_stage_seconds(stage, seconds)
        payload: Dict[str, Any] = {
            "run_id": run_id,
            "stage": stage,
            "duration_ms": round(ctx["duration_ms"], 3),
        }
        if extra:
            payload.update(extra)
        log.info("stage_timing %s", payload)


def log_run_summary(
    log: logging.Logger,
    *,
    run_id: str,
    command: str,
    total_ms: float,
    status: str,
    extra: Optional[Dict[str, Any]] = None,
) -> None:
    payload: Dict[str, Any] = {
        "run_id": run_id,
        "command": command,
        "total_ms": round(total_ms, 3),
        "status": status,
    }
    if extra:
        payload.update(extra)
    log.info("run_summary %s", payload)
