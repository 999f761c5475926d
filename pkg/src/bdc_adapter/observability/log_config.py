"""Root logger setup: plain text or JSON lines on stderr."""

from __future__ import annotations

import logging
import sys
from typing import Optional

from pythonjsonlogger import jsonlogger

from ..settings import log_format, log_level

_TEXT_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_JSON_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def configure_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler._bdc_adapter = True  # type: ignore[attr-defined]
    if (fmt or log_format()) == "json":
        handler.setFormatter(jsonlogger.JsonFormatter(_JSON_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(_TEXT_FORMAT))
    root = logging.getLogger()
    for existing in list(root.handlers):
        if getattr(existing, "_bdc_adapter", False):
            root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel((level or log_level()).upper())
