"""
bdc-adapter command line.

    bdc-adapter gen        synthetic bank + manifest
    bdc-adapter prototypes class BDC prototypes from a sampled support set
    bdc-adapter train      fit projection and reasoning head, write a checkpoint
    bdc-adapter eval       score a query split, write a JSONL report
    bdc-adapter dcov       distance covariance / correlation of two column sets
    bdc-adapter grid       (alpha, delta) search on the validation split
    bdc-adapter ablate     head w/o init, head w/ init, head + BDC

Every run echoes its resolved configuration as one JSON line on stdout,
then one JSON result line. Failures print one JSON line on stderr and exit
1 (usage), 2 (data/format) or 3 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from .. import settings
from ..errors import BdcAdapterError, ConfigError, UsageError
from ..observability.log_config import configure_logging
from ..observability.metrics import dump_metrics
from ..observability.timing import log_run_summary, new_run_id
from ..reduction import DEFAULT_OUT_DIM
from .commands import COMMANDS, parse_float_list, parse_int_list

logger = logging.getLogger(__name__)

DEFAULT_SHOTS = 8


class CliParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so every failure maps to one exit code."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _list_of(parse):
    def _convert(text: str):
        try:
            values = parse(text)
        except ValueError as e:
            raise argparse.ArgumentTypeError(f"bad list {text!r}: {e}") from e
        if not values:
            raise argparse.ArgumentTypeError("list must not be empty")
        return values

    return _convert


def build_parser() -> CliParser:
    data = settings.data_dir()

    common = CliParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.default_seed())
    common.add_argument(
        "--metrics-file", type=Path, default=None, help="Write Prometheus text metrics here"
    )

    bank_io = CliParser(add_help=False)
    bank_io.add_argument("--bank", type=Path, default=data / "bank.fbnk")
    bank_io.add_argument("--manifest", type=Path, default=data / "manifest.json")

    projection = CliParser(add_help=False)
    projection.add_argument("--proj-dim", type=int, default=DEFAULT_OUT_DIM)
    projection.add_argument(
        "--projection", choices=["random-orthogonal", "pca"], default="random-orthogonal"
    )
    projection.add_argument(
        "--positions-as-observations",
        action="store_true",
        help="Use spatial positions instead of channels as BDC observations",
    )

    training = CliParser(add_help=False)
    training.add_argument("--epochs", type=int, default=30)
    training.add_argument("--lr", type=float, default=1e-3)
    training.add_argument("--wd", type=float, default=0.01)
    training.add_argument(
        "--image-batch", type=int, default=None, help="Images per step (default: shots)"
    )
    training.add_argument(
        "--text-batch", type=int, default=None, help="Prompts per step (default: classes)"
    )

    fusion = CliParser(add_help=False)
    fusion.add_argument("--alpha", type=float, default=None, help="Residual ratio (default 1.0)")
    fusion.add_argument("--delta", type=float, default=None, help="Sharpness (default 1.0)")
    fusion.add_argument(
        "--tau", type=float, default=None, help="Zero-shot temperature (default 0.01)"
    )

    parser = CliParser(
        prog="bdc-adapter", description="BDC prototype adapter for few-shot classification"
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    gen = sub.add_parser("gen", parents=[common, bank_io], help="Generate a synthetic bank")
    gen.add_argument("--classes", type=int, default=4)
    gen.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    gen.add_argument("--queries", type=int, default=200)
    gen.add_argument("--channels", type=int, default=16)
    gen.add_argument("--positions", type=int, default=32)
    gen.add_argument("--pairs", type=int, default=None)
    gen.add_argument("--noise", type=float, default=0.1)
    gen.add_argument("--embed-signal", type=float, default=0.1)
    gen.add_argument("--text-noise", type=float, default=0.05)
    gen.add_argument("--templates", type=int, default=2)
    gen.add_argument("--train-per-class", type=int, default=None)
    gen.add_argument("--val-per-class", type=int, default=10)

    protos = sub.add_parser(
        "prototypes", parents=[common, bank_io, projection], help="Build class prototypes"
    )
    protos.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    protos.add_argument("--out", type=Path, default=data / "prototypes.bdcp")

    train = sub.add_parser(
        "train",
        parents=[common, bank_io, projection, training, fusion],
        help="Train the reasoning head",
    )
    train.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    train.add_argument("--no-text-init", action="store_true", help="Random head initialization")
    train.add_argument("--checkpoint", type=Path, default=data / "model.bdck")

    evaluate = sub.add_parser(
        "eval", parents=[common, bank_io, fusion], help="Evaluate a checkpoint"
    )
    evaluate.add_argument("--checkpoint", type=Path, default=data / "model.bdck")
    evaluate.add_argument("--prototypes", type=Path, default=None)
    evaluate.add_argument("--split", choices=["train", "val", "test"], default="test")
    evaluate.add_argument("--report", type=Path, default=data / "eval_report.jsonl")
    evaluate.add_argument("--workers", type=int, default=settings.eval_workers())

    dcov = sub.add_parser("dcov", parents=[common], help="dCov / dCor between two column sets")
    dcov.add_argument("--bank", type=Path, default=data / "bank.fbnk")
    dcov.add_argument("--manifest", type=Path, default=None)
    dcov.add_argument("--x-cols", type=_list_of(parse_int_list), required=True)
    dcov.add_argument("--y-cols", type=_list_of(parse_int_list), required=True)
    dcov.add_argument("--source", choices=["maps", "embeddings"], default="maps")
    dcov.add_argument("--split", choices=["train", "val", "test"], default=None)
    dcov.add_argument("--label", type=int, default=None)
    dcov.add_argument("--max-samples", type=int, default=2000)
    dcov.add_argument("--report", type=Path, default=None)

    grid = sub.add_parser("grid", parents=[common, bank_io, fusion], help="Search alpha and delta")
    grid.add_argument("--checkpoint", type=Path, default=data / "model.bdck")
    grid.add_argument("--prototypes", type=Path, default=None)
    grid.add_argument("--split", choices=["train", "val", "test"], default="val")
    grid.add_argument(
        "--alpha-grid", type=_list_of(parse_float_list), default=[0.0, 0.5, 1.0, 2.0, 4.0]
    )
    grid.add_argument("--delta-grid", type=_list_of(parse_float_list), default=[0.5, 1.0, 2.0, 4.0])
    grid.add_argument("--report", type=Path, default=None)
    grid.add_argument("--write-checkpoint", type=Path, default=None)

    ablate = sub.add_parser(
        "ablate",
        parents=[common, bank_io, projection, training, fusion],
        help="Component ablation table",
    )
    ablate.add_argument("--shots", type=_list_of(parse_int_list), default=[DEFAULT_SHOTS])
    ablate.add_argument("--report", type=Path, default=None)
    return parser


def _validate(args: argparse.Namespace) -> None:
    positive = (
        "epochs",
        "proj_dim",
        "workers",
        "max_samples",
        "classes",
        "queries",
        "channels",
        "positions",
    )
    for name in positive:
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be at least 1, got {value}")
    shots = getattr(args, "shots", None)
    for m in shots if isinstance(shots, list) else [shots]:
        if m is not None and m < 1:
            raise UsageError(f"--shots must be at least 1, got {m}")
    if not 0 <= args.seed < 2**64:
        raise UsageError(f"--seed must lie in [0, 2**64), got {args.seed}")


def _emit(record: Dict[str, Any], stream=None) -> None:
    print(json.dumps(record, sort_keys=True, default=str), file=stream or sys.stdout, flush=True)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the process exit code."""
    run_id = new_run_id()
    started = time.perf_counter()
    command = "unknown"
    metrics_file: Optional[Path] = None
    failure: Optional[BdcAdapterError] = None
    code, status = 0, "ok"
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        command = args.command
        metrics_file = args.metrics_file
        _validate(args)
        result = COMMANDS[command](args, run_id, lambda config: _emit({"config": config}))
        _emit({"result": result})
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except ValidationError as e:
        failure = ConfigError(str(e.errors()[0]["msg"]))
    except BdcAdapterError as e:
        failure = e
    except OSError as e:
        failure = BdcAdapterError(f"{type(e).__name__}: {e}")

    if failure is not None:
        code, status = failure.exit_code, type(failure).__name__
    if metrics_file is not None:
        dump_metrics(metrics_file)
    log_run_summary(
        logger,
        run_id=run_id,
        command=command,
        total_ms=(time.perf_counter() - started) * 1000.0,
        status=status,
    )
    if failure is not None:
        _emit(failure.to_record(), sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    return run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
