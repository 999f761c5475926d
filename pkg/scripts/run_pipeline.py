#!/usr/bin/env python3
"""
End-to-end run on the synthetic benchmark: gen -> prototypes -> train -> eval -> ablate.

Example:
  python scripts/run_pipeline.py --out-dir runs/demo --seed 7
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List

_ROOT = Path(__file__).resolve().parents[1]
if str(_ROOT / "src") not in sys.path:
    sys.path.insert(0, str(_ROOT / "src"))

from bdc_adapter.cli.main import main as cli_main  # noqa: E402


def pipeline_steps(out_dir: Path, seed: int, shots: str) -> List[List[str]]:
    bank = str(out_dir / "bank.fbnk")
    manifest = str(out_dir / "manifest.json")
    ckpt = str(out_dir / "model.bdck")
    protos = str(out_dir / "prototypes.bdcp")
    io = ["--bank", bank, "--manifest", manifest, "--seed", str(seed)]
    first_shot = shots.split(",")[0]
    return [
        ["gen", *io],
        ["prototypes", *io, "--shots", first_shot, "--out", protos],
        ["train", *io, "--shots", first_shot, "--checkpoint", ckpt],
        [
            "eval",
            *io,
            "--checkpoint",
            ckpt,
            "--prototypes",
            protos,
            "--report",
            str(out_dir / "eval_report.jsonl"),
        ],
        ["ablate", *io, "--shots", shots, "--report", str(out_dir / "ablation.jsonl")],
    ]


def main() -> int:
    p = argparse.ArgumentParser(description="Run the full synthetic pipeline")
    p.add_argument("--out-dir", type=Path, default=Path("runs/pipeline"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--shots", default="8", help="Comma list; the first drives prototypes/train/eval"
    )
    args = p.parse_args()
    for step in pipeline_steps(args.out_dir, args.seed, args.shots):
        code = cli_main(step)
        if code != 0:
            print(f"step {step[0]} failed with exit code {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
