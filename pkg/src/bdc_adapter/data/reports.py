"""Line-delimited JSON reports: one self-describing record per line, keys sorted."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

from ..fewshot import AblationResult, AccuracyReport
from .atomic import PathLike, atomic_write_text

logger = logging.getLogger(__name__)

Record = Dict[str, Any]


def _floats(values: Iterable[float]) -> List[float]:
    return [float(v) for v in values]


def query_records(report: AccuracyReport) -> List[Record]:
    out: List[Record] = []
    for qid, label, pred in zip(report.query_ids, report.true_labels, report.predictions):
        out.append(
            {
                "type": "query",
                "id": qid,
                "label": int(label),
                "prediction": pred.label,
                "correct": pred.label == int(label),
                "p_b": _floats(pred.p_b),
                "p_m": _floats(pred.p_m),
                "fused": _floats(pred.fused),
            }
        )
    return out


def summary_record(report: AccuracyReport, config: Mapping[str, Any]) -> Record:
    return {
        "type": "summary",
        "accuracy": report.overall,
        "correct": report.correct,
        "total": report.total,
        "per_class": report.per_class,
        "class_names": list(report.class_names),
        "confusion": report.confusion.tolist(),
        "zero_shot_accuracy": report.zero_shot_accuracy,
        "config": dict(config),
    }


def eval_records(report: AccuracyReport, config: Mapping[str, Any]) -> List[Record]:
    return query_records(report) + [summary_record(report, config)]


def grid_records(
    table: Sequence[Mapping[str, float]], best: Mapping[str, Any], config: Mapping[str, Any]
) -> List[Record]:
    rows: List[Record] = [{"type": "grid", **dict(row)} for row in table]
    rows.append({"type": "summary", "best": dict(best), "config": dict(config)})
    return rows


def ablation_records(result: AblationResult, config: Mapping[str, Any]) -> List[Record]:
    rows: List[Record] = [
        {"type": "ablation", "row": name, "shots": list(result.shots), "accuracy": _floats(acc)}
        for name, acc in result.rows.items()
    ]
    rows.append(
        {
            "type": "summary",
            "shots": list(result.shots),
            "bdc_only": _floats(result.bdc_only),
            "mean_embedding": _floats(result.mean_embedding),
            "config": dict(config),
        }
    )
    return rows


def dumps_record(record: Mapping[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, allow_nan=False)


def write_jsonl(path: PathLike, records: Iterable[Mapping[str, Any]]) -> Path:
    lines = [dumps_record(r) for r in records]
    out = atomic_write_text(path, "".join(line + "\n" for line in lines))
    logger.info("Wrote %d report records to %s", len(lines), out)
    return out


def read_jsonl(path: PathLike, record_type: Optional[str] = None) -> List[Record]:
    records = [
        json.loads(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if record_type is None:
        return records
    return [r for r in records if r.get("type") == record_type]
