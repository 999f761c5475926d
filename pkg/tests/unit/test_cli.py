"""bdc-adapter command line: exit codes, config echo, determinism, end-to-end runs."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from bdc_adapter.cli import run
from bdc_adapter.data import SynthSpec, generate_synthetic, load_checkpoint, read_jsonl


def _run(capsys, *argv):
    code = run([str(a) for a in argv])
    captured = capsys.readouterr()
    out = [json.loads(line) for line in captured.out.splitlines() if line.strip()]
    err = captured.err.strip().splitlines()
    return code, out, (json.loads(err[-1]) if err and code else None)


def _io(tmp: Path):
    return ["--bank", tmp / "bank.fbnk", "--manifest", tmp / "manifest.json", "--seed", 0]


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """gen + prototypes + train once for the read-only tests below."""
    tmp = tmp_path_factory.mktemp("cli")
    io = [str(a) for a in _io(tmp)]
    assert run(["gen", *io]) == 0
    assert run(["prototypes", *io, "--out", str(tmp / "p.bdcp")]) == 0
    assert run(["train", *io, "--checkpoint", str(tmp / "m.bdck")]) == 0
    return tmp


def test_config_echo_and_result(tmp_path, capsys):
    code, out, _ = _run(capsys, "gen", *_io(tmp_path), "--queries", 8)
    assert code == 0
    assert out[0]["config"]["command"] == "gen"
    assert out[0]["config"]["seed"] == 0
    assert out[0]["config"]["spec"]["queries"] == 8
    assert out[0]["config"]["spec"]["pairs"] == 4
    assert "queries" not in out[0]["config"]
    assert out[1]["result"]["items"] == 4 * (16 + 10) + 8 + 4 * 2


def test_gen_twice_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(capsys, "gen", *_io(a))[0] == 0
    assert _run(capsys, "gen", *_io(b))[0] == 0
    assert (a / "bank.fbnk").read_bytes() == (b / "bank.fbnk").read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_usage_errors_exit_one(capsys):
    code, _, err = _run(capsys, "eval", "--no-such-flag")
    assert code == 1
    assert err["error"] == "UsageError" and err["exit_code"] == 1
    code, _, err = _run(capsys, "ablate", "--shots", "2,x")
    assert code == 1
    code, _, err = _run(capsys, "gen", "--noise", "-1")
    assert code == 1 and err["error"] == "ConfigError"


def test_missing_bank_is_a_data_error(tmp_path, capsys):
    code, _, err = _run(capsys, "prototypes", *_io(tmp_path / "nothing"))
    assert code == 2
    assert err["exit_code"] == 2


def test_corrupt_bank_reports_offset(tmp_path, capsys, workspace):
    bank = tmp_path / "bank.fbnk"
    data = bytearray((workspace / "bank.fbnk").read_bytes())
    data[0:4] = b"NOPE"
    bank.write_bytes(bytes(data))
    (tmp_path / "manifest.json").write_bytes((workspace / "manifest.json").read_bytes())
    code, _, err = _run(capsys, "train", *_io(tmp_path), "--checkpoint", tmp_path / "m.bdck")
    assert code == 2
    assert err["error"] == "BadMagicError" and err["offset"] == 0


def test_non_finite_training_exits_three(tmp_path, capsys, workspace):
    io = ["--bank", workspace / "bank.fbnk", "--manifest", workspace / "manifest.json"]
    code, _, err = _run(
        capsys, "train", *io, "--lr", "1e308", "--epochs", 2, "--checkpoint", tmp_path / "x.bdck"
    )
    assert code == 3
    assert err["error"] == "NumericalFailure"
    assert not (tmp_path / "x.bdck").exists()


def test_eval_alpha_zero_matches_ablation_row(tmp_path, capsys, workspace):
    io = _io(workspace)
    code, out, _ = _run(
        capsys,
        "eval",
        *io,
        "--checkpoint",
        workspace / "m.bdck",
        "--alpha",
        0,
        "--report",
        tmp_path / "eval.jsonl",
    )
    assert code == 0
    head_only = out[-1]["result"]["accuracy"]
    code, out, _ = _run(capsys, "ablate", *io, "--shots", 8, "--report", tmp_path / "abl.jsonl")
    assert code == 0
    rows = read_jsonl(tmp_path / "abl.jsonl", "ablation")
    assert [r["row"] for r in rows] == ["MRN w/o init", "MRN w/ init", "MRN+BDC"]
    assert rows[1]["accuracy"] == [head_only]
    assert out[-1]["result"]["rows"]["MRN w/ init"] == [head_only]


def test_eval_report_and_inputs_untouched(tmp_path, capsys, workspace):
    inputs = [workspace / n for n in ("bank.fbnk", "manifest.json", "m.bdck", "p.bdcp")]
    before = [_sha(p) for p in inputs]
    report = tmp_path / "eval.jsonl"
    code, out, _ = _run(
        capsys,
        "eval",
        *_io(workspace),
        "--checkpoint",
        workspace / "m.bdck",
        "--prototypes",
        workspace / "p.bdcp",
        "--report",
        report,
        "--workers",
        3,
    )
    assert code == 0
    assert [_sha(p) for p in inputs] == before
    queries = read_jsonl(report, "query")
    summary = read_jsonl(report, "summary")[0]
    assert len(queries) == summary["total"] == 200
    assert summary["accuracy"] == out[-1]["result"]["accuracy"]
    assert summary["zero_shot_accuracy"] is not None
    assert all(0.0 < p <= 1.0 for q in queries for p in q["p_b"])
    lines = report.read_text().splitlines()
    assert all(list(json.loads(line)) == sorted(json.loads(line)) for line in lines)


def test_eval_refuses_mismatched_prototypes(tmp_path, capsys, workspace):
    other = tmp_path / "other.bdcp"
    code, _, _ = _run(capsys, "prototypes", *_io(workspace)[:4], "--seed", 99, "--out", other)
    assert code == 0
    code, _, err = _run(
        capsys,
        "eval",
        *_io(workspace),
        "--checkpoint",
        workspace / "m.bdck",
        "--prototypes",
        other,
        "--report",
        tmp_path / "r.jsonl",
    )
    assert code == 2
    assert err["error"] == "CheckpointError"


def test_grid_writes_best_config(tmp_path, capsys, workspace):
    out_ckpt = tmp_path / "best.bdck"
    code, out, _ = _run(
        capsys,
        "grid",
        *_io(workspace),
        "--checkpoint",
        workspace / "m.bdck",
        "--alpha-grid",
        "0,1,4",
        "--delta-grid",
        "1,2",
        "--report",
        tmp_path / "grid.jsonl",
        "--write-checkpoint",
        out_ckpt,
    )
    assert code == 0
    best = out[-1]["result"]["best"]
    assert len(read_jsonl(tmp_path / "grid.jsonl", "grid")) == 6
    stored = load_checkpoint(out_ckpt)
    assert (stored.fusion.alpha, stored.fusion.delta) == (best["alpha"], best["delta"])
    original = load_checkpoint(workspace / "m.bdck")
    assert stored.head.weights.tobytes() == original.head.weights.tobytes()


def test_dcov_on_planted_pair(capsys, workspace):
    data = generate_synthetic(SynthSpec())
    source = int(data.sources[0])
    paired = int(data.targets[0][0])
    unpaired = int(data.targets[1][0])
    base = ["dcov", "--bank", workspace / "bank.fbnk", "--label", 0, "--x-cols", source]
    code, out, _ = _run(capsys, *base, "--y-cols", paired)
    assert code == 0
    assert out[-1]["result"]["samples"] == 2000
    assert out[-1]["result"]["dcorr"] > 0.5
    code, out, _ = _run(capsys, *base, "--y-cols", unpaired)
    assert out[-1]["result"]["dcorr"] < 0.15


def test_dcov_column_range(capsys, workspace):
    code, _, err = _run(
        capsys, "dcov", "--bank", workspace / "bank.fbnk", "--x-cols", 0, "--y-cols", 99
    )
    assert code == 2 and err["error"] == "ShapeError"


def test_full_pipeline_reports_are_reproducible(tmp_path, capsys):
    reports = []
    for name in ("first", "second"):
        tmp = tmp_path / name
        assert _run(capsys, "gen", *_io(tmp))[0] == 0
        code, _, _ = _run(
            capsys, "train", *_io(tmp), "--epochs", 5, "--checkpoint", tmp / "m.bdck"
        )
        assert code == 0
        code, _, _ = _run(
            capsys,
            "eval",
            *_io(tmp),
            "--checkpoint",
            tmp / "m.bdck",
            "--report",
            tmp / "eval.jsonl",
            "--metrics-file",
            tmp / "metrics.prom",
        )
        assert code == 0
        reports.append((tmp / "eval.jsonl").read_bytes())
        assert "bdc_predictions_total" in (tmp / "metrics.prom").read_text()
    assert reports[0] == reports[1]


def test_echo_shows_resolved_and_merged_values(tmp_path, capsys, workspace):
    ckpt = tmp_path / "alpha3.bdck"
    code, out, _ = _run(
        capsys, "train", *_io(workspace), "--alpha", 3, "--epochs", 2, "--checkpoint", ckpt
    )
    assert code == 0
    config = out[0]["config"]
    assert config["projection"]["out_dim"] == 16
    assert config["train"]["image_per_step"] == 8
    assert config["train"]["text_per_step"] == 4
    assert config["fusion"]["alpha"] == 3.0
    assert "proj_dim" not in config and "alpha" not in config
    result = out[-1]["result"]
    assert result["trainable_parameters"] == 4 * 16
    assert result["train_ms"] >= 0.0

    code, out, _ = _run(
        capsys, "eval", *_io(workspace), "--checkpoint", ckpt, "--report", tmp_path / "r.jsonl"
    )
    assert code == 0
    config = out[0]["config"]
    assert config["fusion"]["alpha"] == 3.0
    assert config["fusion"]["delta"] == 1.0
    assert config["seeds"]["episode"] == 0
    assert config["projection"]["out_dim"] == 16
    assert "alpha" not in config


def test_out_of_range_seed_is_a_usage_error(tmp_path, capsys):
    code, out, err = _run(capsys, "gen", *_io(tmp_path)[:4], "--seed", 2**64)
    assert code == 1
    assert err["error"] == "UsageError" and err["exit_code"] == 1
    assert out == []


def test_non_integer_seed_variable_is_a_config_error(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BDC_SEED", "abc")
    code, _, err = _run(capsys, "gen", *_io(tmp_path)[:4])
    assert code == 1
    assert err["error"] == "ConfigError"
    assert "BDC_SEED" in err["reason"]
