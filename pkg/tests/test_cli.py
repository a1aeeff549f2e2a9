import json
import subprocess
import sys

from legomem.bank import read_manifest
from legomem.cli import main
from legomem.harness import CSV_HEADER, builtin_bank_path, golden_logs
from legomem.logs import write_logs


def test_missing_config_is_usage_error(capsys):
    assert main(["run", "--config", "missing.toml"]) == 2
    err = capsys.readouterr().err
    assert err.startswith("usage: legomem") and "missing.toml" in err


def test_bad_flags_are_usage_errors(capsys):
    assert main([]) == 2
    assert main(["run"]) == 2
    assert main(["split", "--seed", "x"]) == 2


def test_invalid_config_is_usage_error(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('placement = "everywhere"\n')
    assert main(["run", "--config", str(cfg)]) == 2


def test_run_then_report(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('variant = "vanilla"\nplacement = "orch_and_agent"\noutput_dir = "runs/golden"\n')
    assert main(["run", "--config", str(cfg)]) == 0
    assert "100.00" in capsys.readouterr().out
    assert main(["report", str(tmp_path / "runs"), "--csv", str(tmp_path / "r.csv")]) == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) == "variant,placement,level,success_rate,avg_steps,step_failure_rate"
    assert len(lines) == 1 + 4


def test_report_on_empty_dir_is_runtime_error(tmp_path):
    assert main(["report", str(tmp_path)]) == 1


def test_validate_bank_counts(capsys):
    assert main(["validate-bank"]) == 0
    out = capsys.readouterr().out
    counts = read_manifest(builtin_bank_path())["counts"]
    assert f"full_task {counts['full_task']}  subtask {counts['subtask']}" in out
    for agent, n in counts["agents"].items():
        assert f"  {agent} {n}" in out


def test_validate_bank_missing_dir(tmp_path):
    assert main(["validate-bank", str(tmp_path / "nope")]) == 1


def test_split(capsys):
    assert main(["split", "--seed", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["train"]) == len(out["test"]) == 6


def test_curate(tmp_path, suite, capsys):
    write_logs(golden_logs(suite[:3]), tmp_path / "logs.jsonl")
    (tmp_path / "curator.toml").write_text('kind = "rule-based"\n')
    argv = ["curate", "--logs", str(tmp_path / "logs.jsonl"), "--out", str(tmp_path / "bank"), "--model", str(tmp_path / "curator.toml")]
    assert main(argv) == 0
    assert "kept 3 / dropped 0 of 3" in capsys.readouterr().out
    assert read_manifest(tmp_path / "bank")["counts"]["full_task"] == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "legomem.cli", "validate-bank"], capture_output=True, text=True)
    assert proc.returncode == 0 and "ok  content_hash" in proc.stdout
