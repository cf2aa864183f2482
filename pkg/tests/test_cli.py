import csv
import json
import os

import pytest

from multilayer_defense.cli import EXIT_CONFIG, EXIT_CRITERIA, EXIT_IO, EXIT_OK, main
from multilayer_defense.harness import RUN_FIELDS


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.mark.parametrize("argv", [["--help"], ["simulate", "--help"], ["train", "--help"], ["evaluate", "--help"], ["report", "--help"]])
def test_help_exits_zero_without_touching_files(argv, tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_OK
    assert "usage" in capsys.readouterr().out
    assert os.listdir(tmp_path) == []


def test_usage_error_exits_two(capsys):
    assert main(["simulate"]) == EXIT_CONFIG
    assert main(["launch"]) == EXIT_CONFIG


def test_simulate_one_run_per_scenario(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--seed", "42", "--runs", "1", "--out", str(out)]) == EXIT_OK
    data = rows(out / "runs.csv")
    assert len(data) == 4
    assert list(data[0]) == list(RUN_FIELDS)
    assert {r["seed"] for r in data} == {"42"}
    assert json.loads((out / "summary.json").read_text())["total_runs"] == 4
    assert (out / "events.jsonl").read_text().count("\n") == sum(int(r["steps"]) for r in data)


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--seed", "7", "--runs", "2", "--out", str(d), "--no-events"]) == EXIT_OK
    assert (a / "runs.csv").read_bytes() == (b / "runs.csv").read_bytes()
    assert not (a / "events.jsonl").exists()


def test_simulate_format_switch(tmp_path):
    assert main(["simulate", "--runs", "1", "--out", str(tmp_path), "--format", "json", "--no-events"]) == EXIT_OK
    assert (tmp_path / "summary.json").exists() and not (tmp_path / "runs.csv").exists()


def test_bad_config_names_key(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("constants:\n  decoy_radius_m: lots\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "constants.decoy_radius_m" in capsys.readouterr().err


def test_missing_config_exits_two(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unwritable_output_exits_three(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--runs", "1", "--out", str(blocker / "sub")]) == EXIT_IO


def test_train_writes_policy_and_curve(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["train", "--episodes", "1", "--seed", "3", "--eval-seeds", "2", "--out", str(d)]) == EXIT_OK
    assert len(rows(a / "learning_curve.csv")) == 1
    assert (a / "policy.bin").read_bytes() == (b / "policy.bin").read_bytes()
    out = capsys.readouterr().out
    assert "greedy mean return" in out and "random mean return" in out


def test_train_without_layers_exits_two(tmp_path):
    assert main(["train", "--scenario", "baseline", "--episodes", "1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_evaluate_reads_policy(tmp_path, capsys):
    assert main(["train", "--episodes", "1", "--eval-seeds", "1", "--out", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["evaluate", "--policy", str(tmp_path / "policy.bin"), "--runs", "2", "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["episodes"] == 2
    assert (tmp_path / "evaluation.json").exists()


def test_evaluate_rejects_corrupt_policy(tmp_path):
    bad = tmp_path / "p.bin"
    bad.write_bytes(b"not a policy\n")
    assert main(["evaluate", "--policy", str(bad), "--runs", "1"]) == EXIT_CONFIG


def _summary(tmp_path, scenarios):
    p = tmp_path / "summary.json"
    p.write_text(json.dumps({"scenarios": scenarios}))
    return p


PASSING = {
    "baseline": {"deviation_mean": 0.25, "acquisition_rate": 0.93, "total_spend_norm_mean": 0.0},
    "ew_only": {"deviation_mean": 1.0, "acquisition_rate": 0.6, "total_spend_norm_mean": 1.0},
    "cyber_only": {"deviation_mean": 0.6, "acquisition_rate": 0.7, "total_spend_norm_mean": 1.0},
    "multi_layer": {"deviation_mean": 8.0, "acquisition_rate": 0.31, "total_spend_norm_mean": 1.27},
}


def test_report_passing_summary(tmp_path, capsys):
    out = tmp_path / "verdict"
    assert main(["report", str(_summary(tmp_path, PASSING)), "--out", str(out), "--format", "both"]) == EXIT_OK
    verdicts = json.loads((out / "verdict.json").read_text())
    assert {v["status"] for v in verdicts} == {"pass"}
    assert any(v["name"] == "baseline_deviation" and v["reference"] == [0.25, 0.25] for v in verdicts)
    assert len(rows(out / "verdict.csv")) == len(verdicts)
    assert "PASS" in capsys.readouterr().out


def test_report_missing_scenario_exits_one(tmp_path, capsys):
    partial = {k: v for k, v in PASSING.items() if k != "multi_layer"}
    assert main(["report", str(_summary(tmp_path, partial))]) == EXIT_CRITERIA
    assert "MISSING" in capsys.readouterr().out


def test_report_failing_value_exits_one(tmp_path):
    bad = dict(PASSING, baseline=dict(PASSING["baseline"], acquisition_rate=0.5))
    assert main(["report", str(_summary(tmp_path, bad))]) == EXIT_CRITERIA


def test_report_malformed_csv_names_line(tmp_path, capsys):
    p = tmp_path / "runs.csv"
    p.write_text(",".join(RUN_FIELDS) + "\nbaseline,1,hit_true,0.2,1,0,0,0,100\nbaseline,2,hit_true,oops,1,0,0,0,100\n")
    assert main(["report", str(p)]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err


def test_report_from_runs_csv(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--runs", "2", "--out", str(out), "--no-events"]) == EXIT_OK
    # two runs per scenario cannot satisfy every tolerance, but the report must be produced
    assert main(["report", str(out / "runs.csv"), "--out", str(out)]) in (EXIT_OK, EXIT_CRITERIA)
    assert (out / "verdict.json").exists()


def test_report_missing_input_exits_three(tmp_path):
    assert main(["report", str(tmp_path / "absent.csv")]) == EXIT_IO
