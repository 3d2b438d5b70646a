import hashlib
import json

import pytest

from pilotfair.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main, render_report
from pilotfair.survey import default_instruments


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path / "out")])


def test_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert run(tmp_path, "experiment", "--trials", "x") == EXIT_USAGE
    assert "usage error" in capsys.readouterr().err


def test_missing_input_is_data_error(tmp_path):
    assert run(tmp_path, "train", str(tmp_path / "missing.csv")) == EXIT_DATA


def test_experiment_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["experiment", "--seed", "3", "--trials", "6", "--out", str(d)]) == EXIT_OK
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    manifest = json.loads((a / "manifest.json").read_text())
    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((a / name).read_bytes()).hexdigest() == digest
    assert manifest["seed"] == 3 and manifest["command"] == "experiment"


def test_full_pipeline(tmp_path, capsys):
    out = tmp_path / "out"
    assert run(tmp_path, "synth", "--seed", "1") == EXIT_OK
    data = out / "dataset.csv"
    cfg = tmp_path / "small.json"
    cfg.write_text(json.dumps({"grid": {"max_depth_values": [2, 3], "min_samples_leaf_values": [2],
                                        "min_samples_split_values": [2], "k": 3}}))
    assert run(tmp_path, "train", str(data), "--config", str(cfg)) == EXIT_OK
    assert len((out / "cv_table.csv").read_text().splitlines()) == 1 + 4
    tree = out / "tree.json"
    assert run(tmp_path, "mitigate", str(data), "--tree", str(tree)) == EXIT_OK
    policy = out / "policy_equalized_odds.json"
    assert run(tmp_path, "audit", str(data), "--tree", str(tree), "--policy", str(policy)) == EXIT_OK
    report = json.loads((out / "fairness_report.json").read_text())
    assert set(report["selection_rate"]) == {"female", "male"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["inputs"][str(policy)] == hashlib.sha256(policy.read_bytes()).hexdigest()
    assert run(tmp_path, "audit", str(data), "--tree", str(tree), "--format", "csv") == EXIT_OK
    assert (out / "fairness_report.csv").read_text().startswith("metric,group,value\n")


def test_audit_perfect_predictor(tmp_path):
    rows = ["sex,age,PSS,JSS,MFI,GF,PF,RA,RM,MF,label"]
    for sex in ("F", "M"):
        for label in (0, 1):
            for _ in range(3):
                rows.append(f"{sex},20," + ",".join([str(0.2 + 0.6 * label)] * 8) + f",{label}")
    data = tmp_path / "d.csv"
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "out"
    assert run(tmp_path, "train", str(data), "--no-balance") == EXIT_OK
    assert run(tmp_path, "audit", str(data), "--tree", str(out / "tree.json")) == EXIT_OK
    report = json.loads((out / "fairness_report.json").read_text())
    assert report["demographic_parity_difference"] == 0.0
    assert report["equalized_odds_difference"] == 0.0
    assert report["accuracy"] == 1.0


def test_ingest(tmp_path):
    specs = default_instruments()
    header = ["participant_id", "sex", "age", "cohort"] + [c for s in specs for c in s.columns()]
    answers = [str(s.min_value) for s in specs for _ in range(s.question_count)]
    raw = tmp_path / "raw.csv"
    raw.write_text(",".join(header) + "\n" + ",".join(["p1", "F", "19", "pilot"] + answers) + "\n")
    assert run(tmp_path, "ingest", str(raw)) == EXIT_OK
    lines = (tmp_path / "out" / "dataset.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].endswith(",1")
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(header) + "\np1,F,19\n")
    assert run(tmp_path, "ingest", str(bad)) == EXIT_DATA


def test_report_percentages(tmp_path, capsys):
    summary = {"n_trials": 30, "demographic_parity": {
        "metrics": {"demographic_parity_difference": {"before": 0.385, "after": 0.045,
                                                      "percent_improvement": 88.31168831168831}},
        "t_test": {"metric": "demographic_parity_difference", "t": 30.59, "df": 58,
                   "p_value": 1.79e-37}}}
    text = render_report(summary)
    assert "38.50%" in text and "4.50%" in text and "88.31%" in text and "t(58)" in text
    path = tmp_path / "summary.json"
    path.write_text(json.dumps(summary))
    assert main(["report", str(path), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert "88.31%" in capsys.readouterr().out
