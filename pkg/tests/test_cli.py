import csv
import hashlib
import json
import os
from pathlib import Path

import pytest

from likevote.cli import main

PIPELINE = [
    ["synth", "--n", "500", "--seed", "3", "--output", "s"],
    ["features", "--input", "s/dataset.jsonl", "--model", "combined", "--output", "f"],
    ["fit", "--input", "s/dataset.jsonl", "--lambda-grid", "0.3,3,30", "--folds", "3",
     "--output", "fit"],
    ["fit", "--input", "f", "--model", "combined", "--lambda-grid", "1,10", "--folds", "3",
     "--output", "fitf"],
    ["eval", "--input", "fit/predictions.csv", "--output", "ev"],
    ["grid", "--input", "s/dataset.jsonl", "--min-likes", "1,4,7", "--output", "g"],
    ["propagate", "--input", "s/dataset.jsonl", "--output", "pr"],
    ["nonresponse", "--input", "s/dataset.jsonl", "--n-perm", "200",
     "--features", "gender,age_band,vote_intent", "--output", "nr"],
    ["forecast", "--input", "s/dataset.jsonl", "--polls", "s/polls.csv",
     "--actual", "s/election.csv", "--output", "fc"],
    ["replicate", "--n", "400", "--lambda-grid", "1,10", "--folds", "3", "--output", "rep"],
]


def _run_pipeline(root: Path):
    cwd = os.getcwd()
    os.chdir(root)
    try:
        for argv in PIPELINE:
            assert main(argv) == 0, argv
    finally:
        os.chdir(cwd)


def _digest(root: Path):
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    os.environ["SOURCE_DATE_EPOCH"] = "1500000000"
    roots = [tmp_path_factory.mktemp(f"run{i}") for i in range(2)]
    try:
        for r in roots:
            _run_pipeline(r)
    finally:
        del os.environ["SOURCE_DATE_EPOCH"]
    return roots


EXPECTED = {
    "s": ["dataset.jsonl", "media_posts.jsonl", "tags.jsonl", "comment_likes.jsonl",
          "polls.csv", "election.csv", "generator.json"],
    "f": ["features.csv", "labels.csv"],
    "fit": ["fit.json", "cv.csv", "report.json", "predictions.csv", "objective.png"],
    "ev": ["report.json"],
    "g": ["grid.csv", "grid_matrix.csv", "grid.png"],
    "pr": ["post_scores.csv", "political_posts.txt", "propagation.csv"],
    "nr": ["skew.csv"],
    "fc": ["forecast.csv", "weights.csv", "summary.json", "forecast.png"],
    "rep": ["table.txt", "table.csv", "reports.json", "replicate.png"],
}


def test_every_subcommand_writes_outputs(runs):
    root = runs[0]
    for d, files in EXPECTED.items():
        for f in files + ["manifest.json"]:
            assert (root / d / f).is_file(), f"{d}/{f}"
        man = json.loads((root / d / "manifest.json").read_text())
        assert set(man) >= {"subcommand", "config", "inputs", "output", "seed", "timestamp",
                            "version"}
    assert json.loads((root / "s/manifest.json").read_text())["timestamp"].startswith("2017-07-14")


def test_outputs_are_byte_identical(runs):
    a, b = (_digest(r) for r in runs)
    assert a.keys() == b.keys()
    diff = [k for k in a if a[k] != b[k]]
    assert diff == []


def test_fit_report_and_predictions(runs):
    root = runs[0]
    rep = json.loads((root / "fit/report.json").read_text())
    assert rep["chosen_lambda"] in (0.3, 3, 30)
    assert 0 <= rep["accuracy"] <= 1 and rep["included"] <= rep["total"]
    rows = list(csv.reader(open(root / "fit/predictions.csv")))
    assert rows[0][:3] == ["respondent_id", "gold", "predicted"] and len(rows[0]) == 12
    ev = json.loads((root / "ev/report.json").read_text())
    # fit reports the mean over folds, eval pools all rows; fold sizes differ by at most one
    assert ev["accuracy"] == pytest.approx(rep["accuracy"], abs=0.01)
    gold_eq_pred = [r[1] == r[2] for r in rows[1:]]
    assert ev["accuracy"] == pytest.approx(sum(gold_eq_pred) / len(gold_eq_pred))


def test_eval_on_perfect_predictions(tmp_path):
    rows = [["respondent_id", "gold", "predicted"]]
    rows += [[f"r{i}", f"P{i % 9 + 1}", f"P{i % 9 + 1}"] for i in range(27)]
    with open(tmp_path / "p.csv", "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    assert main(["eval", "--input", str(tmp_path / "p.csv"), "--output", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o/report.json").read_text())
    assert rep["accuracy"] == rep["macro_precision"] == rep["macro_recall"] == 1.0


def test_inputs_not_mutated(tmp_path):
    assert main(["synth", "--n", "200", "--output", str(tmp_path / "s")]) == 0
    before = _digest(tmp_path / "s")
    ds = str(tmp_path / "s/dataset.jsonl")
    for argv in (["features", "--input", ds], ["grid", "--input", ds],
                 ["propagate", "--input", ds],
                 ["forecast", "--input", ds, "--polls", str(tmp_path / "s/polls.csv")]):
        assert main(argv + ["--output", str(tmp_path / "o"), "--no-plots"]) == 0
    assert _digest(tmp_path / "s") == before


def _error(capsys):
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert set(err) == {"error", "message", "exit_code"}
    return err


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main(["fit", "--output", str(tmp_path)]) == 1
    assert _error(capsys)["exit_code"] == 1
    assert main(["grid", "--input", str(tmp_path / "missing.jsonl"), "--output", str(tmp_path)]) == 1
    _error(capsys)
    assert main(["synth", "--alignment", "2", "--output", str(tmp_path)]) == 1
    assert _error(capsys)["error"] == "ConfigError"
    assert main(["fit", "--input", "x", "--lambda-grid", "a,b", "--output", str(tmp_path)]) == 1
    _error(capsys)
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"respondent_id": "x"}\n')
    assert main(["grid", "--input", str(bad), "--output", str(tmp_path)]) == 1
    _error(capsys)


def test_runtime_failure_exits_2(tmp_path, capsys):
    assert main(["synth", "--n", "200", "--output", str(tmp_path / "s")]) == 0
    assert main(["features", "--input", str(tmp_path / "s/dataset.jsonl"),
                 "--output", str(tmp_path / "f")]) == 0
    labels = tmp_path / "f/labels.csv"
    rows = list(csv.reader(open(labels)))
    with open(labels, "w", newline="") as fh:
        csv.writer(fh).writerows([rows[0]] + [[r[0], "P1"] for r in rows[1:]])
    code = main(["fit", "--input", str(tmp_path / "f"), "--output", str(tmp_path / "o"),
                 "--folds", "3", "--no-plots"])
    assert code == 2
    err = _error(capsys)
    assert err["error"] == "SingleClass" and err["exit_code"] == 2
