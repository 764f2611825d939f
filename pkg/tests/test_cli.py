import csv
import subprocess
import sys

import pytest

from graphsim.cli import cli_dispatch
from graphsim.evaluate import REPORT_FIELDS, read_report


def run(*argv):
    return cli_dispatch([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run("gen", "--count", 20, "--max-nodes", 5, "--labels", 3, "--seed", 1, "--out", root / "corpus.jsonl") == 0
    assert run("label", "--corpus", root / "corpus.jsonl", "--out", root / "labels.jsonl") == 0
    assert run(
        "train", "--corpus", root / "corpus.jsonl", "--labels", root / "labels.jsonl",
        "--iterations", 3, "--batch-size", 8, "--out", root / "model",
    ) == 0
    return root


def data_args(ws):
    return ["--corpus", ws / "corpus.jsonl", "--labels", ws / "labels.jsonl"]


def test_gen_line_count(tmp_path):
    assert run("gen", "--count", 200, "--max-nodes", 8, "--seed", 1, "--out", tmp_path / "c.jsonl") == 0
    assert len((tmp_path / "c.jsonl").read_text().splitlines()) == 200


def test_train_outputs(workspace):
    model = workspace / "model"
    assert {p.name for p in model.iterdir()} == {"params.json", "config.json", "history.csv"}
    rows = list(csv.DictReader(open(model / "history.csv")))
    assert [r["iteration"] for r in rows] == ["3"]


@pytest.mark.parametrize("method", ["hungarian", "jonker_volgenant", "beam", "astar", "truth", "constant", "model"])
def test_eval_methods(workspace, method):
    out = workspace / f"eval_{method}"
    extra = ["--model", workspace / "model"] if method == "model" else []
    assert run("eval", *data_args(workspace), "--method", method, *extra, "--out", out) == 0
    with open(out / "report.csv") as fh:
        assert tuple(next(csv.reader(fh))) == REPORT_FIELDS
    (report,) = read_report(out / "report.csv")
    assert report.method == method and report.mse >= 0
    if method == "truth":
        assert report.mse == 0 and report.tau == 1.0
    assert (out / "rankings.csv").exists()


def test_eval_timing_column(workspace):
    out = workspace / "eval_timed"
    assert run("eval", *data_args(workspace), "--method", "hungarian", "--timing", "--out", out) == 0
    (report,) = read_report(out / "report.csv")
    assert report.mean_time_ms > 0


def test_rank_with_matrices(workspace):
    out = workspace / "rank"
    query = "g00"
    assert run("rank", *data_args(workspace), "--query", query, "--model", workspace / "model",
               "--dump-matrices", "--out", out) == 0
    rows = list(csv.DictReader(open(out / "rankings.csv")))
    assert rows and all(r["query_id"] == query for r in rows)
    dumps = sorted((out / "matrices").iterdir())
    assert len(dumps) == 3 * len(rows)
    first = list(csv.reader(open(dumps[0])))
    assert len(first) == 10 and all(len(r) == 10 for r in first)


def test_bench(workspace):
    out = workspace / "bench"
    assert run("bench", "--corpus", workspace / "corpus.jsonl", "--pairs", 3, "--methods", "astar,hungarian",
               "--out", out) == 0
    rows = list(csv.DictReader(open(out / "timing.csv")))
    assert [r["method"] for r in rows] == ["astar", "hungarian"]


def test_ablate_rows(workspace):
    out = workspace / "ablate"
    assert run("ablate", *data_args(workspace), "--iterations", 2, "--batch-size", 4,
               "--full-model", workspace / "model", "--out", out) == 0
    assert [r.method for r in read_report(out / "report.csv")] == ["L1-pad", "L1-resize", "full"]


def test_exit_codes(workspace, tmp_path, capsys):
    assert run() == 2
    assert run("gen", "--count", "x", "--max-nodes", 3, "--out", tmp_path / "c") == 2
    assert run("eval", *data_args(workspace), "--method", "nope", "--out", tmp_path) == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{broken\n")
    assert run("label", "--corpus", bad, "--out", tmp_path / "l.jsonl") == 3
    assert run("eval", "--corpus", workspace / "corpus.jsonl", "--labels", tmp_path / "none.jsonl",
               "--method", "constant", "--out", tmp_path) == 3
    assert run("label", "--corpus", tmp_path / "missing.jsonl", "--out", tmp_path / "l.jsonl") == 3
    err = capsys.readouterr().err
    assert "ParseError" in err


def test_compute_error_exit_code(workspace, tmp_path):
    # a GSimCNN in pad_only mode cannot embed graphs larger than its canvas
    big = tmp_path / "big.jsonl"
    assert run("gen", "--count", 10, "--max-nodes", 14, "--seed", 3, "--out", big) == 0
    assert run("label", "--corpus", big, "--out", tmp_path / "l.jsonl", "--oracle", "min_upper") == 0
    code = run("train", "--corpus", big, "--labels", tmp_path / "l.jsonl", "--matrix-mode", "pad_only",
               "--iterations", 1, "--batch-size", 64, "--out", tmp_path / "m")
    assert code == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "graphsim", "gen", "--count", "3", "--max-nodes", "3", "--out", str(tmp_path / "c.jsonl")],
        capture_output=True,
    )
    assert proc.returncode == 0
    assert len((tmp_path / "c.jsonl").read_text().splitlines()) == 3
