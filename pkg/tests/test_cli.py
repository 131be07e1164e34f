import io

import numpy as np
import pytest

from cpaltls.cli import main, parse_seeds
from cpaltls.io import read_model, read_trace_csv, write_tensor
from cpaltls.model import KruskalModel


def call(argv):
    out = io.StringIO()
    return main(argv, out), out.getvalue()


def test_parse_seeds():
    assert parse_seeds("0-3") == (0, 1, 2, 3)
    assert parse_seeds("1,4,7-8") == (1, 4, 7, 8)


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["experiment"], ["experiment", "--preset", "odeco9"],
    ["experiment", "--preset", "odeco3", "--seeds", "3-1"],
    ["lemma-suite", "--instances", "0"],
])
def test_usage_errors(argv, capsys):
    code, _ = call(argv)
    assert code == 1


def test_experiment_writes_files(tmp_path):
    code, text = call(["experiment", "--preset", "odeco3", "--seeds", "0-1",
                       "--output", str(tmp_path), "--no-timestamp"])
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["odeco3-seed0.csv", "odeco3-seed1.csv"]
    assert "iterations" in text


def test_experiment_rerun_identical(tmp_path):
    argv = ["experiment", "--preset", "counterexample-n2", "--seeds", "4", "--rank", "3",
            "--no-timestamp", "--output"]
    call(argv + [str(tmp_path / "a")])
    call(argv + [str(tmp_path / "b")])
    name = "counterexample-n2-seed4.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_experiment_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _ = call(["experiment", "--preset", "odeco3", "--output", str(blocker / "sub")])
    assert code == 1


@pytest.fixture
def rank2_file(tmp_path):
    rng = np.random.default_rng(5)
    factors = tuple(np.linalg.qr(rng.standard_normal((i, 2)))[0] for i in (4, 5, 6))
    model = KruskalModel(np.array([2.0, 1.0]), factors)
    path = tmp_path / "rank2.txt"
    write_tensor(path, model.full())
    return path


@pytest.mark.parametrize("variant", ["serial", "parallel"])
def test_decompose_roundtrip(rank2_file, tmp_path, variant):
    out = tmp_path / "out"
    code, _ = call(["decompose", "--input", str(rank2_file), "--rank", "2",
                    "--variant", variant, "--output", str(out)])
    assert code == 0
    model = read_model(out / "rank2-model.txt")
    assert model.rank == 2 and model.shape == (4, 5, 6)
    trace = read_trace_csv(out / "rank2-trace.csv")
    assert trace.relative_errors[-1] < 1e-8


def test_decompose_rank_one(tmp_path):
    rng = np.random.default_rng(9)
    x = np.einsum("i,j,k->ijk", *(rng.standard_normal(n) for n in (3, 4, 5)))
    path = tmp_path / "r1.bin"
    write_tensor(path, x, binary=True)
    code, _ = call(["decompose", "--input", str(path), "--rank", "1", "--output", str(tmp_path)])
    assert code == 0
    trace = read_trace_csv(tmp_path / "r1-trace.csv")
    assert len(trace) - 1 <= 5 and trace.relative_errors[-1] < 1e-10


def test_decompose_hybrid(rank2_file, tmp_path):
    code, _ = call(["decompose", "--input", str(rank2_file), "--rank", "2", "--omega", "0.5",
                    "--reduced-iters", "3", "--regular-iters", "10", "--output", str(tmp_path)])
    assert code == 0
    assert read_trace_csv(tmp_path / "rank2-trace.csv").phase_boundaries == [3]


def test_decompose_malformed(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("3\n2 2 2\n1 2 3 oops\n")
    code, _ = call(["decompose", "--input", str(path)])
    assert code == 2
    assert "line 3, column 7" in capsys.readouterr().err


def test_decompose_rank_warning(rank2_file, tmp_path, capsys):
    code, _ = call(["decompose", "--input", str(rank2_file), "--rank", "5",
                    "--output", str(tmp_path)])
    assert code == 0
    assert "exceeds the smallest extent" in capsys.readouterr().err


def test_decompose_degenerate(tmp_path, capsys):
    path = tmp_path / "zero.txt"
    write_tensor(path, np.zeros((2, 2, 2)))
    code, _ = call(["decompose", "--input", str(path), "--rank", "1"])
    assert code == 3


def test_decompose_missing_file(tmp_path):
    code, _ = call(["decompose", "--input", str(tmp_path / "nope.txt")])
    assert code == 1


def test_lemma_suite_small(tmp_path):
    path = tmp_path / "lemmas.csv"
    code, _ = call(["lemma-suite", "--instances", "1", "--seeds", "11", "--output", str(path)])
    assert code == 0
    first = path.read_text()
    assert len(first.strip().splitlines()) == 9
    call(["lemma-suite", "--instances", "1", "--seeds", "11", "--output", str(path)])
    assert path.read_text() == first


def test_lemma_suite_stdout():
    code, text = call(["lemma-suite", "--instances", "2", "--output", "-"])
    assert code == 0 and len(text.strip().splitlines()) == 17


def test_lemma_suite_unwritable(tmp_path):
    code, _ = call(["lemma-suite", "--instances", "1", "--output", str(tmp_path / "no" / "x.csv")])
    assert code == 1


def test_lemma_suite_violation_exit(monkeypatch, tmp_path):
    from cpaltls import cli
    from cpaltls.lemmas import LemmaReport

    monkeypatch.setattr(cli, "run_lemma_suite",
                        lambda n, seed: [LemmaReport("A1-innerprod-i", True, 2.0, 1.0, seed=0)])
    code, _ = call(["lemma-suite", "--output", str(tmp_path / "x.csv")])
    assert code == 4
