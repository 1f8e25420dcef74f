import csv
import io
import json

import numpy as np
import pytest

from sketchfactor.cli import main
from sketchfactor.harness import gen_planted
from sketchfactor.numerics import write_design_matrix
from sketchfactor.stream import matrix_to_updates, read_rows, write_rows, write_turnstile


@pytest.fixture
def kmeans_matrix():
    A, _ = gen_planted("kmeans", 8, 6, 2, sigma=0.5, seed=0)
    return np.asarray(A)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_kmeans_json(tmp_path, capsys, kmeans_matrix):
    path = tmp_path / "a.txt"
    write_design_matrix(kmeans_matrix, path)
    code, out, _ = run(capsys, "solve-kmeans", str(path), "--k", "2")
    assert code == 0
    doc = json.loads(out)
    X, D = np.array(doc["X"]), np.array(doc["D"])
    assert X.shape == (8, 2) and D.shape == (2, 6)
    assert doc["cost"] == pytest.approx(float(np.sum((X @ D - kmeans_matrix) ** 2)))


def test_solve_sdl_csv(tmp_path, capsys):
    A, _ = gen_planted("sdl", 6, 5, 3, r=1, seed=1)
    path = tmp_path / "a.txt"
    write_design_matrix(A, path)
    code, out, _ = run(capsys, "solve-sdl", str(path), "--k", "3", "--r", "1", "--out", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["matrix", "row", "col", "value"]
    assert rows[1][0] == "cost" and float(rows[1][3]) <= 1e-6
    assert sum(r[0] == "X" for r in rows) == 18 and sum(r[0] == "D" for r in rows) == 15


def test_stream_kmeans_turnstile(tmp_path, capsys, kmeans_matrix):
    path = tmp_path / "u.txt"
    write_turnstile(path, 8, 6, matrix_to_updates(kmeans_matrix, split=2))
    code, out, _ = run(capsys, "stream-kmeans", "--stream", str(path), "--k", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["peak_words"] >= doc["resident_words"] == 16 * 6 + 8 * 89 + 267


def test_stream_kmeans_rows_and_random_order(tmp_path, capsys, kmeans_matrix):
    path = tmp_path / "r.txt"
    write_rows(path, kmeans_matrix)
    assert run(capsys, "stream-kmeans", "--stream", str(path), "--mode", "rows", "--k", "2")[0] == 0
    code, out, _ = run(capsys, "stream-kmeans", "--stream", str(path), "--mode", "random-order", "--k", "2", "--seed", "4")
    assert code == 0 and json.loads(out)["shuffle_seed"] == 4


def test_stream_mode_mismatch(tmp_path, capsys, kmeans_matrix):
    path = tmp_path / "r.txt"
    write_rows(path, kmeans_matrix)
    with pytest.raises(SystemExit):
        main(["stream-kmeans", "--stream", str(path), "--mode", "turnstile", "--k", "2"])


def test_stream_sdl(tmp_path, capsys):
    A, _ = gen_planted("discrete-sdl", 4, 10, 2, r=1, seed=2)
    path = tmp_path / "r.txt"
    write_rows(path, A)
    code, out, _ = run(capsys, "stream-sdl", "--stream", str(path), "--mode", "rows", "--k", "2", "--r", "1")
    assert code == 0
    X, D = np.array(json.loads(out)["X"]), np.array(json.loads(out)["D"])
    assert np.sum((X @ D - np.asarray(A)) ** 2) <= 1e-6


def test_random_order_logs_seed(tmp_path, capsys, kmeans_matrix):
    path = tmp_path / "r.txt"
    write_rows(path, kmeans_matrix)
    code, out, err = run(capsys, "random-order", "--stream", str(path), "--k", "2", "--alpha", "0.5",
                         "--shuffle-seed", "9")
    assert code == 0 and "shuffle seed 9" in err
    assert json.loads(out)["shuffle_seed"] == 9


def test_gen_hard(tmp_path, capsys):
    path = tmp_path / "h.txt"
    assert run(capsys, "gen-hard", "--n", "50", "--d", "6", "--t", "3", "--alpha", "0.2", "--out", str(path))[0] == 0
    n, d, rows = read_rows(path)
    A = np.array([r for _, r in rows])
    assert (n, d) == (50, 6) and set(np.unique(A)) <= {0.0, 1.0, 3.0}
    code, _, err = run(capsys, "gen-hard", "--n", "50", "--d", "6", "--t", "3", "--alpha", "0.2",
                       "--gamma-auto", "--max-rows", "100", "--out", str(path))
    assert code == 2 and "limit" in err


def test_run_config(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("problem = kmeans\nmode = offline\nn = 6\nd = 4\nk = 2\nseeds = 0-2\n")
    code, out, _ = run(capsys, "run", "--config", str(cfg))
    assert code == 0 and json.loads(out)["summary"]["seeds"] == 3
    code, out, _ = run(capsys, "run", "--config", str(cfg), "--seed", "5", "--format", "csv")
    assert code == 0 and out.splitlines()[1].startswith("5,ok")
    report = tmp_path / "rep.json"
    assert run(capsys, "run", "--config", str(cfg), "--out", str(report))[0] == 0
    assert json.loads(report.read_text())["summary"]["completed"] == 3


def test_errors_exit_with_code_two(tmp_path, capsys):
    path = tmp_path / "a.txt"
    write_design_matrix(np.zeros((30, 2)), path)
    code, _, err = run(capsys, "solve-kmeans", str(path), "--k", "3", "--eps", "2")
    assert code == 2 and err.startswith("error:")
    code, _, _ = run(capsys, "solve-kmeans", str(tmp_path / "missing.txt"), "--k", "2")
    assert code == 2
