import csv
import io
import subprocess
import sys

import pytest

from recgraph.bench import non_timing_view
from recgraph.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


GEN = ["--m", 100, "--T", 2000, "--p", 0.5, "--u", 7, "--v", 7, "--alpha", 0.8, "--beta", 0.8, "--b", 0.3, "--seed", 1]


def test_generate_writes_file_and_summary(tmp_path, capsys):
    out_a, out_b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    code, out, _ = run(capsys, "generate", *GEN, "--out", out_a)
    assert code == 0 and out_a.exists()
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["T"] == "2000" and int(row["n_users"]) + int(row["n_items"]) == 2200
    assert run(capsys, "generate", *GEN, "--out", out_b)[0] == 0
    assert out_a.read_bytes() == out_b.read_bytes()


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["generate", "--p", "1.5"], "p"),
        (["generate", "--u", "0"], "u"),
        (["generate", "--seed", "abc"], "seed"),
        (["generate", "--bogus", "1"], "bogus"),
        (["recommend", "missing.tsv", "--user", "0"], "missing.tsv"),
        (["bench", "suite", "nope"], "nope"),
        (["bench", "custom", "missing.toml"], "missing.toml"),
        (["frobnicate"], "frobnicate"),
        ([], "required"),
    ],
)
def test_validation_errors_exit_one(tmp_path, capsys, monkeypatch, argv, needle):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert needle in err


def test_random_seed_is_reported(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--T", 10, "--m", 5, "--seed", "random", "--out", tmp_path / "g.tsv")
    assert code == 0 and err.startswith("seed: ")


@pytest.fixture
def slope_file(tmp_path):
    path = tmp_path / "slope.tsv"
    path.write_text("U\t0\t0\t5\nU\t0\t1\t3\nU\t1\t0\t4\nU\t1\t1\t2\nU\t2\t1\t4\n")
    return path


def test_recommend_slope_one_hand_example(capsys, slope_file):
    code, out, _ = run(capsys, "recommend", slope_file, "--algo", "slopeone", "--user", 2, "--top-n", 1)
    assert code == 0
    assert out == "0\t5.0\n"


def test_recommend_threshold_required(capsys, slope_file):
    code, _, err = run(capsys, "recommend", slope_file, "--algo", "userthreshold", "--user", 0)
    assert code == 1 and "threshold" in err


def test_recommend_top_n_zero(capsys, slope_file):
    assert run(capsys, "recommend", slope_file, "--user", 0, "--top-n", 0)[:2] == (0, "")


def test_recommend_unknown_user_warns(capsys, slope_file):
    code, out, err = run(capsys, "recommend", slope_file, "--user", 42)
    assert (code, out) == (0, "")
    assert "42" in err


def test_recommend_bad_graph_file(tmp_path, capsys):
    path = tmp_path / "bad.tsv"
    path.write_text("U\t0\n")
    code, _, err = run(capsys, "recommend", path, "--user", 0)
    assert code == 1 and "line 1" in err


def test_stats_k22(tmp_path, capsys):
    path = tmp_path / "k22.tsv"
    path.write_text("U\t0\t0\t1\nU\t0\t1\t2\nU\t1\t0\t3\nU\t1\t1\t4\n")
    code, out, _ = run(capsys, "stats", path, "--out", tmp_path / "s.csv")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["mean_blcc"]) == 0.5
    assert (tmp_path / "s.csv").read_text() .splitlines()[0].startswith("graph,")


def test_bench_suite_cell_count_and_determinism(tmp_path, capsys):
    args = ["bench", "suite", "clustering", "--scale", 0.01, "--sequential", "--reps", 1,
            "--latency-sample", 5, "--no-figures"]
    assert run(capsys, *args, "--out", tmp_path / "a")[0] == 0
    assert run(capsys, *args, "--out", tmp_path / "b")[0] == 0
    rows_a = non_timing_view(tmp_path / "a" / "records.csv")
    assert len(rows_a) == 11 * 6
    assert rows_a == non_timing_view(tmp_path / "b" / "records.csv")
    assert (tmp_path / "a" / "aggregate_clustering.csv").exists()
    assert (tmp_path / "a" / "failures.log").read_text() == ""


def test_bench_custom(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text(
        '[scenario]\nname = "mini"\nrepetitions = 1\nlatency_sample_size = 3\nupdate_batch_size = 3\n'
        "[[graphs]]\nm = 5\nT = 30\nholdout_steps = 3\n"
        '[[recommenders]]\nalgo = "svd"\niterations = 3\n'
    )
    code, out, _ = run(capsys, "bench", "custom", path, "--out", tmp_path / "o")
    assert code == 0 and "1 records" in out
    assert (tmp_path / "o" / "mini_latency_ms_mean.png").exists()


def test_bench_custom_bad_key(tmp_path, capsys):
    path = tmp_path / "s.toml"
    path.write_text('[[graphs]]\nm = 5\n[[recommenders]]\nalgorithm = "svd"\n')
    code, _, err = run(capsys, "bench", "custom", path, "--out", tmp_path / "o")
    assert code == 1 and "algorithm" in err


def test_runtime_failure_exits_two(tmp_path, capsys):
    target = tmp_path / "missing-dir" / "g.tsv"
    code, _, err = run(capsys, "generate", "--T", 5, "--m", 2, "--out", target)
    assert code == 2 and "failed" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "recgraph", "generate", "--p", "2"], capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run([sys.executable, "-m", "recgraph", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "bench" in proc.stdout


def test_help_lists_defaults(capsys):
    assert main(["recommend", "--help"]) == 0
    out = " ".join(capsys.readouterr().out.split())
    for text in ("default: 200", "default: 10", "default: pearson"):
        assert text in out
