import csv
import io
import math
import os

import pytest

from nldiv import cli
from nldiv.cli import format_value, main, render_csv, write_atomic


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(math.nan) == "" and format_value(math.inf) == "inf"
    assert format_value(-math.inf) == "-inf"
    assert format_value(True) == "true" and format_value(3) == "3"
    assert format_value('a,"b"') == '"a,""b"""'


def test_render_csv_requires_shared_columns():
    text = render_csv([{"a": 1, "b": 2.5}], "abc")
    assert text == "a,b,config_hash\n1,2.5,abc\n"
    with pytest.raises(ValueError):
        render_csv([{"a": 1}, {"b": 2}], "abc")


def test_constants_row(capsys):
    code, out, _ = run_cli(capsys, "constants", "--n", "1", "--s", "0.5")
    assert code == 0
    (row,) = rows_of(out)
    assert float(row["c_ns"]) == pytest.approx(1 / math.pi, rel=1e-15)
    assert row["c_ns"] == "0.31830988618379041"
    assert len(row["config_hash"]) == 12


def test_every_row_carries_the_hash(capsys):
    code, out, _ = run_cli(capsys, "build-m", "--n", "2", "--samples", "3", "--seed", "4")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 3 and len({r["config_hash"] for r in rows}) == 1


def test_recover_a(capsys):
    code, out, _ = run_cli(capsys, "recover-a", "--n", "3", "--samples", "5")
    assert code == 0
    assert all(float(r["round_trip_error"]) <= 1e-6 for r in rows_of(out))


def test_config_error_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("experiment = \"solve\"\ns = 1.0\n")
    code, out, err = run_cli(capsys, "solve", "--config", str(p))
    assert code == 2 and out == "" and "s" in err and "line 2" in err


def test_domination_exit_code(capsys, tmp_path):
    p = tmp_path / "dom.toml"
    p.write_text("[data]\na = 1.0\nf = 0.6\nQ = 0.4\n")
    code, _, err = run_cli(capsys, "solve", "--config", str(p))
    assert code == 2 and "domination" in err


def test_numeric_error_exit_code(capsys, tmp_path):
    p = tmp_path / "short.toml"
    p.write_text("N = 16\n[tolerances]\nmax_doublings = 1\n")
    code, out, err = run_cli(capsys, "solve", "--config", str(p))
    assert code == 3 and out == "" and "ConvergenceError" in err


def test_assertion_failure_exit_code(capsys, tmp_path):
    # finite horizon s -> 0: |B_0.01| is about 4.75% of |B_0.2|, above the 2% assertion
    p = tmp_path / "s0.toml"
    p.write_text("limit = \"s0\"\nrho = 1.0\n")
    code, out, err = run_cli(capsys, "limits", "--config", str(p))
    assert code == 1 and "assertion" in err
    rows = rows_of(out)
    assert [float(r["s"]) for r in rows] == [0.01, 0.05, 0.1, 0.2]


def test_limits_default(capsys):
    code, out, _ = run_cli(capsys, "limits")
    assert code == 0
    rows = rows_of(out)
    assert list(rows[0]) == ["experiment", "s", "ell", "value", "target", "abs_err", "rel_err", "config_hash"]
    s1 = [r for r in rows if r["experiment"] == "form-limit-s1"]
    assert float(s1[-1]["rel_err"]) <= 0.02


def test_solve_writes_atomically(capsys, tmp_path):
    out = tmp_path / "report.csv"
    sol = tmp_path / "solution.csv"
    code, stdout, _ = run_cli(capsys, "solve", "--N", "32", "--out", str(out), "--solution", str(sol))
    assert code == 0 and stdout == ""
    (row,) = rows_of(out.read_text())
    assert row["bounds_ok"] == "true"
    assert float(row["norm_inf"]) <= 0.4 * 1.05 + 1e-6
    nodes = rows_of(sol.read_text())
    assert len(nodes) == 33 and float(nodes[0]["value"]) == 0.0
    assert sorted(os.listdir(tmp_path)) == ["report.csv", "solution.csv"]


def test_no_partial_file_on_failure(capsys, tmp_path):
    target = tmp_path / "keep.csv"
    target.write_text("old\n")
    with pytest.raises(TypeError):
        write_atomic(str(target), 12345)
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["keep.csv"]
    p = tmp_path / "bad.toml"
    p.write_text("s = 2.0\n")
    assert main(["solve", "--config", str(p), "--out", str(tmp_path / "new.csv")]) == 2
    assert not (tmp_path / "new.csv").exists()


def test_sweep_s_small(capsys):
    code, out, _ = run_cli(capsys, "sweep-s", "--N", "32")
    assert code == 0
    d = [float(r["distance_l2"]) for r in rows_of(out)]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_threads_env_validation(capsys, monkeypatch):
    monkeypatch.setenv("NLDIV_THREADS", "two")
    code, _, err = run_cli(capsys, "constants")
    assert code == 2 and "NLDIV_THREADS" in err
    monkeypatch.setenv("NLDIV_THREADS", "1")
    assert run_cli(capsys, "constants")[0] == 0
    assert run_cli(capsys, "constants", "--threads", "0")[0] == 2


def test_deterministic_flag_same_output(capsys):
    a = run_cli(capsys, "build-m", "--n", "2", "--samples", "2", "--deterministic")[1]
    b = run_cli(capsys, "build-m", "--n", "2", "--samples", "2", "--deterministic")[1]
    assert a == b


def test_runners_cover_all_experiments():
    from nldiv.config import EXPERIMENTS
    assert set(cli.RUNNERS) == set(EXPERIMENTS)
