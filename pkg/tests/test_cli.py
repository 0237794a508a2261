import subprocess
import sys
import textwrap

import pytest

from gradsys.cli import main


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


BASE = """\
    [grid]
    dim = 2
    n = 17
    [problem]
    kind = fixed_point
    p = 2
    q = 2
    m = 2
    sigma = 2
    f = one
    g = one
    c_tilde = 0.25
"""


def test_zero_data_run(tmp_path):
    cfg = write(tmp_path, "a.ini", BASE + "    lambda = 0\n    alpha = 0\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out)]) == 0
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == "iter,grad_v_r,grad_u_p,rel_change_w11,res1,res2,in_E"
    assert len(lines) == 2


def test_diverged_exit_code(tmp_path):
    cfg = write(tmp_path, "a.ini", BASE + "    lambda = 1e6\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 2


def test_malformed_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.ini", "[a]\nkind = fixed_point\nthis line is junk\n")
    assert main(["run", cfg]) == 1
    assert "bad.ini:3" in capsys.readouterr().err


def test_bad_number_points_at_line(tmp_path, capsys):
    cfg = write(tmp_path, "bad.ini", BASE + "    lambda = lots\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "bad.ini:13" in capsys.readouterr().err


def test_unknown_kind(tmp_path, capsys):
    cfg = write(tmp_path, "k.ini", "[a]\nkind = nope\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "unknown experiment kind" in capsys.readouterr().err


def test_inadmissible_exponents_are_explained(tmp_path, capsys):
    cfg = write(tmp_path, "e.ini", "[a]\nkind = fixed_point\nn = 9\np = 4\nq = 1\nm = 2\nsigma = 1.5\nN = 3\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "(2.2) failed: pm = 8 >= sigma* = 3" in capsys.readouterr().err


def test_one_point_sweep_equals_run(tmp_path):
    cfg = write(tmp_path, "s.ini", BASE + "    lambda = 0.01\n    alpha = 0.01\n")
    assert main(["run", cfg, "--out", str(tmp_path / "r")]) == 0
    assert main(["sweep", cfg, "--out", str(tmp_path / "s")]) == 0
    summary = dict(l.split(",") for l in (tmp_path / "r" / "summary.csv").read_text().splitlines()[1:])
    row = (tmp_path / "s" / "sweep.csv").read_text().splitlines()[1].split(",")
    assert row[3] == summary["verdict"] and row[4] == summary["iterations"]
    assert (tmp_path / "s" / "bounds.csv").exists()


def test_empty_grid(tmp_path):
    cfg = write(tmp_path, "s.ini", BASE + "    lambdas = \n")
    assert main(["sweep", cfg, "--out", str(tmp_path / "o")]) == 1


def test_bisection_bracket(tmp_path):
    cfg = write(tmp_path, "b.ini", BASE + "    bisect = lambda\n    lambda_lo = 1\n    lambda_hi = 1e4\n"
                "    rel_width = 1e-2\n")
    assert main(["sweep", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = [l.split(",") for l in (tmp_path / "o" / "sweep.csv").read_text().splitlines()[1:]]
    conv = [float(r[1]) for r in rows if r[3] == "Converged"]
    bad = [float(r[1]) for r in rows if r[3] != "Converged"]
    lo, hi = max(conv), min(bad)
    assert lo < hi and hi - lo <= 1e-2 * lo


def test_sweep_is_deterministic_with_workers(tmp_path):
    cfg = write(tmp_path, "g.ini", BASE + "    lambdas = 0.01, 1, 1e6\n    alphas = 0, 0.1\n    workers = 2\n")
    assert main(["sweep", cfg, "--out", str(tmp_path / "a")]) == 0
    cfg1 = write(tmp_path, "g1.ini", BASE + "    lambdas = 0.01, 1, 1e6\n    alphas = 0, 0.1\n")
    assert main(["sweep", cfg1, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert len(a.splitlines()) == 7


@pytest.mark.parametrize("kind, produced", [("thresholds", "thresholds.csv"), ("witness", "witness.csv"),
                                            ("bilaplacian", "summary.csv")])
def test_other_kinds(tmp_path, kind, produced):
    cfg = write(tmp_path, "k.ini", f"[a]\nkind = {kind}\nn = 17\nlambda = 1e-4\nc_tilde = 0.5\n")
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / produced).exists()


def test_run_is_byte_identical(tmp_path):
    cfg = write(tmp_path, "d.ini", "[a]\nkind = fixed_point\nn = 17\nlambda = 0.01\nalpha = 0.01\nseed = 4\n")
    assert main(["run", cfg, "--out", str(tmp_path / "x")]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "y")]) == 0
    for name in ("trace.csv", "summary.csv"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "a.ini", BASE + "    lambda = 1e6\n")
    proc = subprocess.run([sys.executable, "-m", "gradsys", "--verbose", "run", cfg, "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "Diverged" in proc.stderr
