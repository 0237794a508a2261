import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import upsilon_argmax, upsilon_root
from gradsys.exponents import Exponents
from gradsys.grid import ScalarField, build_grid, lp_norm, sample
from gradsys.poisson import solve_poisson
from gradsys.schauder import (
    TRACE_COLUMNS,
    ProblemData,
    Verdict,
    _diverging,
    IterationRecord,
    calibrate_c_tilde,
    iterate_to_fixed_point,
    map_T,
    pi_membership,
    pi_report,
    thresholds_from,
    upsilon,
    weak_residual,
)


def data(n=33, lam=0.0, alpha=0.0, p=2.0, q=2.0, f="one", g="one"):
    grid = build_grid(2, n)
    return ProblemData(sample(grid, f), sample(grid, g), lam, alpha, Exponents(p, q, 2, 2, 2))


def test_upsilon():
    assert upsilon(0, 2, 1) == 0
    assert upsilon(1, 2, 1) == 0
    assert upsilon(0.25, 2, 1) == 0.25
    with pytest.raises(ValueError):
        upsilon(1, 1, 1)


@pytest.mark.parametrize("pq, c, ell, lam, s0", [(2, 1, 0.25, 0.25, 1), (2, 2, 1 / 16, 1 / 8, 0.25)])
def test_threshold_examples(pq, c, ell, lam, s0):
    t = thresholds_from(pq, c)
    assert (t.ell, t.lambda_star, t.s_zero) == pytest.approx((ell, lam, s0), rel=1e-14)
    arg, top = upsilon_argmax(pq, c)
    assert arg == pytest.approx(ell, rel=1e-8)
    assert top == pytest.approx(lam, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.01, 5), st.floats(0.1, 10))
def test_threshold_closed_forms(pq, c):
    t = thresholds_from(pq, c)
    assert 0 < t.ell < t.s_zero
    assert t.lambda_star > 0
    assert c * (t.ell + t.lambda_star / c) == pytest.approx(t.ell ** (1 / pq), rel=1e-12)
    assert upsilon_root(pq, c) == pytest.approx(t.s_zero, rel=1e-8)


def test_threshold_rejects_bad_input():
    with pytest.raises(ValueError):
        thresholds_from(1.0, 1.0)
    with pytest.raises(ValueError):
        thresholds_from(2.0, 0.0)


def test_problem_validation():
    grid = build_grid(2, 9)
    with pytest.raises(ValueError):
        ProblemData(sample(grid, "one") * -1.0, sample(grid, "one"), 1, 1, Exponents(2, 2, 2, 2, 2))
    with pytest.raises(ValueError):
        data(9, lam=-1)


def test_pi_membership():
    d = data(17)
    t = thresholds_from(4, 0.5)
    assert pi_membership(d, t)
    fm = lp_norm(d.f, 2)
    d.lam = t.pi_bound / fm
    rep = pi_report(d, t)
    assert rep["proof_lhs"] == pytest.approx(rep["proof_rhs"], rel=1e-14)
    d.lam = 2 * t.pi_bound / fm
    assert not pi_membership(d, t)


def test_map_examples():
    d = data(33, lam=0.0)
    zero = sample(d.grid, "zero")
    out = map_T(zero, d)
    assert np.all(out.u.values == 0) and np.all(out.v.values == 0)
    d = data(33, lam=3.0)
    out = map_T(zero, d)
    assert np.all(out.u.values == 0)
    assert np.allclose(out.v.values, 3.0 * solve_poisson(d.f).solution.values, atol=1e-12)


def test_map_eigenfunction():
    grid = build_grid(2, 65)
    d = ProblemData(sample(grid, "one"), sample(grid, "one"), 0.0, 0.0, Exponents(2, 1, 2, 2, 2))
    w = sample(grid, "sinprod")
    out = map_T(w, d)
    assert np.max(np.abs(out.u.values - w.values / (2 * np.pi ** 2))) < 0.05 * grid.h ** 2


def test_weak_residual_examples():
    d = data(33)
    zero = sample(d.grid, "zero")
    assert weak_residual(zero, zero, d) == (0.0, 0.0)
    res = []
    for n in (33, 65):
        grid = build_grid(2, n)
        dd = ProblemData(sample(grid, "one"), sample(grid, "one"), 0.0, 0.0, Exponents(2, 1, 2, 2, 2))
        s = sample(grid, "sinprod")
        res.append(weak_residual(s * (1 / (2 * np.pi ** 2)), s, dd)[0])
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)


def test_zero_data_converges_at_once():
    d = data(17)
    res = iterate_to_fixed_point(d, thresholds_from(4, 1.0))
    assert res.report.verdict is Verdict.CONVERGED
    assert res.report.iterations == 1
    assert np.all(res.u.values == 0) and np.all(res.v.values == 0)


def test_inadmissible_is_refused():
    grid = build_grid(2, 9)
    d = ProblemData(sample(grid, "one"), sample(grid, "one"), 0, 0, Exponents(4, 1, 2, 1.5, 3))
    with pytest.raises(ValueError, match="pm = 8"):
        iterate_to_fixed_point(d, thresholds_from(4, 1))


def test_initial_iterate_must_be_dirichlet():
    d = data(9)
    with pytest.raises(ValueError):
        iterate_to_fixed_point(d, thresholds_from(4, 1), w0=sample(d.grid, "one"))


@pytest.fixture(scope="module")
def small_run():
    d = data(33, lam=1e-2, alpha=1e-2)
    t = thresholds_from(4, 0.25)
    return d, t, iterate_to_fixed_point(d, t)


def test_small_data_converges(small_run):
    d, t, res = small_run
    assert res.report.verdict is Verdict.CONVERGED
    assert res.u.values.min() >= 0 and res.v.values.min() >= 0
    assert max(weak_residual(res.u, res.v, d)) < 1e-6


def test_monotone_start(small_run):
    d, _, _ = small_run
    zero = sample(d.grid, "zero")
    v1 = map_T(zero, d).v
    v2 = map_T(v1, d).v
    assert np.all(v1.values <= v2.values + 1e-15)


def test_iterates_stay_nonnegative(small_run):
    d, _, _ = small_run
    w = sample(d.grid, "zero")
    for _ in range(4):
        out = map_T(w, d)
        assert out.u.values.min() >= 0 and out.v.values.min() >= 0
        w = out.v


def test_scaling_invariance():
    d1 = data(17, lam=0.3, alpha=0.1)
    grid = d1.grid
    d2 = ProblemData(d1.f * 7.0, d1.g, 0.3 / 7.0, 0.1, Exponents(2, 2, 2, 2, 2))
    t = thresholds_from(4, 0.3)
    a = iterate_to_fixed_point(d1, t).report.grad_v_r()
    b = iterate_to_fixed_point(d2, t).report.grad_v_r()
    assert len(a) == len(b)
    assert np.allclose(a, b, rtol=1e-9)
    assert grid == d2.grid


def test_divergence_and_trace_csv():
    d = data(33, lam=1e6)
    res = iterate_to_fixed_point(d, thresholds_from(4, 0.25))
    rep = res.report
    assert rep.verdict is Verdict.DIVERGED
    tail = rep.grad_v_r()[-5:]
    assert np.all(np.diff(tail) > 0)
    text = rep.to_csv()
    assert text.splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert len(text.splitlines()) == rep.iterations + 1
    buf = io.StringIO()
    rep.write_csv(buf)
    assert buf.getvalue() == text


def test_divergence_rule_needs_steady_growth():
    def rec(k, g, rel):
        return IterationRecord(k, g, 0.0, rel, 0.0, 0.0, False)

    growing = [rec(k, 10.0 ** k, 1.0 + k) for k in range(1, 6)]
    assert _diverging(growing, 1.0, 5)
    slowing = [rec(k, 10.0 + k, 1.0 / k) for k in range(1, 6)]
    assert not _diverging(slowing, 1.0, 5)
    assert not _diverging(growing[:4], 1.0, 5)


def test_max_iter_verdict():
    d = data(17, lam=1e-2, alpha=1e-2)
    d.max_iter = 1
    d.tol = 1e-14
    assert iterate_to_fixed_point(d, thresholds_from(4, 0.25)).report.verdict is Verdict.MAX_ITER


def test_calibration_is_deterministic():
    d = data(17, lam=1e-4, alpha=1e-4)
    a = calibrate_c_tilde(d, n_probe=5, seed=3)
    b = calibrate_c_tilde(d, n_probe=5, seed=3)
    assert a == b and a > 0
