import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradsys.grid import ScalarField, build_grid, laplacian_apply, sample
from gradsys.poisson import (
    PoissonError,
    convergence_order,
    manufactured_errors,
    solve_poisson,
)

EIGEN_PAIR = (lambda x, y: 2 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y), "sinprod")


def torsion_center_series(terms: int = 400) -> float:
    """Center value of ``-Delta z = 1`` on the unit square by the double sine series."""
    j = np.arange(1, 2 * terms, 2, dtype=float)
    sj = np.where(((j - 1) / 2) % 2 == 0, 1.0, -1.0)  # sin(j pi / 2)
    J, K = np.meshgrid(j, j, indexing="ij")
    S = np.outer(sj, sj)
    return float(np.sum(16.0 * S / (np.pi ** 4 * J * K * (J ** 2 + K ** 2))))


def test_zero_rhs(g2):
    res = solve_poisson(sample(g2, "zero"))
    assert np.all(res.solution.values == 0) and res.iterations == 0


def test_eigenfunction(g2):
    g = build_grid(2, 65)
    z = solve_poisson(sample(g, EIGEN_PAIR[0])).solution
    err = np.max(np.abs(z.values - sample(g, "sinprod").values))
    assert err < g.h ** 2
    assert z.is_dirichlet()


def test_residual_below_tolerance(g2):
    h = sample(g2, "gauss:0.2")
    res = solve_poisson(h, 1e-10)
    r = laplacian_apply(res.solution).values - h.values
    assert np.max(np.abs(r[g2.interior_mask])) <= 1e-10 * np.max(np.abs(h.values)) * 1.01
    assert res.residual_norm <= 1e-10


def test_torsion_series():
    oracle = torsion_center_series()
    assert oracle == pytest.approx(0.0736713, abs=1e-6)
    z = solve_poisson(sample(build_grid(2, 129), "one")).solution
    assert abs(z.values[64, 64] - oracle) < 1e-3


def test_order():
    order = convergence_order(EIGEN_PAIR, [17, 33, 65])
    assert 1.8 <= order <= 2.2


def test_quadratic_is_exact():
    pair = ("one", lambda x: x * (1 - x) / 2)
    errs = manufactured_errors(pair, [9, 17, 33], dim=1)
    assert all(e < 1e-13 for _, e in errs)
    assert math.isnan(convergence_order(pair, [9, 17, 33], dim=1))
    assert math.isnan(convergence_order(("zero", "zero"), [9, 17, 33]))


def test_order_needs_three_grids():
    with pytest.raises(ValueError):
        convergence_order(EIGEN_PAIR, [17, 33])


def test_bad_input(g2):
    with pytest.raises(ValueError):
        solve_poisson(sample(g2, "one"), tol=0)
    with pytest.raises(ValueError):
        solve_poisson(ScalarField(g2, np.full(g2.shape, np.nan)))


def test_cap_is_reported(g2):
    with pytest.raises(PoissonError):
        solve_poisson(sample(build_grid(2, 17), "one"), tol=1e-17)


def test_warm_start(g2):
    h = sample(g2, "gauss:0.2")
    cold = solve_poisson(h)
    warm = solve_poisson(h, x0=cold.solution)
    assert warm.iterations < cold.iterations
    assert np.allclose(warm.solution.values, cold.solution.values, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity(seed, a, b):
    g = build_grid(2, 17)
    r = np.random.default_rng(seed)
    h1, h2 = ScalarField(g, r.standard_normal(g.shape)), ScalarField(g, r.standard_normal(g.shape))
    lhs = solve_poisson(h1 * a + h2 * b, 1e-12).solution.values
    rhs = a * solve_poisson(h1, 1e-12).solution.values + b * solve_poisson(h2, 1e-12).solution.values
    assert np.allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_maximum_and_comparison_principle(seed):
    g = build_grid(2, 17)
    r = np.random.default_rng(seed)
    h1 = ScalarField(g, r.uniform(0, 1, g.shape))
    h2 = h1 + ScalarField(g, r.uniform(0, 1, g.shape))
    z1 = solve_poisson(h1, 1e-12).solution.values
    z2 = solve_poisson(h2, 1e-12).solution.values
    assert z1.min() >= -1e-14
    assert np.all(z1 <= z2 + 1e-14)
