"""Dirichlet Poisson solves ``-Delta z = h``, ``z = 0`` on the boundary.

The interior system of the ``2*dim + 1`` point stencil is symmetric
positive definite and is solved matrix-free by Jacobi-preconditioned
conjugate gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import (
    GridSpec,
    ScalarField,
    _neg_laplacian_interior,
    build_grid,
    gradient,
    lp_norm,
    sample,
)

__all__ = [
    "PoissonError",
    "PoissonSolveResult",
    "solve_poisson",
    "manufactured_errors",
    "convergence_order",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10


class PoissonError(RuntimeError):
    """The linear solver hit its iteration cap."""


@dataclass
class PoissonSolveResult:
    solution: ScalarField
    residual_norm: float
    iterations: int
    grad_constant: float
    """Observed ``|| |grad z| ||_1 / ||h||_1`` (0 for ``h = 0``)."""


def _iteration_cap(n_unknowns: int, tol: float) -> int:
    return max(50, int(math.ceil(10.0 * math.sqrt(n_unknowns) * math.log(1.0 / tol))))


def solve_poisson(
    h: ScalarField,
    tol: float = DEFAULT_TOL,
    x0: ScalarField | None = None,
) -> PoissonSolveResult:
    """Solve the discrete Dirichlet problem for right-hand side ``h``.

    Parameters
    ----------
    h : ScalarField
        Right-hand side; boundary values are ignored.
    tol : float
        Relative target for the max-norm of the stencil residual (Notes).
    x0 : ScalarField, optional
        Starting guess (warm start).  Boundary values are ignored.

    Notes
    -----
    The stopping test is ``||-Delta_h z - h||_inf <= tol * ||h||_inf``
    on interior nodes, which coincides with an absolute test for data of
    unit size and stays attainable when the data are very large or very
    small.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not h.is_finite():
        raise ValueError("right-hand side has non-finite values")
    grid = h.grid
    core = (slice(1, -1),) * grid.dim
    rhs = np.array(h.values[core], dtype=float)
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    z = np.zeros(grid.shape)
    if scale == 0.0:
        return PoissonSolveResult(ScalarField(grid, z), 0.0, 0, 0.0)

    diag = sum(2.0 / (s * s) for s in grid.spacing)
    cap = _iteration_cap(rhs.size, tol)

    def apply(x_core):
        z[core] = x_core
        return _neg_laplacian_interior(z, grid.spacing)[core]

    # solve for rhs / scale so inner products cannot overflow
    rhs = rhs / scale
    target = tol
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = np.array(x0.values[core], dtype=float) / scale
        r = rhs - apply(x)
    it = 0
    while True:
        # restart loop: the recursive residual drifts from the true one
        zr = r / diag
        d = zr.copy()
        rz = float(np.vdot(r, zr))
        while np.max(np.abs(r)) > target and it < cap:
            Ad = apply(d)
            step = rz / float(np.vdot(d, Ad))
            x += step * d
            r -= step * Ad
            zr = r / diag
            rz_new = float(np.vdot(r, zr))
            d = zr + (rz_new / rz) * d
            rz = rz_new
            it += 1
        r = rhs - apply(x)
        res = float(np.max(np.abs(r)))
        if res <= target:
            break
        if it >= cap:
            raise PoissonError(
                f"CG reached its cap of {cap} iterations with relative residual"
                f" {res:.3e} > {target:.3e}"
            )

    z = np.zeros(grid.shape)
    with np.errstate(over="ignore"):
        z[core] = scale * x
    res *= scale
    sol = ScalarField(grid, z)
    h1 = lp_norm(abs(h), 1)
    cgrid = lp_norm(gradient(sol).magnitude(), 1) / h1 if h1 > 0 else 0.0
    return PoissonSolveResult(sol, res, it, cgrid)


def _as_grid(g, dim: int) -> GridSpec:
    return g if isinstance(g, GridSpec) else build_grid(dim, int(g))


def manufactured_errors(pair, grids: Sequence, dim: int = 2, tol: float = 1e-12) -> list:
    """Max-norm errors of the discrete solve against a manufactured solution.

    ``pair`` is ``(source, exact)``: two catalog descriptors or callables.
    Returns a list of ``(h, error)`` tuples in the order of ``grids``.
    """
    source, exact = pair
    out = []
    for g in grids:
        grid = _as_grid(g, dim)
        z = solve_poisson(sample(grid, source), tol).solution
        err = float(np.max(np.abs(z.values - sample(grid, exact).values)))
        out.append((grid.h, err))
    return out


def convergence_order(pair, grids: Sequence, dim: int = 2, tol: float = 1e-12) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``.

    Returns ``nan`` when every error is at round-off level (the
    discretization is exact for the pair).
    """
    if len(grids) < 3:
        raise ValueError("need at least three grids")
    data = manufactured_errors(pair, grids, dim, tol)
    hs = np.array([d[0] for d in data])
    errs = np.array([d[1] for d in data])
    if np.all(errs <= 1e-13):
        return float("nan")
    slope, _ = np.polyfit(np.log(hs), np.log(errs), 1)
    return float(slope)
