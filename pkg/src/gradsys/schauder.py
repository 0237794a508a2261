"""Fixed-point engine for the coupled system

    -Delta u = v^q + alpha g,   -Delta v = |grad u|^p + lambda f,

with homogeneous Dirichlet data.  The map ``w -> v`` solves first
``-Delta u = w_+^q + alpha g`` and then ``-Delta v = |grad u|^p + lambda f``;
:func:`iterate_to_fixed_point` applies it from ``w = 0`` and watches the
``L^r`` size of ``grad v`` against the radius ``ell^{1/pq}`` of the
invariant ball.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exponents import Exponents, check_admissibility, choose_r
from .grid import (
    ScalarField,
    dirichlet_inner,
    gradient,
    integrate,
    lp_norm,
    sine_modes,
    w11_norm,
)
from .poisson import DEFAULT_TOL, solve_poisson

__all__ = [
    "ThresholdConstants",
    "ProblemData",
    "Verdict",
    "IterationRecord",
    "IterationReport",
    "FixedPointResult",
    "NonFiniteIterate",
    "TRACE_COLUMNS",
    "upsilon",
    "thresholds_from",
    "pi_membership",
    "pi_report",
    "map_T",
    "weak_residual",
    "calibrate_c_tilde",
    "iterate_to_fixed_point",
]

TRACE_COLUMNS = ("iter", "grad_v_r", "grad_u_p", "rel_change_w11", "res1", "res2", "in_E")


class NonFiniteIterate(ArithmeticError):
    """An iterate overflowed."""


def upsilon(s: float, pq: float, c_tilde: float) -> float:
    """``s^{1/pq} - c_tilde * s``."""
    if s < 0 or not pq > 1 or not c_tilde > 0:
        raise ValueError("need s >= 0, pq > 1 and c_tilde > 0")
    return s ** (1.0 / pq) - c_tilde * s


@dataclass(frozen=True)
class ThresholdConstants:
    """Maximizer ``ell`` and maximum ``lambda_star`` of ``upsilon``, and its positive root."""

    pq: float
    c_tilde: float
    ell: float
    lambda_star: float
    s_zero: float

    @property
    def radius(self) -> float:
        """``ell^{1/pq}``, the bound on ``||grad w||_r`` defining the invariant set."""
        return self.ell ** (1.0 / self.pq)

    @property
    def pi_bound(self) -> float:
        """``lambda_star / c_tilde``."""
        return self.lambda_star / self.c_tilde


def thresholds_from(pq: float, c_tilde: float) -> ThresholdConstants:
    """Closed forms for the maximum of ``upsilon(., pq, c_tilde)``.

    ``ell = (pq c)^{-pq/(pq-1)}``, ``lambda_star = ell^{1/pq} - c ell`` and
    ``s_zero = c^{-pq/(pq-1)}``.
    """
    if not pq > 1:
        raise ValueError(f"need pq > 1, got {pq}")
    if not c_tilde > 0:
        raise ValueError(f"need c_tilde > 0, got {c_tilde}")
    e = pq / (pq - 1.0)
    ell = (pq * c_tilde) ** (-e)
    lam = ell ** (1.0 / pq) - c_tilde * ell
    s0 = c_tilde ** (-e)
    return ThresholdConstants(pq, c_tilde, ell, lam, s0)


@dataclass
class ProblemData:
    """One instance of the system plus solver settings.

    ``f`` and ``g`` must be nonnegative at every node.
    """

    f: ScalarField
    g: ScalarField
    lam: float
    alpha: float
    exponents: Exponents
    tol: float = 1e-8
    max_iter: int = 200
    poisson_tol: float = DEFAULT_TOL
    divergence_factor: float = 10.0
    patience: int = 5

    def __post_init__(self):
        if self.lam < 0 or self.alpha < 0:
            raise ValueError("lambda and alpha must be nonnegative")
        if np.any(self.f.values < 0) or np.any(self.g.values < 0):
            raise ValueError("f and g must be nonnegative")
        if self.f.grid != self.g.grid:
            raise ValueError("f and g live on different grids")

    @property
    def grid(self):
        return self.f.grid

    @property
    def r(self) -> float:
        if self.exponents.r_iter is None:
            choose_r(self.exponents)
        return self.exponents.r_iter

    def data_size(self) -> float:
        """``lambda ||f||_m + alpha^p ||g||_sigma^p``."""
        e = self.exponents
        return (
            self.lam * lp_norm(self.f, e.m)
            + self.alpha ** e.p * lp_norm(self.g, e.sigma) ** e.p
        )


def pi_report(d: ProblemData, t: ThresholdConstants) -> dict:
    """Both forms of the smallness region.

    ``proof`` is ``lambda ||f||_m + alpha^p ||g||_sigma^p <= lambda_star / c``;
    ``stated`` is ``lambda ||f||_m + alpha^p ||g||_sigma <= lambda_star``.
    """
    e = d.exponents
    fm = lp_norm(d.f, e.m)
    gs = lp_norm(d.g, e.sigma)
    proof_lhs = d.lam * fm + d.alpha ** e.p * gs ** e.p
    stated_lhs = d.lam * fm + d.alpha ** e.p * gs
    return {
        "proof_lhs": proof_lhs,
        "proof_rhs": t.pi_bound,
        "proof": proof_lhs <= t.pi_bound,
        "stated_lhs": stated_lhs,
        "stated_rhs": t.lambda_star,
        "stated": stated_lhs <= t.lambda_star,
    }


def pi_membership(d: ProblemData, t: ThresholdConstants) -> bool:
    """Whether ``(lambda, alpha)`` lies in the smallness region (proof form)."""
    return bool(pi_report(d, t)["proof"])


@dataclass
class MapResult:
    u: ScalarField
    v: ScalarField


def _checked(field: ScalarField, what: str) -> ScalarField:
    if not field.is_finite():
        raise NonFiniteIterate(f"{what} is not finite")
    return field


def map_T(w: ScalarField, d: ProblemData, x0: MapResult | None = None) -> MapResult:
    """One application of the fixed-point map.

    Returns both ``u`` (solution of the first solve) and ``v = T(w)``.
    ``x0`` optionally warm-starts the two linear solves.
    """
    e = d.exponents
    with np.errstate(over="ignore", invalid="ignore"):
        rhs_u = w.positive_part() ** e.q + d.alpha * d.g
    u = solve_poisson(_checked(rhs_u, "first right-hand side"), d.poisson_tol,
                      x0=x0.u if x0 else None).solution
    _checked(u, "u")
    with np.errstate(over="ignore", invalid="ignore"):
        rhs_v = gradient(u).magnitude() ** e.p + d.lam * d.f
    v = solve_poisson(_checked(rhs_v, "second right-hand side"), d.poisson_tol,
                      x0=x0.v if x0 else None).solution
    return MapResult(u, _checked(v, "v"))


def weak_residual(
    u: ScalarField,
    v: ScalarField,
    d: ProblemData,
    testset: Sequence[ScalarField] | None = None,
) -> tuple:
    """Residuals of both weak identities over a set of Dirichlet test fields.

    ``res1 = max |int grad(phi).grad(u) - int v^q phi - alpha int g phi| / (1 + ||grad phi||_2)``
    and ``res2`` likewise for the second equation.  The gradient pairing is
    the stencil-consistent edge form of :func:`gradsys.grid.dirichlet_inner`.
    """
    if testset is None:
        testset = sine_modes(u.grid, 5)
    e = d.exponents
    res1 = res2 = 0.0
    # huge iterates may overflow to inf; the residual then reports inf
    with np.errstate(over="ignore", invalid="ignore"):
        src1 = v.positive_part() ** e.q + d.alpha * d.g
        src2 = gradient(u).magnitude() ** e.p + d.lam * d.f
        for phi in testset:
            scale = 1.0 + math.sqrt(max(dirichlet_inner(phi, phi), 0.0))
            r1 = abs(dirichlet_inner(phi, u) - integrate(src1 * phi)) / scale
            r2 = abs(dirichlet_inner(phi, v) - integrate(src2 * phi)) / scale
            res1 = max(res1, r1)
            res2 = max(res2, r2)
    return res1, res2


class Verdict(enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    MAX_ITER = "MaxIterReached"


@dataclass
class IterationRecord:
    iter: int
    grad_v_r: float
    grad_u_p: float
    rel_change_w11: float
    res1: float
    res2: float
    in_E: bool

    def row(self) -> list:
        return [self.iter, repr(float(self.grad_v_r)), repr(float(self.grad_u_p)),
                repr(float(self.rel_change_w11)), repr(float(self.res1)),
                repr(float(self.res2)), int(self.in_E)]


@dataclass
class IterationReport:
    trace: list = field(default_factory=list)
    verdict: Verdict = Verdict.MAX_ITER
    nonfinite: bool = False
    radius: float = math.nan
    r: float = math.nan

    @property
    def in_E_all_iterations(self) -> bool:
        return all(rec.in_E for rec in self.trace)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def grad_v_r(self) -> np.ndarray:
        return np.array([rec.grad_v_r for rec in self.trace])

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in self.trace:
            writer.writerow(rec.row())

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


@dataclass
class FixedPointResult:
    u: ScalarField
    v: ScalarField
    report: IterationReport


def _diverging(trace: list, bound: float, patience: int) -> bool:
    """Growth outside the inflated ball that does not slow down."""
    if len(trace) < patience:
        return False
    tail = trace[-patience:]
    vals = [rec.grad_v_r for rec in tail]
    if not all(x > bound for x in vals):
        return False
    if not all(b > a for a, b in zip(vals, vals[1:])):
        return False
    steps = [rec.rel_change_w11 for rec in tail[1:]]
    return all(b >= a for a, b in zip(steps, steps[1:]))


def iterate_to_fixed_point(
    d: ProblemData,
    t: ThresholdConstants,
    w0: ScalarField | None = None,
    testset: Sequence[ScalarField] | None = None,
) -> FixedPointResult:
    """Iterate ``w <- T(w)`` from ``w0`` (default 0).

    Stops with ``Converged`` when the relative ``W^{1,1}`` change of ``v``
    is at most ``d.tol``; with ``Diverged`` when an iterate overflows or
    when ``||grad v||_r`` has stayed above ``divergence_factor * ell^{1/pq}``
    while growing, at a non-decreasing relative rate, for ``d.patience``
    consecutive iterations; otherwise after ``d.max_iter`` steps.
    """
    verdict = check_admissibility(d.exponents)
    if not verdict.admissible:
        raise ValueError(f"inadmissible exponents: {verdict.explain()}")
    grid = d.grid
    r = d.r
    e = d.exponents
    if testset is None:
        testset = sine_modes(grid, 5)
    w = ScalarField(grid, np.zeros(grid.shape)) if w0 is None else w0
    if not w.is_dirichlet():
        raise ValueError("initial iterate must vanish on the boundary")

    report = IterationReport(radius=t.radius, r=r)
    bound = d.divergence_factor * t.radius
    u = w
    prev = None
    for k in range(1, d.max_iter + 1):
        try:
            out = map_T(w, d, x0=prev)
        except NonFiniteIterate:
            report.trace.append(
                IterationRecord(k, math.inf, math.inf, math.inf, math.inf, math.inf, False)
            )
            report.verdict = Verdict.DIVERGED
            report.nonfinite = True
            break
        u, v = out.u, out.v
        grad_v_r = lp_norm(gradient(v).magnitude(), r)
        grad_u_p = lp_norm(gradient(u).magnitude(), e.p)
        base = w11_norm(w)
        rel = w11_norm(v - w) / max(base, 1e-30)
        res1, res2 = weak_residual(u, v, d, testset)
        report.trace.append(
            IterationRecord(k, grad_v_r, grad_u_p, rel, res1, res2, bool(grad_v_r <= t.radius))
        )
        w, prev = v, out
        if rel <= d.tol:
            report.verdict = Verdict.CONVERGED
            break
        if _diverging(report.trace, bound, d.patience):
            report.verdict = Verdict.DIVERGED
            break
    return FixedPointResult(u, w, report)


def _random_probe(grid, rng: np.random.Generator, k_max: int = 4) -> ScalarField:
    modes = sine_modes(grid, k_max)
    if grid.dim == 1:
        decay = np.array([j * j for j in range(1, k_max + 1)], dtype=float)
    else:
        decay = np.array(
            [j * j + k * k for j in range(1, k_max + 1) for k in range(1, k_max + 1)], dtype=float
        )
    coef = rng.standard_normal(len(modes)) / decay
    vals = sum(c * m.values for c, m in zip(coef, modes))
    return ScalarField(grid, vals)


def calibrate_c_tilde(
    d: ProblemData,
    n_probe: int = 20,
    seed: int = 0,
    rounds: int = 12,
    rtol: float = 1e-3,
) -> float:
    """Smallest constant making the one-step bound hold over random probes.

    For probes ``w`` with ``||grad w||_r`` spread over ``(0, ell^{1/pq}]``
    the ratio ``||grad T(w)||_r / (||grad w||_r^{pq} + alpha^p ||g||_sigma^p
    + lambda ||f||_m)`` is maximized; ``ell`` depends on the constant, so
    the estimate is iterated until it moves by less than ``rtol``.
    """
    e = d.exponents
    r = d.r
    size = d.data_size()
    rng = np.random.default_rng(seed)
    shapes = [_random_probe(d.grid, rng) for _ in range(n_probe)]
    fractions = rng.uniform(0.0, 1.0, n_probe)
    fractions = np.maximum(fractions, 1e-3)
    grad_shapes = [lp_norm(gradient(s).magnitude(), r) for s in shapes]

    c = 1.0
    for _ in range(rounds):
        t = thresholds_from(e.pq, c)
        worst = 0.0
        for shape, gnorm, frac in zip(shapes, grad_shapes, fractions):
            target = frac * t.radius
            w = shape * (target / gnorm)
            v = map_T(w, d).v
            num = lp_norm(gradient(v).magnitude(), r)
            den = target ** e.pq + size
            worst = max(worst, num / den)
        if worst == 0.0:
            return c
        done = abs(worst - c) <= rtol * c
        c = worst
        if done:
            break
    return c
