"""Dual functionals that bound the nonexistence thresholds from above.

Grid functionals take nodal fields on the unit box.  Integrands carrying a
negative power of the test function are evaluated with the floor rule of
:func:`floored_integral`.  The capacity numerator is also available for
radial profiles in any dimension, which is what the explicit witness uses.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exponents import holder_conjugate, k_of_r, young_constant
from .grid import GridSpec, ScalarField, gradient, integrate, laplacian_apply, sample
from .poisson import DEFAULT_TOL, solve_poisson
from .radial import (
    PolynomialPiece,
    PowerPiece,
    RadialProfile,
    RadialQuadratureError,
    ReflectedPowerPiece,
    hermite_quintic,
    radial_integrate,
    radial_laplacian,
    radial_laplacian_d1,
)

__all__ = [
    "SENTINEL_LIMIT",
    "FLOOR_FACTOR",
    "CandidateFamily",
    "default_family",
    "floored_integral",
    "functional_F",
    "functional_G",
    "baras_pierre_gap",
    "functional_Q",
    "q_ratio",
    "radial_q_numerator",
    "alpha_star_upper",
    "lambda_star_upper",
    "q1_threshold_upper",
    "lambda_capacity_upper",
    "family_table",
    "write_table",
    "TABLE_COLUMNS",
    "WitnessParams",
    "Witness",
    "build_witness",
    "WitnessStudy",
    "witness_divergence_study",
]

#: Integrals above this value are reported as ``+inf``.
SENTINEL_LIMIT = 1e12
#: Nodes with ``|phi| < FLOOR_FACTOR * max|phi|`` are treated as zeros of ``phi``.
FLOOR_FACTOR = 1e-12

TABLE_COLUMNS = ("functional", "member", "value", "denominator", "ratio")


# --------------------------------------------------------------------------
# candidate families


def _bump(grid: GridSpec) -> ScalarField:
    def f(*xs):
        out = 1.0
        for x in xs:
            with np.errstate(divide="ignore"):
                t = 4.0 * x * (1.0 - x)
                out = out * np.where(t > 0, np.exp(1.0 - 1.0 / np.where(t > 0, t, 1.0)), 0.0)
        return out

    return sample(grid, f)


@dataclass
class CandidateFamily:
    """Named test functions on one grid, each vanishing on the boundary.

    Parameters
    ----------
    members : list of (str, ScalarField)
        Identifier and nodal values.
    """

    members: list = field(default_factory=list)

    def __post_init__(self):
        for name, phi in self.members:
            self._check(name, phi)

    @staticmethod
    def _check(name, phi):
        if not phi.is_dirichlet():
            raise ValueError(f"member {name!r} does not vanish on the boundary")
        if not integrate(abs(phi)) > 0:
            raise ValueError(f"member {name!r} has no interior mass")

    def add(self, name: str, phi: ScalarField) -> "CandidateFamily":
        self._check(name, phi)
        self.members.append((name, phi))
        return self

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def default_family(grid: GridSpec, powers: Sequence[int] = (2, 3, 4, 6), bump: bool = True) -> CandidateFamily:
    """``sinprod_pow:k`` for each ``k`` in ``powers`` plus a smooth bump product."""
    fam = CandidateFamily()
    for k in powers:
        fam.add(f"sinprod_pow:{k}", sample(grid, f"sinprod_pow:{k}"))
    if bump:
        fam.add("bump", _bump(grid))
    return fam


# --------------------------------------------------------------------------
# grid functionals


def floored_integral(numer: np.ndarray, phi: np.ndarray, expo: float, weights: np.ndarray) -> float:
    """``int numer * |phi|^expo`` for ``expo < 0`` with an explicit zero policy.

    Let ``floor = 1e-12 * max|phi|``.  A node with ``|phi| < floor`` adds
    nothing when ``numer`` there is at most ``h * max(numer)`` (``numer``
    vanishes with ``phi``); otherwise ``|phi|`` is clamped to ``floor``.
    The result is ``inf`` when it exceeds ``1e12`` or when the clamped
    nodes carry more than half of it: the value then measures the floor,
    not the integrand, which signals a non-removable singularity.
    """
    a = np.abs(phi)
    top = float(np.max(a))
    if top == 0.0:
        raise ValueError("test function is identically zero")
    floor = FLOOR_FACTOR * top
    small = a < floor
    numer = np.asarray(numer, dtype=float)
    h = float(np.min(weights[weights > 0])) ** (1.0 / phi.ndim)
    removable = small & (numer <= h * float(np.max(numer)))
    base = np.where(small, floor, a)
    with np.errstate(over="ignore"):
        vals = np.where(removable, 0.0, numer * base ** expo)
        total = float(np.sum(weights * vals))
        clamped = float(np.sum(np.where(small & ~removable, weights * vals, 0.0)))
    if not np.isfinite(total) or abs(total) > SENTINEL_LIMIT or abs(clamped) > 0.5 * abs(total):
        return math.inf
    return total


def _nonneg(phi: ScalarField, what: str = "phi"):
    if np.any(phi.values < 0):
        raise ValueError(f"{what} must be nonnegative")


def _delta(phi: ScalarField) -> np.ndarray:
    """Stencil ``Delta phi``; zero on the boundary for Dirichlet fields."""
    return -laplacian_apply(phi).values


def functional_F(phi: ScalarField, p: float, q: float) -> float:
    """``C_p int phi^{1-p'} |grad phi|^{p'} + C_q int phi^{1-q'} |Delta phi|^{q'}``.

    Returns ``inf`` when the floored integral exceeds ``1e12``.
    """
    if not (p > 1 and q > 1):
        raise ValueError(f"need p, q > 1, got p={p}, q={q}")
    _nonneg(phi)
    pc, qc = holder_conjugate(p), holder_conjugate(q)
    w = phi.grid.weights()
    grad = gradient(phi).magnitude().values
    t1 = floored_integral(grad ** pc, phi.values, 1.0 - pc, w)
    t2 = floored_integral(np.abs(_delta(phi)) ** qc, phi.values, 1.0 - qc, w)
    return young_constant(p) * t1 + young_constant(q) * t2


def _aux(varphi: ScalarField, tol: float) -> ScalarField:
    _nonneg(varphi, "varphi")
    if not np.any(varphi.values > 0):
        raise ValueError("varphi is identically zero")
    return solve_poisson(varphi, tol).solution


def functional_G(varphi: ScalarField, p: float, tol: float = DEFAULT_TOL) -> float:
    """``C_p int phi^{1-p'} |grad varphi|^{p'}`` where ``-Delta phi = varphi``."""
    if not p > 1:
        raise ValueError(f"need p > 1, got {p}")
    phi = _aux(varphi, tol)
    pc = holder_conjugate(p)
    grad = gradient(varphi).magnitude().values
    return young_constant(p) * floored_integral(grad ** pc, phi.values, 1.0 - pc, phi.grid.weights())


def baras_pierre_gap(h: ScalarField, phi: ScalarField, r: float) -> float:
    """``k(r) int |Delta phi|^{r'} |phi|^{1-r'} - int h phi``.

    A negative value certifies that ``-Delta w = w^r + h`` has no
    nonnegative solution.
    """
    _nonneg(phi)
    rc = holder_conjugate(r)
    lhs = floored_integral(np.abs(_delta(phi)) ** rc, phi.values, 1.0 - rc, phi.grid.weights())
    return k_of_r(r) * lhs - integrate(h * phi)


def functional_Q(phi: ScalarField, p: float) -> float:
    """Capacity numerator ``int |grad(|phi|^{p'-2} phi (-Delta phi))|^{p'} / |phi|^{p/(p-1)^2}``.

    ``phi`` may change sign.  Radial profiles go through
    :func:`radial_q_numerator`.
    """
    if not p > 1:
        raise ValueError(f"need p > 1, got {p}")
    pc = holder_conjugate(p)
    a = np.abs(phi.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        lift = np.where(a > 0, a ** (pc - 2.0), 0.0) * phi.values
    psi = ScalarField(phi.grid, lift * (-_delta(phi)))
    grad = gradient(psi).magnitude().values
    return floored_integral(grad ** pc, phi.values, -p / (p - 1.0) ** 2, phi.grid.weights())


def q_ratio(phi: ScalarField, f: ScalarField, p: float) -> float:
    """``functional_Q(phi) / int f |phi|^{p'}``; invariant under ``phi -> a phi``."""
    den = integrate(f * abs(phi) ** holder_conjugate(p))
    if not den > 0:
        raise ValueError("int f |phi|^{p'} must be positive")
    return functional_Q(phi, p) / den


# --------------------------------------------------------------------------
# family minimisation


def family_table(kind: str, data: ScalarField, family: CandidateFamily, p: float,
                 q: float | None = None, tol: float = DEFAULT_TOL) -> list:
    """Rows ``(functional, member, value, denominator, ratio)`` for each member.

    ``kind`` is one of ``F`` (denominator ``int data phi``), ``G_alpha``
    (``int data varphi``), ``G_lambda`` (``int data phi`` with
    ``-Delta phi = varphi``) and ``Q`` (``int data |phi|^{p'}``).  The ratio
    is ``nan`` when the denominator is not positive.
    """
    rows = []
    for name, phi in family:
        if kind == "F":
            value, den = functional_F(phi, p, q), integrate(data * phi)
        elif kind == "G_alpha":
            value, den = functional_G(phi, p, tol), integrate(data * phi)
        elif kind == "G_lambda":
            value = functional_G(phi, p, tol)
            den = integrate(data * solve_poisson(phi, tol).solution)
        elif kind == "Q":
            value = functional_Q(phi, p)
            den = integrate(data * abs(phi) ** holder_conjugate(p))
        else:
            raise ValueError(f"unknown functional {kind!r}")
        ratio = value / den if den > 0 else math.nan
        rows.append((kind, name, value, den, ratio))
    return rows


def _best(rows: list, what: str) -> float:
    ratios = [r[4] for r in rows if not math.isnan(r[4])]
    if not ratios:
        raise ValueError(f"no member of the family has a positive {what} normalization")
    return min(ratios)


def alpha_star_upper(g: ScalarField, family: CandidateFamily, p: float, q: float) -> float:
    """``min F(phi) / int g phi`` over the family, an upper bound for ``alpha*``."""
    return _best(family_table("F", g, family, p, q), "int g phi")


def lambda_star_upper(f: ScalarField, family: CandidateFamily, p: float, q: float) -> float:
    """``min F(phi) / int f phi`` over the family, an upper bound for ``lambda*``."""
    return _best(family_table("F", f, family, p, q), "int f phi")


def q1_threshold_upper(data: ScalarField, family: CandidateFamily, p: float,
                       which: str = "lambda", tol: float = DEFAULT_TOL) -> float:
    """Upper bound for ``alpha*`` or ``lambda*`` when ``q = 1``.

    Members play the role of ``varphi``.  For ``which="alpha"`` the
    normalization is ``int g varphi``; for ``which="lambda"`` it is
    ``int f phi`` with ``phi`` the auxiliary Poisson solution.
    """
    if which not in ("alpha", "lambda"):
        raise ValueError(f"which must be 'alpha' or 'lambda', got {which!r}")
    return _best(family_table(f"G_{which}", data, family, p, tol=tol), "denominator")


def lambda_capacity_upper(f: ScalarField, family: CandidateFamily, p: float) -> float:
    """``min`` of the capacity ratio over the family, an upper bound for ``Lambda(f)``."""
    return _best(family_table("Q", f, family, p), "int f |phi|^{p'}")


def write_table(rows: list, fh) -> None:
    """CSV with header :data:`TABLE_COLUMNS`; floats written with ``repr``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for kind, name, value, den, ratio in rows:
        w.writerow([kind, name, repr(float(value)), repr(float(den)), repr(float(ratio))])


# --------------------------------------------------------------------------
# radial capacity numerator and the witness


def _piece_q_integrand(piece: Callable, n_dim: float, p: float) -> Callable:
    pc = holder_conjugate(p)
    expo = p / (p - 1.0) ** 2

    def g(r):
        phi = piece(r)
        d1 = piece(r, 1)
        a = np.abs(phi)
        lap = radial_laplacian(piece, n_dim, r)
        lap1 = radial_laplacian_d1(piece, n_dim, r)
        lift = a ** (pc - 2.0)
        # d/dr of |phi|^{p'-2} phi (-Delta phi)
        dpsi = (pc - 1.0) * lift * d1 * (-lap) + lift * phi * (-lap1)
        return np.abs(dpsi) ** pc / a ** expo

    return g


def radial_q_numerator(profile: RadialProfile, n_dim: int, p: float, inner: float = 0.0,
                       tol: float = 1e-10) -> float:
    """Capacity numerator of a radial profile over ``inner < |x| < 1``.

    Each piece is integrated separately with its own closed form, so
    derivative jumps at junctions never enter a quadrature panel.  The end
    ``r = 1``, where the profile vanishes, is approached without being
    evaluated.  Returns ``inf`` when quadrature signals divergence.
    """
    total = 0.0
    last = len(profile.pieces) - 1
    try:
        for k, ((a, b), piece) in enumerate(profile.pieces):
            lo = max(a, inner)
            if lo >= b:
                continue
            total += radial_integrate(_piece_q_integrand(piece, n_dim, p), n_dim, lo, b, tol,
                                      open_right=(k == last))
    except RadialQuadratureError:
        return math.inf
    return total if total <= SENTINEL_LIMIT else math.inf


@dataclass(frozen=True)
class WitnessParams:
    """Parameters of the radial nonexistence witness on the unit ball."""

    n_dim: int
    p: float
    eps: float
    gamma: float

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"need p > 1, got {self.p}")
        if not self.eps > 0:
            raise ValueError(f"need eps > 0, got {self.eps}")
        pc = self.p_conj
        if not self.n_dim > 3 * pc:
            raise ValueError(f"need N > 3p' = {3 * pc:g}, got N = {self.n_dim}")
        if not self.theta > 0:
            raise ValueError(f"theta = {self.theta:g} must be positive; decrease eps")
        if not self.gamma > (3 * pc - 1) / pc:
            raise ValueError(f"need gamma > (3p'-1)/p' = {(3 * pc - 1) / pc:g}, got {self.gamma}")

    @property
    def p_conj(self) -> float:
        return holder_conjugate(self.p)

    @property
    def theta(self) -> float:
        return (self.n_dim - 3 * self.p_conj - self.eps) / self.p_conj

    @property
    def f_exponent(self) -> float:
        return 3 * self.p_conj + self.eps


@dataclass
class Witness:
    params: WitnessParams
    phi: RadialProfile
    f: RadialProfile
    m_max: float


def build_witness(wp: WitnessParams) -> Witness:
    """``phi = r^{-theta}`` near 0, ``(1 - r)^gamma`` near 1, ``f = r^{-(3p'+eps)}``.

    The two pieces are joined on ``[1/4, 1/2]`` by the quintic matching
    value, slope and curvature at both ends.
    """
    inner = PowerPiece(1.0, -wp.theta)
    outer = ReflectedPowerPiece(1.0, wp.gamma)
    bridge = hermite_quintic(0.25, 0.5, [float(inner(0.25, d)) for d in range(3)],
                             [float(outer(0.5, d)) for d in range(3)])
    phi = RadialProfile([((0.0, 0.25), inner), ((0.25, 0.5), PolynomialPiece(bridge)),
                         ((0.5, 1.0), outer)])
    samples = bridge(np.linspace(0.25, 0.5, 2001))
    if not np.all(samples > 0):
        raise ValueError("bridge polynomial is not positive on [1/4, 1/2]")
    f = RadialProfile([((0.0, 1.0), PowerPiece(1.0, -wp.f_exponent))])
    return Witness(wp, phi, f, wp.n_dim / (3 * wp.p_conj))


def _denominator(w: Witness, inner: float, tol: float) -> float:
    pc = w.params.p_conj
    fpiece = w.f.pieces[0][1]
    total = 0.0
    last = len(w.phi.pieces) - 1
    for k, ((a, b), piece) in enumerate(w.phi.pieces):
        lo = max(a, inner)
        if lo >= b:
            continue
        total += radial_integrate(lambda r, piece=piece: fpiece(r) * np.abs(piece(r)) ** pc,
                                  w.params.n_dim, lo, b, tol, open_right=(k == last))
    return total


@dataclass
class WitnessStudy:
    cutoffs: list
    numerators: list
    denominators: list

    @property
    def ratios(self) -> list:
        return [n / d for n, d in zip(self.numerators, self.denominators)]

    def numerator_spread(self, last: int = 3) -> float:
        """Relative spread ``(max - min) / max`` of the last ``last`` numerators."""
        tail = self.numerators[-last:]
        return (max(tail) - min(tail)) / max(tail)

    def increments(self) -> list:
        return list(np.diff(self.denominators))


def witness_divergence_study(wp: WitnessParams, cutoffs: Sequence[float], tol: float = 1e-10) -> WitnessStudy:
    """Numerator and ``int_{|x| > delta} f |phi|^{p'}`` for each inner radius ``delta``."""
    cutoffs = [float(c) for c in cutoffs]
    if not cutoffs or any(c <= 0 for c in cutoffs):
        raise ValueError("cutoffs must be positive")
    if any(b >= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly decreasing")
    w = build_witness(wp)
    nums = [radial_q_numerator(w.phi, wp.n_dim, wp.p, inner=c, tol=tol) for c in cutoffs]
    dens = [_denominator(w, c, tol) for c in cutoffs]
    return WitnessStudy(cutoffs, nums, dens)
