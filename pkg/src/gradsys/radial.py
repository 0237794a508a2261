"""Radial calculus and quadrature in arbitrary dimension ``N``.

A radial function ``phi(|x|)`` on the unit ball is described by a
:class:`RadialProfile`, a list of closed-form pieces with analytic
derivatives up to order three.  Integrals over balls and annuli reduce to
``omega_{N-1} * int_a^b g(r) r^{N-1} dr``, evaluated by composite Simpson
on geometrically spaced panels so that singular behaviour at ``r = 0`` is
resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "RadialQuadratureError",
    "PowerPiece",
    "ReflectedPowerPiece",
    "PolynomialPiece",
    "RadialProfile",
    "sphere_area",
    "radial_laplacian",
    "radial_laplacian_d1",
    "radial_integrate",
    "integrate_1d",
    "hermite_quintic",
]

MAX_ORDER = 3


class RadialQuadratureError(RuntimeError):
    """Adaptive refinement did not settle; the integral is likely divergent."""


def _half_gamma(k: int) -> float:
    """``Gamma(k / 2)`` for a positive integer ``k`` via ``Gamma(x + 1) = x Gamma(x)``."""
    if k % 2 == 0:
        x, g = 1.0, 1.0
    else:
        x, g = 0.5, math.sqrt(math.pi)
    while x < k / 2:
        g *= x
        x += 1.0
    return g


def sphere_area(n_dim: int) -> float:
    """Area ``omega_{N-1} = 2 pi^{N/2} / Gamma(N/2)`` of the unit sphere in ``R^N``."""
    if int(n_dim) != n_dim or n_dim < 1:
        raise ValueError(f"dimension must be a positive integer, got {n_dim}")
    n = int(n_dim)
    return 2.0 * math.pi ** (n / 2) / _half_gamma(n)


@dataclass(frozen=True)
class PowerPiece:
    """``c * r^e``."""

    coef: float
    expo: float

    def __call__(self, r, order=0):
        c, e = self.coef, self.expo
        for _ in range(order):
            c *= e
            e -= 1.0
        return c * np.power(r, e)


@dataclass(frozen=True)
class ReflectedPowerPiece:
    """``c * (1 - r)^e``."""

    coef: float
    expo: float

    def __call__(self, r, order=0):
        c, e = self.coef, self.expo
        for _ in range(order):
            c *= -e
            e -= 1.0
        return c * np.power(1.0 - np.asarray(r, dtype=float), e)


@dataclass(frozen=True)
class PolynomialPiece:
    poly: Polynomial

    def __call__(self, r, order=0):
        return self.poly.deriv(order)(r) if order else self.poly(r)


class RadialProfile:
    """Piecewise closed-form radial function on ``(0, 1]``.

    Parameters
    ----------
    pieces : sequence of ((a, b), piece)
        Consecutive intervals covering ``(0, 1]``; ``piece(r, order)``
        returns the ``order``-th derivative.
    """

    def __init__(self, pieces: Sequence):
        pieces = sorted(pieces, key=lambda item: item[0][0])
        if pieces[0][0][0] != 0.0 or pieces[-1][0][1] != 1.0:
            raise ValueError("pieces must cover (0, 1]")
        for (iv0, _), (iv1, _) in zip(pieces, pieces[1:]):
            if iv0[1] != iv1[0]:
                raise ValueError(f"gap or overlap between {iv0} and {iv1}")
        self.pieces = list(pieces)

    @property
    def junctions(self) -> list:
        return [iv[1] for iv, _ in self.pieces[:-1]]

    def __call__(self, r, order: int = 0):
        if order > MAX_ORDER:
            raise ValueError(f"derivatives available up to order {MAX_ORDER}")
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, np.nan)
        for (a, b), piece in self.pieces:
            sel = (r > a) & (r <= b)
            if np.any(sel):
                out[sel] = piece(r[sel], order)
        return out if out.ndim else float(out)

    def junction_jumps(self) -> list:
        """Max jump over orders 0..2 at each junction."""
        jumps = []
        for k, rj in enumerate(self.junctions):
            left, right = self.pieces[k][1], self.pieces[k + 1][1]
            jumps.append(max(abs(float(left(rj, d)) - float(right(rj, d))) for d in range(3)))
        return jumps


def radial_laplacian(profile: Callable, n_dim: float, r):
    """``phi'' + (N - 1) phi' / r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radial Laplacian is undefined at r = 0")
    out = profile(r, 2) + (n_dim - 1.0) * profile(r, 1) / r
    return out if np.ndim(out) else float(out)


def radial_laplacian_d1(profile: Callable, n_dim: float, r):
    """Radial derivative of :func:`radial_laplacian`."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("radial Laplacian is undefined at r = 0")
    return profile(r, 3) + (n_dim - 1.0) * (profile(r, 2) / r - profile(r, 1) / (r * r))


def _simpson_panel(g: Callable, a: float, b: float, tol: float, max_level: int) -> float:
    n = 8
    x = np.linspace(a, b, n + 1)
    y = g(x)
    s_old = (b - a) / (3 * n) * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())
    for _ in range(max_level):
        n *= 2
        xm = np.linspace(a, b, n + 1)[1::2]
        y_new = np.empty(n + 1)
        y_new[0::2] = y
        y_new[1::2] = g(xm)
        y = y_new
        s = (b - a) / (3 * n) * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())
        if not np.isfinite(s):
            raise RadialQuadratureError(f"non-finite integrand on [{a:.3e}, {b:.3e}]")
        if abs(s - s_old) <= 15.0 * tol * abs(s) or abs(s - s_old) < 1e-300:
            return s + (s - s_old) / 15.0
        s_old = s
    raise RadialQuadratureError(f"Simpson refinement did not settle on [{a:.3e}, {b:.3e}]")


def _descend(g: Callable, anchor: float, length: float, tol: float,
             max_panels: int, max_level: int) -> float:
    """Integrate ``g`` over ``length`` away from ``anchor`` with halving panels toward it.

    ``length`` may be negative (the anchor is the right end).  The anchor
    itself is never evaluated.  Once panels get too thin to resolve in
    floating point next to a nonzero anchor, the remaining tail is
    extrapolated from the geometric decay of the last two panels.
    """
    total = 0.0
    quiet = 0
    part = prev = 0.0
    floor_width = 1e3 * np.finfo(float).eps * abs(anchor)
    near, far = anchor + 0.5 * length, anchor + length
    for _ in range(max_panels):
        lo, hi = (near, far) if length > 0 else (far, near)
        if hi - lo <= floor_width:
            ratio = part / prev if prev else 1.0
            if 0.0 <= ratio < 1.0:
                return total + part * ratio / (1.0 - ratio)
            break
        prev, part = part, _simpson_panel(g, lo, hi, tol, max_level)
        total += part
        quiet = quiet + 1 if abs(part) <= tol * abs(total) else 0
        if quiet >= 3:
            return total
        far = near
        near = anchor + 0.5 * (near - anchor)
    raise RadialQuadratureError(
        f"no decay toward r = {anchor} after {max_panels} panels (divergent integral?)"
    )


def integrate_1d(
    g: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    open_left: bool = False,
    open_right: bool = False,
    max_panels: int = 200,
    max_level: int = 16,
) -> float:
    """``int_a^b g(r) dr`` by composite Simpson on geometric panels.

    An ``open`` end is approached by halving panels and never evaluated, so
    integrable singularities there are allowed.  A closed end ``a > 0``
    that is small against ``b`` still gets panels doubling away from it.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if open_left and open_right:
        mid = 0.5 * (a + b)
        return (_descend(g, a, mid - a, tol, max_panels, max_level)
                + _descend(g, b, mid - b, tol, max_panels, max_level))
    if open_left:
        return _descend(g, a, b - a, tol, max_panels, max_level)
    if open_right:
        return _descend(g, b, a - b, tol, max_panels, max_level)
    edges = [a]
    if a > 0:
        while edges[-1] * 2.0 < b:
            edges.append(edges[-1] * 2.0)
    edges.append(b)
    if len(edges) - 1 > max_panels:
        raise RadialQuadratureError("too many panels")
    return sum(_simpson_panel(g, lo, hi, tol, max_level) for lo, hi in zip(edges, edges[1:]))


def radial_integrate(
    integrand: Callable,
    n_dim: int,
    a: float,
    b: float,
    tol: float = 1e-10,
    open_right: bool = False,
    max_panels: int = 200,
    max_level: int = 16,
) -> float:
    """``omega_{N-1} * int_a^b integrand(r) r^{N-1} dr``.

    Composite Simpson with interval doubling on each panel until successive
    values agree to relative ``tol``.  Panels double in width away from a
    small ``a``; for ``a = 0`` they halve toward the origin until three
    consecutive panels contribute less than ``tol`` of the running total,
    and the origin is never evaluated.  ``open_right`` treats ``b`` the
    same way.

    Raises
    ------
    RadialQuadratureError
        When a panel does not settle or the panel cap is reached; both
        indicate a divergent integral.
    """
    if not (0.0 <= a < b <= 1.0):
        raise ValueError(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    nm1 = n_dim - 1

    def g(r):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.asarray(integrand(r), dtype=float) * np.power(r, nm1)

    total = integrate_1d(g, a, b, tol, open_left=(a == 0.0), open_right=open_right,
                         max_panels=max_panels, max_level=max_level)
    return sphere_area(n_dim) * total


def hermite_quintic(a: float, b: float, left: Sequence[float], right: Sequence[float]) -> Polynomial:
    """Quintic matching value, first and second derivative at ``a`` and ``b``."""
    rows, rhs = [], []
    for x, vals in ((a, left), (b, right)):
        for d in range(3):
            row = []
            for k in range(6):
                if k < d:
                    row.append(0.0)
                else:
                    row.append(math.perm(k, d) * x ** (k - d))
            rows.append(row)
            rhs.append(vals[d])
    coef = np.linalg.solve(np.array(rows), np.array(rhs, dtype=float))
    return Polynomial(coef)
