"""Independent reference values used by the tests.

Nothing here imports the package under test.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp


def gauss_box(fun, n: int = 160) -> float:
    """Tensor Gauss-Legendre quadrature of ``fun(x, y)`` over the unit square."""
    t, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (t + 1.0)
    w = 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    return float(np.sum(np.outer(w, w) * fun(X, Y)))


def torsion_center_series(terms: int = 400) -> float:
    """Center value of ``-Delta z = 1`` on the unit square by the double sine series."""
    j = np.arange(1, 2 * terms, 2, dtype=float)
    sj = np.where(((j - 1) / 2) % 2 == 0, 1.0, -1.0)  # sin(j pi / 2)
    J, K = np.meshgrid(j, j, indexing="ij")
    return float(np.sum(16.0 * np.outer(sj, sj) / (np.pi ** 4 * J * K * (J ** 2 + K ** 2))))


def upsilon_argmax(pq: float, c: float) -> tuple:
    """``(argmax, max)`` of ``s^{1/pq} - c s`` by a zooming grid search in extended precision."""
    L = np.longdouble
    pq, c = L(pq), L(c)
    lo, hi = L(0), (L(1) / c) ** (pq / (pq - 1))  # the positive root bounds the maximizer
    for _ in range(40):
        s = np.linspace(lo, hi, 401, dtype=np.longdouble)
        y = s ** (1 / pq) - c * s
        k = int(np.argmax(y))
        lo, hi = s[max(k - 2, 0)], s[min(k + 2, 400)]
    best = (lo + hi) / 2
    return float(best), float(best ** (1 / pq) - c * best)


def upsilon_root(pq: float, c: float) -> float:
    """Positive zero of ``s^{1/pq} - c s`` by a zooming sign-change search."""
    L = np.longdouble
    pq, c = L(pq), L(c)
    ell, _ = upsilon_argmax(float(pq), float(c))
    lo, hi = L(ell), L(ell) * 2
    while hi ** (1 / pq) - c * hi > 0:
        hi *= 2
    for _ in range(40):
        s = np.linspace(lo, hi, 101, dtype=np.longdouble)
        y = s ** (1 / pq) - c * s
        k = int(np.argmax(y <= 0))
        lo, hi = s[k - 1], s[k]
    return float((lo + hi) / 2)


_x, _y = sp.symbols("x y", positive=True)


def _sin_power(k: int):
    return (sp.sin(sp.pi * _x) * sp.sin(sp.pi * _y)) ** k


def functional_F_sinpow(k: int, p: float, q: float, n: int = 160) -> float:
    """F of ``(sin(pi x) sin(pi y))^k`` from symbolic derivatives."""
    phi = _sin_power(k)
    pc, qc = p / (p - 1), q / (q - 1)
    cp, cq = (p - 1) / p ** pc, (q - 1) / q ** qc
    grad2 = sp.diff(phi, _x) ** 2 + sp.diff(phi, _y) ** 2
    lap = sp.diff(phi, _x, 2) + sp.diff(phi, _y, 2)
    f = sp.lambdify((_x, _y), [phi, grad2, lap], "numpy")

    def integrand(X, Y):
        ph, g2, lp = f(X, Y)
        return cp * ph ** (1 - pc) * g2 ** (pc / 2) + cq * ph ** (1 - qc) * np.abs(lp) ** qc

    return gauss_box(integrand, n)


def functional_Q_sinpow(k: int, p: float, n: int = 160) -> float:
    """Capacity numerator of ``(sin(pi x) sin(pi y))^k`` from symbolic derivatives."""
    phi = _sin_power(k)
    pc = sp.Rational(p).limit_denominator(1000) / (sp.Rational(p).limit_denominator(1000) - 1)
    lap = sp.diff(phi, _x, 2) + sp.diff(phi, _y, 2)
    psi = phi ** (pc - 1) * (-lap)
    grad2 = sp.diff(psi, _x) ** 2 + sp.diff(psi, _y) ** 2
    f = sp.lambdify((_x, _y), [phi, grad2], "numpy")
    expo = p / (p - 1) ** 2

    def integrand(X, Y):
        ph, g2 = f(X, Y)
        return g2 ** (float(pc) / 2) / ph ** expo

    return gauss_box(integrand, n)


def functional_G_sin2(p: float = 2.0, terms: int = 300, n: int = 160) -> float:
    """G of ``varphi = sin^2(pi x) sin^2(pi y)``.

    ``-Delta phi = varphi`` is solved by the sine series of ``sin^2``:
    ``b_j = -8 / (pi j (j^2 - 4))`` for odd ``j``.
    """
    j = np.arange(1, 2 * terms, 2, dtype=float)
    b = -8.0 / (np.pi * j * (j ** 2 - 4.0))
    t, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (t + 1.0)
    w = 0.5 * w
    S = np.sin(np.pi * np.outer(j, x))  # (terms, n)
    J, K = np.meshgrid(j, j, indexing="ij")
    coef = np.outer(b, b) / (np.pi ** 2 * (J ** 2 + K ** 2))
    phi = S.T @ coef @ S
    s, c = np.sin(np.pi * x), np.cos(np.pi * x)
    gx = np.outer(2 * np.pi * s * c, s ** 2)
    gy = np.outer(s ** 2, 2 * np.pi * s * c)
    pc = p / (p - 1)
    cp = (p - 1) / p ** pc
    vals = cp * phi ** (1 - pc) * (gx ** 2 + gy ** 2) ** (pc / 2)
    return float(np.sum(np.outer(w, w) * vals))


def sphere_area(n_dim: int) -> float:
    return 2 * math.pi ** (n_dim / 2) / math.gamma(n_dim / 2)
