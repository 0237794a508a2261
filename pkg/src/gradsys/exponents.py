"""Exponent algebra: Holder conjugates, Sobolev stars, admissibility of
``(p, q, m, sigma, N)`` and the choice of the iteration exponent ``r``.

Everything here is plain arithmetic in the analytic dimension ``N``; it
never looks at a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Exponents",
    "Admissibility",
    "holder_conjugate",
    "sobolev_star",
    "check_admissibility",
    "choose_r",
    "k_of_r",
    "young_constant",
]

#: Replaces the infinite Sobolev exponent when ``m >= N`` or ``sigma >= N``.
LARGE_CAP_FACTOR = 10.0


def holder_conjugate(s: float) -> float:
    """``s / (s - 1)`` for ``s > 1``."""
    if not s > 1:
        raise ValueError(f"Holder conjugate needs s > 1, got {s}")
    return s / (s - 1.0)


def sobolev_star(s: float, n_dim: float) -> float:
    """``s N / (N - s)``; ``inf`` when ``s >= N``."""
    if s >= n_dim:
        return math.inf
    return s * n_dim / (n_dim - s)


def young_constant(s: float) -> float:
    """``C_s = (s - 1) / s^{s'}`` from ``ab <= a^s + C_s b^{s'}``."""
    return (s - 1.0) / s ** holder_conjugate(s)


def k_of_r(r: float) -> float:
    """Baras-Pierre constant ``k(r) = (r - 1) / r^{r'}``."""
    if not r > 1:
        raise ValueError(f"k(r) needs r > 1, got {r}")
    return young_constant(r)


@dataclass
class Exponents:
    """The tuple ``(p, q, m, sigma, N)`` and its derived quantities.

    ``r_iter`` is filled in by :func:`choose_r`.
    """

    p: float
    q: float
    m: float
    sigma: float
    n_dim: float
    r_iter: float | None = field(default=None)

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        for name in ("q", "m", "sigma", "n_dim"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def pq(self) -> float:
        return self.p * self.q

    @property
    def p_conj(self) -> float:
        return holder_conjugate(self.p)

    @property
    def q_conj(self) -> float:
        return holder_conjugate(self.q)

    @property
    def sigma_star(self) -> float:
        return sobolev_star(self.sigma, self.n_dim)

    @property
    def m_star(self) -> float:
        return sobolev_star(self.m, self.n_dim)


@dataclass(frozen=True)
class Admissibility:
    branch_22: bool
    branch_23: bool
    branch_24: bool
    failures: tuple = ()

    @property
    def admissible(self) -> bool:
        return self.branch_22 or self.branch_23 or self.branch_24

    def __bool__(self):
        return self.admissible

    def explain(self) -> str:
        """One line per violated inequality, e.g. ``(2.2) failed: pm = 8 >= sigma* = 6``."""
        return "; ".join(self.failures)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6g}"


def check_admissibility(e: Exponents) -> Admissibility:
    """Evaluate the three sufficient conditions on ``(p, q, m, sigma, N)`` literally.

    * (2.2): ``m, sigma in (1, N)``, ``p m < sigma*`` and
      ``q sigma / (N + q sigma) < m / (N - m)``;
    * (2.3): ``m >= N`` and ``sigma > p m N / (N + p m)``;
    * (2.4): ``sigma >= N`` and ``m > q sigma N / (N + 2 q sigma)``.
    """
    p, q, m, s, n = e.p, e.q, e.m, e.sigma, e.n_dim
    failures = []
    if not e.pq > 1:
        failures.append(f"pq > 1 failed: pq = {_fmt(e.pq)}")

    b22 = True
    if not (1 < m < n and 1 < s < n):
        b22 = False
        failures.append(f"(2.2) failed: m = {_fmt(m)}, sigma = {_fmt(s)} not both in (1, {_fmt(n)})")
    else:
        s_star = s * n / (n - s)
        if not p * m < s_star:
            b22 = False
            failures.append(f"(2.2) failed: pm = {_fmt(p * m)} >= sigma* = {_fmt(s_star)}")
        lhs, rhs = q * s / (n + q * s), m / (n - m)
        if not lhs < rhs:
            b22 = False
            failures.append(
                f"(2.2) failed: q sigma/(N + q sigma) = {_fmt(lhs)} >= m/(N - m) = {_fmt(rhs)}"
            )

    bound23 = p * m * n / (n + p * m)
    b23 = m >= n and s > bound23
    if not b23:
        failures.append(
            f"(2.3) failed: need m >= N and sigma > pmN/(N + pm) = {_fmt(bound23)}"
            f" (m = {_fmt(m)}, sigma = {_fmt(s)}, N = {_fmt(n)})"
        )

    bound24 = q * s * n / (n + 2 * q * s)
    b24 = s >= n and m > bound24
    if not b24:
        failures.append(
            f"(2.4) failed: need sigma >= N and m > q sigma N/(N + 2 q sigma) = {_fmt(bound24)}"
            f" (m = {_fmt(m)}, sigma = {_fmt(s)}, N = {_fmt(n)})"
        )

    ok_pq = e.pq > 1
    return Admissibility(b22 and ok_pq, b23 and ok_pq, b24 and ok_pq, tuple(failures))


def r_interval(e: Exponents) -> tuple:
    """Open interval ``(q sigma N / (N + q sigma), m*)`` for ``r``.

    When ``m >= N`` the upper end is infinite and is replaced by ``10 N``.
    """
    lo = e.q * e.sigma * e.n_dim / (e.n_dim + e.q * e.sigma)
    hi = e.m_star if e.m < e.n_dim else LARGE_CAP_FACTOR * e.n_dim
    return lo, hi


def choose_r(e: Exponents) -> float:
    """Pick the iteration exponent as the geometric mean of :func:`r_interval`.

    The result is stored in ``e.r_iter``.  Raises ``ValueError`` when the
    tuple is not admissible or the interval has no room above 1.
    """
    verdict = check_admissibility(e)
    if not verdict.admissible:
        raise ValueError(f"inadmissible exponents: {verdict.explain()}")
    lo, hi = r_interval(e)
    if not (hi > lo and hi > 1):
        raise ValueError(f"empty interval for r: ({_fmt(lo)}, {_fmt(hi)})")
    r = math.sqrt(lo * hi)
    if r <= 1:
        # lo < 1 < hi: move to the geometric mean of (1, hi)
        r = math.sqrt(max(lo, 1.0) * hi)
    e.r_iter = r
    return r
