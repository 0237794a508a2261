"""The Navier problem for Delta^2 u = |grad u|^p + lambda f.

The solution comes from the q = 1 splitting and is then checked against an
independent nine-point stencil.  The cross residual is a discretization
error, so it should drop by about 4 when h halves.
"""

from gradsys.bilaplacian import cross_validate, solve_bilaplacian
from gradsys.grid import build_grid, sample

prev = None
for n in (33, 65, 129):
    f = sample(build_grid(2, n), "one")
    res = solve_bilaplacian(f, 1e-4, 2, tol=1e-12, poisson_tol=1e-11)
    r = cross_validate(res, f, 1e-4, 2)
    note = "" if prev is None else f"  ratio {prev / r:.2f}"
    print(f"n={n:4d}  {res.verdict.value}  sigma0={res.sigma0:g}  cross residual {r:.3e}{note}")
    prev = r
