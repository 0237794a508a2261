"""Small data gives a solution; large data makes the iteration blow up.

The same system is run twice.  With lambda = alpha = 1e-4 the iterates stay
in the invariant ball and converge.  With lambda = 1e6 the gradient norm of
v grows every step until the run is declared divergent.
"""

from gradsys.exponents import Exponents
from gradsys.grid import build_grid, sample
from gradsys.schauder import ProblemData, calibrate_c_tilde, iterate_to_fixed_point, thresholds_from

grid = build_grid(2, 65)
one = sample(grid, "one")

for lam in (1e-4, 1e6):
    d = ProblemData(one, one, lam, 1e-4, Exponents(2, 2, 2, 2, 2))
    t = thresholds_from(d.exponents.pq, calibrate_c_tilde(d))
    rep = iterate_to_fixed_point(d, t).report
    print(f"lambda={lam:g}: C~={t.c_tilde:.4g}  Lambda*={t.lambda_star:.4g}  "
          f"-> {rep.verdict.value} after {rep.iterations} iterations")
    print("   ||grad v||_r:", ", ".join(f"{x:.3g}" for x in rep.grad_v_r()[-5:]))
