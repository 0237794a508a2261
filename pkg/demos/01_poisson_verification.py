"""Check the discrete Poisson solver before trusting anything built on it.

Two facts are checked: the five-point solver converges at second order on an
eigenfunction, and the torsion function of the unit square matches its
Fourier series at the center.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from oracles import torsion_center_series  # noqa: E402

from gradsys.grid import build_grid, sample
from gradsys.poisson import convergence_order, solve_poisson

# -Delta(sin pi x sin pi y) = 2 pi^2 sin pi x sin pi y, so the exact solution is known
rhs = (lambda x, y: 2 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y), "sinprod")
order = convergence_order(rhs, [17, 33, 65, 129])
print(f"observed order on the eigenfunction: {order:.3f}")

exact = torsion_center_series(400)
for n in (33, 65, 129):
    z = solve_poisson(sample(build_grid(2, n), "one")).solution
    c = z.values[n // 2, n // 2]
    print(f"n={n:4d}  torsion center {c:.8f}  error {abs(c - exact):.2e}")
print(f"series value       {exact:.8f}")
