"""Upper bounds on the existence thresholds, and a functional that degenerates.

Each member of a small test-function family gives an upper bound on
lambda* and alpha*; the smallest one wins.  The second part follows the
radial witness: as the inner cutoff shrinks the numerator settles while the
denominator grows like log(1/delta), so the ratio drifts toward zero.
"""

from gradsys.grid import build_grid, sample
from gradsys.thresholds import (
    WitnessParams,
    alpha_star_upper,
    default_family,
    lambda_star_upper,
    witness_divergence_study,
)

grid = build_grid(2, 65)
one = sample(grid, "one")
family = default_family(grid)
print(f"lambda* (f = 1)          <= {lambda_star_upper(one, family, 2, 2):.4g}")
print(f"alpha*  (g = gauss:0.25) <= {alpha_star_upper(sample(grid, 'gauss:0.25'), family, 2, 2):.4g}")

study = witness_divergence_study(WitnessParams(7, 2, 0.5, 3), [2.0 ** -k for k in range(3, 11)])
print(f"{'delta':>10} {'numerator':>12} {'denominator':>12} {'ratio':>10}")
for d, a, b, r in zip(study.cutoffs, study.numerators, study.denominators, study.ratios):
    print(f"{d:10.3e} {a:12.6g} {b:12.6g} {r:10.5g}")
