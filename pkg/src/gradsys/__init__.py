"""Numerical experiments for the coupled gradient system

    -Delta u = v^q + alpha g,   -Delta v = |grad u|^p + lambda f,

on the unit box with Dirichlet data: a fixed-point solver, the smallness
thresholds that guarantee existence, dual functionals bounding the
nonexistence thresholds, and a Navier bi-Laplacian reduction.
"""

from .exponents import Exponents, check_admissibility, choose_r
from .grid import ScalarField, build_grid, sample
from .poisson import solve_poisson
from .schauder import ProblemData, Verdict, iterate_to_fixed_point, thresholds_from

__all__ = [
    "Exponents",
    "check_admissibility",
    "choose_r",
    "ScalarField",
    "build_grid",
    "sample",
    "solve_poisson",
    "ProblemData",
    "Verdict",
    "iterate_to_fixed_point",
    "thresholds_from",
]

__version__ = "0.1.0"
