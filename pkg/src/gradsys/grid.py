"""Uniform tensor grids on the unit box, nodal fields and discrete calculus.

All field computations in the package live on ``GridSpec`` objects: a
uniform grid of ``n`` nodes per axis on ``[0, 1]^dim`` with ``dim`` equal
to 1 or 2.  Integrals use the composite trapezoid rule, gradients use
centered differences (second-order one-sided at the boundary) and the
Laplacian is the standard ``2*dim + 1`` point stencil of ``-Delta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "build_grid",
    "sample",
    "integrate",
    "lp_norm",
    "gradient",
    "laplacian_apply",
    "dirichlet_inner",
    "w11_norm",
    "sine_modes",
]


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform grid on the unit box.

    Attributes
    ----------
    dim : int
        Spatial dimension (1 or 2).
    n_per_axis : tuple of int
        Node count per axis.
    spacing : tuple of float
        Mesh width per axis, ``1 / (n - 1)``.
    boundary_mask : ndarray of bool
        True exactly at nodes on the box boundary.
    """

    dim: int
    n_per_axis: tuple
    spacing: tuple
    boundary_mask: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple:
        return tuple(self.n_per_axis)

    @property
    def h(self) -> float:
        """Largest mesh width."""
        return max(self.spacing)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.n_per_axis))

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    def axes(self) -> list:
        return [np.linspace(0.0, 1.0, n) for n in self.n_per_axis]

    def coords(self) -> list:
        """Nodal coordinate arrays, one per axis, each of shape ``self.shape``."""
        return np.meshgrid(*self.axes(), indexing="ij")

    def weights(self) -> np.ndarray:
        """Composite trapezoid weights at every node."""
        w = np.ones(self.shape)
        for axis, (n, h) in enumerate(zip(self.n_per_axis, self.spacing)):
            w1 = np.full(n, h)
            w1[0] = w1[-1] = 0.5 * h
            shape = [1] * self.dim
            shape[axis] = n
            w = w * w1.reshape(shape)
        return w

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return self.dim == other.dim and self.n_per_axis == other.n_per_axis

    def __hash__(self):
        return hash((self.dim, self.n_per_axis))


class ScalarField:
    """Real nodal values on a grid.  Values are stored read-only."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values):
        values = np.array(values, dtype=float)
        if values.shape != grid.shape:
            values = values.reshape(grid.shape)
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"ScalarField(shape={self.grid.shape}, max={np.max(np.abs(self.values)):.3e})"

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def is_dirichlet(self) -> bool:
        return bool(np.all(self.values[self.grid.boundary_mask] == 0.0))

    def _lift(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._lift(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._lift(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __abs__(self):
        return ScalarField(self.grid, np.abs(self.values))

    def __pow__(self, s):
        return ScalarField(self.grid, self.values ** s)

    def positive_part(self) -> "ScalarField":
        return ScalarField(self.grid, np.maximum(self.values, 0.0))


class VectorField:
    """``grid.dim`` nodal components."""

    __slots__ = ("grid", "components")

    def __init__(self, grid: GridSpec, components: Sequence[np.ndarray]):
        components = tuple(np.asarray(c, dtype=float) for c in components)
        if len(components) != grid.dim:
            raise ValueError(f"expected {grid.dim} components, got {len(components)}")
        self.grid = grid
        self.components = components

    def magnitude(self) -> ScalarField:
        """Pointwise Euclidean length."""
        if self.grid.dim == 1:
            return ScalarField(self.grid, np.abs(self.components[0]))
        return ScalarField(self.grid, np.hypot(*self.components))

    def dot(self, other: "VectorField") -> ScalarField:
        return ScalarField(self.grid, sum(a * b for a, b in zip(self.components, other.components)))


def build_grid(dim: int, n: int) -> GridSpec:
    """Uniform grid with ``n`` nodes per axis on ``[0, 1]^dim``.

    >>> g = build_grid(2, 5)
    >>> g.n_nodes, g.spacing
    (25, (0.25, 0.25))
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if int(n) != n or n < 3:
        raise ValueError(f"need n >= 3 nodes per axis for an interior node, got {n}")
    n = int(n)
    shape = (n,) * dim
    mask = np.zeros(shape, dtype=bool)
    for axis in range(dim):
        idx = [slice(None)] * dim
        idx[axis] = 0
        mask[tuple(idx)] = True
        idx[axis] = -1
        mask[tuple(idx)] = True
    mask.setflags(write=False)
    h = 1.0 / (n - 1)
    return GridSpec(dim=dim, n_per_axis=shape, spacing=(h,) * dim, boundary_mask=mask)


Descriptor = Union[str, Callable]


def _parse_param(name: str, arg: str) -> float:
    try:
        return float(arg)
    except ValueError:
        raise ValueError(f"descriptor {name!r} needs a numeric parameter, got {arg!r}") from None


def sample(grid: GridSpec, expr: Descriptor) -> ScalarField:
    """Evaluate a catalog function (or a callable of the coordinates) at the nodes.

    Catalog keys: ``zero``, ``one``, ``sinprod``, ``sinprod_pow:k``,
    ``radial_pow:a``, ``gauss:s``, ``file:PATH``.  Radial functions are
    centered at the box center; for negative powers the distance is
    clamped below at ``h/2``.  ``gauss:s`` is ``exp(-|x-c|^2 / (2 s^2))``.
    """
    xs = grid.coords()
    if callable(expr):
        return ScalarField(grid, np.broadcast_to(expr(*xs), grid.shape))
    if not isinstance(expr, str):
        raise TypeError(f"descriptor must be a string or callable, got {type(expr).__name__}")

    name, _, arg = expr.partition(":")
    if name == "zero":
        vals = np.zeros(grid.shape)
    elif name == "one":
        vals = np.ones(grid.shape)
    elif name == "sinprod":
        vals = np.prod([np.sin(np.pi * x) for x in xs], axis=0)
    elif name == "sinprod_pow":
        k = _parse_param(name, arg)
        vals = np.prod([np.sin(np.pi * x) for x in xs], axis=0)
        vals = np.abs(vals) ** k
    elif name == "radial_pow":
        a = _parse_param(name, arg)
        r = np.sqrt(sum((x - 0.5) ** 2 for x in xs))
        if a < 0:
            r = np.maximum(r, 0.5 * grid.h)
        vals = r ** a
    elif name == "gauss":
        s = _parse_param(name, arg)
        if s <= 0:
            raise ValueError(f"gauss width must be positive, got {s}")
        r2 = sum((x - 0.5) ** 2 for x in xs)
        vals = np.exp(-r2 / (2.0 * s * s))
    elif name == "file":
        if not arg:
            raise ValueError("file descriptor needs a path")
        data = np.loadtxt(Path(arg), dtype=float, ndmin=1).ravel()
        if data.size != grid.n_nodes:
            raise ValueError(f"{arg}: expected {grid.n_nodes} values, found {data.size}")
        vals = data.reshape(grid.shape)
    else:
        raise ValueError(f"unknown function descriptor {expr!r}")
    if name.startswith("sinprod"):
        # sin(pi) is not exactly zero in floating point
        vals[grid.boundary_mask] = 0.0
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"descriptor {expr!r} is not finite at every node")
    return ScalarField(grid, vals)


def integrate(f: ScalarField) -> float:
    """Composite trapezoid approximation of the integral over the unit box."""
    return float(np.sum(f.grid.weights() * f.values))


def lp_norm(f: ScalarField, s: float) -> float:
    """Discrete ``L^s`` norm; ``s = inf`` gives the max norm.

    The field is rescaled by its max before powering so large ``s`` or
    large values do not overflow.
    """
    if not s >= 1:
        raise ValueError(f"L^s norm needs s >= 1, got {s}")
    a = np.abs(f.values)
    top = float(np.max(a))
    if top == 0.0 or not np.isfinite(top) or np.isinf(s):
        return top
    return top * float(np.sum(f.grid.weights() * (a / top) ** s)) ** (1.0 / s)


def gradient(f: ScalarField) -> VectorField:
    """Centered differences inside, second-order one-sided at the boundary."""
    grid = f.grid
    if grid.dim == 1:
        comps = [np.gradient(f.values, grid.spacing[0], edge_order=2)]
    else:
        comps = np.gradient(f.values, *grid.spacing, edge_order=2)
    return VectorField(grid, comps)


def _neg_laplacian_interior(v: np.ndarray, spacing) -> np.ndarray:
    out = np.zeros_like(v)
    dim = v.ndim
    core = (slice(1, -1),) * dim
    for axis, h in enumerate(spacing):
        lo = list(core)
        hi = list(core)
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        out[core] += (2.0 * v[core] - v[tuple(lo)] - v[tuple(hi)]) / (h * h)
    return out


def laplacian_apply(f: ScalarField) -> ScalarField:
    """``-Delta`` by the ``2*dim + 1`` point stencil; boundary rows return the field value."""
    out = _neg_laplacian_interior(f.values, f.grid.spacing)
    mask = f.grid.boundary_mask
    out[mask] = f.values[mask]
    return ScalarField(f.grid, out)


def dirichlet_inner(phi: ScalarField, u: ScalarField) -> float:
    """Discrete ``int grad(phi) . grad(u)`` built from edge differences.

    For ``phi`` vanishing on the boundary this equals
    ``integrate(phi * laplacian_apply(u))`` exactly, so it is the weak form
    that matches the stencil.
    """
    grid = phi.grid
    cell = float(np.prod(grid.spacing))
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        dphi = np.diff(phi.values, axis=axis)
        du = np.diff(u.values, axis=axis)
        total += float(np.sum(dphi * du)) / (h * h)
    return cell * total


def w11_norm(f: ScalarField) -> float:
    """``||f||_1 + || |grad f| ||_1``."""
    return lp_norm(abs(f), 1) + lp_norm(gradient(f).magnitude(), 1)


def sine_modes(grid: GridSpec, k_max: int = 5) -> list:
    """Dirichlet sine modes ``prod_i sin(j_i pi x_i)`` with ``1 <= j_i <= k_max``."""
    xs = grid.axes()
    for x in xs:
        x[-1] = 0.0  # sin(j pi) -> exact zero below
    out = []
    if grid.dim == 1:
        for j in range(1, k_max + 1):
            out.append(ScalarField(grid, np.sin(j * np.pi * xs[0])))
    else:
        for j in range(1, k_max + 1):
            sx = np.sin(j * np.pi * xs[0])
            for k in range(1, k_max + 1):
                sy = np.sin(k * np.pi * xs[1])
                out.append(ScalarField(grid, np.outer(sx, sy)))
    return out
