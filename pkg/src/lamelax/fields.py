"""Closed-form and grid-sampled fields behind one arithmetic interface.

Formulas elsewhere in the package are written once against this module's
generic helpers (``partial``, ``fsqrt``, ``values_on``) and run unchanged on
either backend: a ``ClosedForm`` field differentiates exactly, a
``GridSampled`` field differentiates with second-order finite differences.
Plain Python numbers are accepted wherever a field is, and act as
constant fields.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Union

import numpy as np

from .errors import DivisionByZero, PoleOnGrid
from .expr import LAMBDA, Const, Expr, as_expr, coord, diff, evaluate, principal_sqrt, sqrt, to_text

Number = Union[int, float, complex]


@dataclass(frozen=True)
class GridSpec:
    """Rectangular tensor-product grid; ``axes`` holds (lower, upper, nodes)."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(n)) for lo, hi, n in self.axes)
        for lo, hi, n in axes:
            if not hi > lo:
                raise ValueError(f"axis upper bound {hi} must exceed lower bound {lo}")
            if n < 2:
                raise ValueError(f"axis needs at least 2 nodes, got {n}")
        object.__setattr__(self, "axes", axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(n for _, _, n in self.axes)

    def spacing(self, axis: int) -> float:
        lo, hi, n = self.axes[axis]
        return (hi - lo) / (n - 1)

    def nodes(self, axis: int) -> np.ndarray:
        lo, hi, n = self.axes[axis]
        return np.linspace(lo, hi, n)

    def mesh(self) -> list:
        return np.meshgrid(*(self.nodes(a) for a in range(self.ndim)), indexing="ij")

    def env(self, lam=None) -> dict:
        env = {coord(a).name: m for a, m in enumerate(self.mesh())}
        if lam is not None:
            env[LAMBDA.name] = lam
        return env

    def point(self, index) -> tuple:
        return tuple(float(self.nodes(a)[i]) for a, i in enumerate(index))

    def with_nodes(self, count: int) -> "GridSpec":
        return GridSpec(tuple((lo, hi, count) for lo, hi, _ in self.axes))

    def refined(self) -> "GridSpec":
        """Same box with every spacing halved."""
        return GridSpec(tuple((lo, hi, 2 * n - 1) for lo, hi, n in self.axes))


class Field:
    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binop(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binop(other, lambda a, b: b * a)

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: b / a)

    def __neg__(self):
        return self._binop(-1, lambda a, b: a * b)


@dataclass(frozen=True, eq=False)
class ClosedForm(Field):
    expr: Expr

    def _binop(self, other, op):
        if isinstance(other, ClosedForm):
            return ClosedForm(op(self.expr, other.expr))
        if isinstance(other, (int, float, complex)):
            return ClosedForm(op(self.expr, as_expr(other)))
        return NotImplemented if not isinstance(other, Field) else _mixed(self, other)

    def partial(self, axis: int) -> "ClosedForm":
        return ClosedForm(diff(self.expr, coord(axis)))

    def __repr__(self):
        try:
            return f"ClosedForm({to_text(self.expr)})"
        except ValueError:
            return f"ClosedForm({self.expr!r})"


@dataclass(frozen=True, eq=False)
class GridSampled(Field):
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ValueError(f"sample shape {values.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", values)

    def _binop(self, other, op):
        if isinstance(other, GridSampled):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            other = other.values
        elif isinstance(other, Field):
            return _mixed(self, other)
        elif not isinstance(other, (int, float, complex)):
            return NotImplemented
        with np.errstate(all="ignore"):
            out = op(self.values, other)
        if not np.all(np.isfinite(out)):
            raise PoleOnGrid("division by zero on grid")
        return GridSampled(self.grid, out)

    def partial(self, axis: int) -> "GridSampled":
        return fd_partial(self, axis)


def _mixed(a, b):
    raise TypeError(f"cannot combine {type(a).__name__} with {type(b).__name__}")


def sample(f, grid: GridSpec, lam=None) -> GridSampled:
    """Evaluate a closed-form field at every node of ``grid``."""
    if isinstance(f, ClosedForm):
        return GridSampled(grid, values_on(f, grid, lam))
    if isinstance(f, Expr):
        return GridSampled(grid, values_on(ClosedForm(f), grid, lam))
    return GridSampled(grid, np.full(grid.shape, complex(f)))


def fd_partial(f: GridSampled, axis: int) -> GridSampled:
    """Second-order central differences at every node, including the ends.

    The value one step outside the box is extrapolated with a polynomial
    through up to six boundary nodes, so boundary nodes carry the same
    leading error (h^2/6) f''' as interior ones.  With one-sided end
    stencils the error jumps at the boundary, and a difference of a
    derived field (e.g. of beta, itself a difference) drops to first order
    there.
    """
    n = f.grid.shape[axis]
    if n < 3:
        raise ValueError("finite differences need at least 3 nodes along the axis")
    m = min(6, n)
    weights = np.array([comb(m, j + 1) * (-1) ** j for j in range(m)], dtype=float)
    v = np.moveaxis(f.values, axis, 0)
    lo = np.tensordot(weights, v[:m], axes=1)
    hi = np.tensordot(weights, v[::-1][:m], axes=1)
    padded = np.concatenate([lo[None], v, hi[None]])
    d = (padded[2:] - padded[:-2]) / (2 * f.grid.spacing(axis))
    return GridSampled(f.grid, np.moveaxis(d, 0, axis))


def values_on(x, grid: GridSpec, lam=None) -> np.ndarray:
    """Complex array of shape ``grid.shape`` holding ``x`` at every node."""
    if isinstance(x, GridSampled):
        if x.grid != grid:
            raise ValueError("field sampled on a different grid")
        return x.values
    if isinstance(x, ClosedForm):
        try:
            out = evaluate(x.expr, grid.env(lam))
        except DivisionByZero:
            raise PoleOnGrid(_locate_pole(x.expr, grid, lam)) from None
        return np.broadcast_to(np.asarray(out, dtype=complex), grid.shape).copy()
    return np.full(grid.shape, complex(x))


def _locate_pole(e: Expr, grid: GridSpec, lam) -> str:
    for index in itertools.product(*(range(n) for n in grid.shape)):
        env = {coord(a).name: v for a, v in enumerate(grid.point(index))}
        if lam is not None:
            env[LAMBDA.name] = lam
        try:
            evaluate(e, env)
        except DivisionByZero:
            return f"pole at node {fmt_point(grid.point(index))}"
    return "pole on grid"


def partial(x, axis: int):
    if isinstance(x, Field):
        return x.partial(axis)
    return 0


def fsqrt(x):
    """Principal square root of a field or number."""
    if isinstance(x, ClosedForm):
        return ClosedForm(sqrt(x.expr))
    if isinstance(x, GridSampled):
        return GridSampled(x.grid, principal_sqrt(x.values))
    return complex(principal_sqrt(complex(x)))


def is_zero(x) -> bool:
    if isinstance(x, ClosedForm):
        return isinstance(x.expr, Const) and x.expr.value == 0
    if isinstance(x, GridSampled):
        return bool(np.all(x.values == 0))
    return x == 0


def fmt_point(p) -> str:
    return "(" + ",".join(f"{float(c):.6g}" for c in p) + ")"


class SymbolicBackend:
    """Exact differentiation; fields stay closed-form until evaluated."""

    name = "symbolic"

    def lift(self, e) -> ClosedForm:
        return ClosedForm(as_expr(e))

    @property
    def lam(self) -> ClosedForm:
        return ClosedForm(LAMBDA)

    def at(self, lam) -> "SymbolicBackend":
        return self


class FDBackend:
    """Fields sampled on ``grid`` (at a fixed spectral parameter, if any)."""

    name = "fd"

    def __init__(self, grid: GridSpec, lam=None):
        self.grid = grid
        self._lam = lam

    def lift(self, e) -> GridSampled:
        return sample(as_expr(e), self.grid, self._lam)

    @property
    def fixed_lam(self):
        return self._lam

    @property
    def lam(self):
        if self._lam is None:
            raise ValueError("finite-difference backend was built without a spectral parameter")
        return complex(self._lam)

    def at(self, lam) -> "FDBackend":
        return FDBackend(self.grid, lam)


def make_backend(name: str, grid: GridSpec):
    if name == "symbolic":
        return SymbolicBackend()
    if name == "fd":
        return FDBackend(grid)
    raise ValueError(f"unknown backend {name!r} (expected 'symbolic' or 'fd')")
