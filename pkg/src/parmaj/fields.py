"""Interval domains, space-time boxes, and piecewise-smooth field abstractions.

All field callables are vectorized: they accept numpy arrays (or scalars) for
``x`` and ``t`` of a common broadcastable shape and return an ndarray.  A field
carries a :class:`RegionDecomposition` listing the level functions whose zero
sets are its non-smoothness curves; the adaptive quadrature uses these to place
integration breakpoints.  Fields without a stored derivative raise
:class:`MissingDerivativeError` from the accessor instead of returning garbage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class FieldError(Exception):
    """Base class for field construction/evaluation errors."""


class MissingDerivativeError(FieldError):
    """A derivative accessor was called on a field that does not carry it."""


def positive_part(s):
    """Pointwise max(0, s); the {.}_+ operator used by the residual filters."""
    return np.maximum(s, 0.0)


@dataclass(frozen=True)
class IntervalDomain:
    """Open interval (a, b) hosting the spatial problem."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b, got ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x, margin: float = 0.0):
        return (np.asarray(x) >= self.a - margin) & (np.asarray(x) <= self.b + margin)


@dataclass(frozen=True)
class SpaceTimeBox:
    """Space-time cylinder domain x (0, horizon)."""

    domain: IntervalDomain
    horizon: float

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")


def friedrichs_constant(domain: IntervalDomain) -> float:
    """Constant C in ||w|| <= C ||w'|| for w vanishing at both endpoints.

    Equals L/pi on an interval of length L (reciprocal square root of the
    first Dirichlet eigenvalue of -d^2/dx^2).
    """
    return domain.length / math.pi


@dataclass(frozen=True)
class BreakCurve:
    """Named level function psi(x, t); its zero set is a breakpoint curve."""

    name: str
    fn: Callable

    def __call__(self, x, t):
        return self.fn(x, t)


@dataclass(frozen=True)
class RegionDecomposition:
    """Collection of breakpoint curves splitting Q_T into smooth regions.

    The regions are the sign cells of the listed level functions; they cover
    the box up to the measure-zero zero sets and have disjoint interiors.
    """

    curves: tuple[BreakCurve, ...] = ()

    @staticmethod
    def of(*named: tuple[str, Callable]) -> "RegionDecomposition":
        return RegionDecomposition(tuple(BreakCurve(n, f) for n, f in named))

    def union(self, *others: "RegionDecomposition") -> "RegionDecomposition":
        seen = {c.name: c for c in self.curves}
        for other in others:
            for c in other.curves:
                seen.setdefault(c.name, c)
        return RegionDecomposition(tuple(seen.values()))


EMPTY_REGIONS = RegionDecomposition()


class SpaceTimeField:
    """Scalar function on Q_T with optional spatial gradient and time derivative.

    Parameters
    ----------
    value, grad_x, d_t : callables (x, t) -> ndarray
        Vectorized evaluators; ``grad_x``/``d_t`` may be None.
    regions : RegionDecomposition
        Breakpoint curves of the field and its derivatives.
    x_knots, t_knots : tuple of float
        Axis-aligned breakpoints (grid nodes, time partition nodes); quadrature
        aligns base cell edges with them.
    """

    def __init__(self, value, grad_x=None, d_t=None, regions=EMPTY_REGIONS,
                 x_knots=(), t_knots=(), name=""):
        self._value = value
        self._grad_x = grad_x
        self._d_t = d_t
        self.regions = regions
        self.x_knots = tuple(x_knots)
        self.t_knots = tuple(t_knots)
        self.name = name

    @property
    def has_grad(self) -> bool:
        return self._grad_x is not None

    @property
    def has_dt(self) -> bool:
        return self._d_t is not None

    def value(self, x, t):
        return self._value(x, t)

    def grad_x(self, x, t):
        if self._grad_x is None:
            raise MissingDerivativeError(
                f"field {self.name!r} carries no spatial gradient")
        return self._grad_x(x, t)

    def d_t(self, x, t):
        if self._d_t is None:
            raise MissingDerivativeError(
                f"field {self.name!r} carries no time derivative")
        return self._d_t(x, t)


class FluxField:
    """Flux (n = 1: scalar) on Q_T with spatial divergence."""

    def __init__(self, value, div=None, regions=EMPTY_REGIONS,
                 x_knots=(), t_knots=(), name=""):
        self._value = value
        self._div = div
        self.regions = regions
        self.x_knots = tuple(x_knots)
        self.t_knots = tuple(t_knots)
        self.name = name

    @property
    def has_div(self) -> bool:
        return self._div is not None

    def value(self, x, t):
        return self._value(x, t)

    def div(self, x, t):
        if self._div is None:
            raise MissingDerivativeError(
                f"flux {self.name!r} carries no divergence")
        return self._div(x, t)


class SpatialField:
    """Scalar function of x with optional derivative and breakpoint knots.

    ``knots`` are axis positions where the field (or its derivative) is
    non-smooth; ``curves`` are additional level functions psi(x) whose roots
    are breakpoints not known in closed form (e.g. slab-averaged sources).
    """

    def __init__(self, value, grad=None, knots=(), curves=(), name=""):
        self._value = value
        self._grad = grad
        self.knots = tuple(knots)
        self.curves = tuple(curves)
        self.name = name

    @property
    def has_grad(self) -> bool:
        return self._grad is not None

    def value(self, x):
        return self._value(x)

    def grad(self, x):
        if self._grad is None:
            raise MissingDerivativeError(
                f"spatial field {self.name!r} carries no derivative")
        return self._grad(x)

    def at_time(self, t0: float, d_t=None, regions=EMPTY_REGIONS) -> SpaceTimeField:
        """Lift to a time-constant space-time field (d_t = 0 unless given)."""
        return SpaceTimeField(
            value=lambda x, t: self.value(x),
            grad_x=(lambda x, t: self.grad(x)) if self.has_grad else None,
            d_t=d_t or (lambda x, t: np.zeros_like(np.asarray(x, dtype=float))),
            regions=regions, x_knots=self.knots, name=f"{self.name}@const")


def constant_spatial(c: float, name="const") -> SpatialField:
    return SpatialField(
        value=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        grad=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        name=name)


class NodalField(SpatialField):
    """Continuous piecewise-linear field from nodal values on a uniform grid.

    The gradient is the cellwise slope (constant per cell, jump at nodes).
    """

    def __init__(self, nodes, values, name="nodal"):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.size != values.size:
            raise ValueError("nodes/values must be matching 1-D arrays, len >= 2")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        self.nodes = nodes
        self.values = values
        self.slopes = np.diff(values) / np.diff(nodes)
        super().__init__(self._interp, self._cell_slope,
                         knots=tuple(nodes), name=name)

    def _interp(self, x):
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.values)

    def _cell_idx(self, x):
        idx = np.searchsorted(self.nodes, np.asarray(x, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.nodes.size - 2)

    def _cell_slope(self, x):
        return self.slopes[self._cell_idx(x)]


class SpatialFlux:
    """Spatial flux with divergence; the per-node sigma_k of a flux sequence."""

    def __init__(self, value, div=None, knots=(), name=""):
        self._value = value
        self._div = div
        self.knots = tuple(knots)
        self.name = name

    @property
    def has_div(self) -> bool:
        return self._div is not None

    def value(self, x):
        return self._value(x)

    def div(self, x):
        if self._div is None:
            raise MissingDerivativeError(
                f"spatial flux {self.name!r} carries no divergence")
        return self._div(x)


class NodalFlux(SpatialFlux):
    """Continuous piecewise-linear flux; divergence is the cellwise slope."""

    def __init__(self, nodes, values, name="nodal flux"):
        base = NodalField(nodes, values, name=name)
        self.nodes = base.nodes
        self.values = base.values
        super().__init__(base.value, base.grad, knots=tuple(base.nodes), name=name)
