"""Breakpoint-aware adaptive Gauss quadrature on intervals and space-time boxes.

The integrands of interest are piecewise smooth: kinks and jumps sit on the
zero sets of declared level functions ("breakpoint curves").  Base cells are
tensor-product Gauss-Legendre (3 points per axis).  Cells crossed by a curve
are integrated with a root-resolved slice rule: along each Gauss line the
crossing points are located by bisection and the line is integrated piecewise,
so region switches never fall inside a Gauss panel.  Cut cells are then
recursively subdivided until two successive total estimates agree to the
requested relative tolerance; non-convergence raises :class:`QuadratureError`
carrying the last two estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fields import IntervalDomain, SpaceTimeBox, SpaceTimeField, SpatialField

_GP3, _GW3 = np.polynomial.legendre.leggauss(3)
_GP7, _GW7 = np.polynomial.legendre.leggauss(7)
_NSAMPLE = 9          # per-axis samples used to bracket curve crossings
_BISECT_ITERS = 60


class QuadratureError(Exception):
    """Adaptive refinement failed to converge; carries the last two estimates."""

    def __init__(self, previous: float, last: float, message: str = ""):
        self.previous = previous
        self.last = last
        super().__init__(
            message or f"quadrature did not converge: last estimates "
                       f"{previous!r} -> {last!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and cell counts for the adaptive rules.

    ``tol`` is the relative tolerance on successive refinement estimates;
    ``abs_floor`` is the absolute slack that lets exactly-zero integrals and
    roundoff-level differences count as converged.
    """

    base_cells: int = 64
    refine_factor: int = 2
    tol: float = 1e-6
    max_levels: int = 12
    abs_floor: float = 1e-14

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.base_cells < 2:
            raise ValueError("base_cells must be at least 2")
        if self.max_levels < 1:
            raise ValueError("max_levels must be at least 1")
        if self.refine_factor < 2:
            raise ValueError("refine_factor must be at least 2")


@dataclass(frozen=True)
class Integrand2D:
    """A bare space-time integrand plus its non-smoothness metadata."""

    fn: Callable
    curves: tuple = ()
    x_knots: tuple = ()
    t_knots: tuple = ()


def _edges(a: float, b: float, n_cells: int, knots: Sequence[float]) -> np.ndarray:
    e = np.linspace(a, b, n_cells + 1)
    interior = [k for k in knots if a < k < b]
    if interior:
        e = np.union1d(e, np.asarray(interior, dtype=float))
        keep = np.concatenate([[True], np.diff(e) > 1e-12 * (b - a)])
        keep[-1] = True
        e = e[keep]
        if e[-1] - e[-2] <= 1e-12 * (b - a):
            e = np.delete(e, -2)
    return e


def _pad_groups(values: np.ndarray, group_ids: np.ndarray, n_groups: int,
                fill: float) -> np.ndarray:
    """Scatter flat (group, value) pairs into a (n_groups, K) padded array."""
    counts = np.bincount(group_ids, minlength=n_groups)
    width = int(counts.max()) if counts.size else 0
    if width == 0:
        return np.full((n_groups, 1), fill)
    out = np.full((n_groups, width), fill)
    order = np.argsort(group_ids, kind="stable")
    g = group_ids[order]
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pos = np.arange(g.size) - starts[g]
    out[g, pos] = values[order]
    return out


# ---------------------------------------------------------------------------
# 1-D engine
# ---------------------------------------------------------------------------

def _full(values, shape):
    """Broadcast an evaluation to the lattice shape (curves or integrands may
    ignore an argument, collapsing axes)."""
    return np.broadcast_to(np.asarray(values, dtype=float), shape)


def _gauss_cells_1d(fn, lo, hi):
    half = 0.5 * (hi - lo)
    xs = lo[:, None] + (_GP3[None, :] + 1.0) * half[:, None]
    return half * (_full(fn(xs), xs.shape) @ _GW3)


def _detect_cut_1d(curves, lo, hi):
    if not curves:
        return np.zeros(lo.shape, dtype=bool)
    fr = np.linspace(0.0, 1.0, _NSAMPLE)
    xs = lo[:, None] + fr[None, :] * (hi - lo)[:, None]
    cut = np.zeros(lo.shape, dtype=bool)
    for c in curves:
        v = _full(c(xs), xs.shape)
        cut |= (v.min(axis=1) < 0.0) & (v.max(axis=1) > 0.0)
    return cut


def _bisect_1d(c, lo, hi):
    flo = np.asarray(c(lo), dtype=float)
    a, b = lo.copy(), hi.copy()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (a + b)
        fm = np.asarray(c(mid), dtype=float)
        left = flo * fm > 0.0
        a = np.where(left, mid, a)
        flo = np.where(left, fm, flo)
        b = np.where(left, b, mid)
    return 0.5 * (a + b)


def _sliced_cells_1d(fn, curves, lo, hi):
    """Integrate cut cells by splitting each at the curve crossings."""
    n = lo.size
    if n == 0:
        return 0.0
    fr = np.linspace(0.0, 1.0, _NSAMPLE)
    xs = lo[:, None] + fr[None, :] * (hi - lo)[:, None]
    cell_ids = []
    roots = []
    for c in curves:
        v = _full(c(xs), xs.shape)
        br = v[:, :-1] * v[:, 1:] < 0.0
        idx, jdx = np.nonzero(br)
        if idx.size:
            cell_ids.append(idx)
            roots.append(_bisect_1d(c, xs[idx, jdx], xs[idx, jdx + 1]))
    if cell_ids:
        flat_ids = np.concatenate(cell_ids)
        flat_roots = np.concatenate(roots)
        padded = _pad_groups(flat_roots, flat_ids, n, np.inf)
        padded = np.sort(padded, axis=1)
        padded = np.clip(padded, lo[:, None], hi[:, None])
    else:
        padded = np.full((n, 1), np.inf)
        padded = np.minimum(padded, hi[:, None])
    edges = np.concatenate([lo[:, None], padded, hi[:, None]], axis=1)
    seg_lo, seg_hi = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (seg_hi - seg_lo)
    pts = seg_lo[..., None] + (_GP3 + 1.0) * half[..., None]
    vals = _full(fn(pts), pts.shape)
    return float(np.sum(vals * (half[..., None] * _GW3)))


def integrate_interval(fn, a: float, b: float, cfg: QuadratureConfig,
                       curves: Sequence[Callable] = (),
                       knots: Sequence[float] = ()) -> float:
    """Adaptive integral of ``fn`` over (a, b) with declared breakpoints."""
    edges = _edges(a, b, cfg.base_cells, knots)
    lo, hi = edges[:-1], edges[1:]
    cut = _detect_cut_1d(curves, lo, hi)
    smooth = float(np.sum(_gauss_cells_1d(fn, lo[~cut], hi[~cut]))) if np.any(~cut) else 0.0
    active_lo, active_hi = lo[cut], hi[cut]
    resolved = 0.0
    prev = None
    for level in range(cfg.max_levels + 1):
        total = smooth + resolved + _sliced_cells_1d(fn, curves, active_lo, active_hi)
        if prev is not None and abs(total - prev) <= max(cfg.tol * abs(total), cfg.abs_floor):
            return total
        if active_lo.size == 0:
            return total
        if level == cfg.max_levels:
            raise QuadratureError(prev if prev is not None else math.nan, total)
        prev = total
        r = cfg.refine_factor
        width = (active_hi - active_lo) / r
        base = active_lo[:, None] + np.arange(r)[None, :] * width[:, None]
        child_lo = base.ravel()
        child_hi = (base + width[:, None]).ravel()
        child_cut = _detect_cut_1d(curves, child_lo, child_hi)
        if np.any(~child_cut):
            resolved += float(np.sum(
                _gauss_cells_1d(fn, child_lo[~child_cut], child_hi[~child_cut])))
        active_lo, active_hi = child_lo[child_cut], child_hi[child_cut]
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# 2-D engine
# ---------------------------------------------------------------------------

def _gauss_cells_2d(fn, cells):
    x0, x1, t0, t1 = cells
    hx = 0.5 * (x1 - x0)
    ht = 0.5 * (t1 - t0)
    xs = x0[:, None] + (_GP3 + 1.0) * hx[:, None]
    ts = t0[:, None] + (_GP3 + 1.0) * ht[:, None]
    vals = _full(fn(xs[:, :, None], ts[:, None, :]), (x0.size, 3, 3))
    w = _GW3[:, None] * _GW3[None, :]
    return (hx * ht) * np.einsum("nij,ij->n", vals, w)


def _detect_cut_2d(curves, cells):
    x0, x1, t0, t1 = cells
    n = x0.size
    if not curves or n == 0:
        return np.zeros(n, dtype=bool)
    fr = np.linspace(0.0, 1.0, 4)
    xs = x0[:, None] + fr[None, :] * (x1 - x0)[:, None]
    ts = t0[:, None] + fr[None, :] * (t1 - t0)[:, None]
    cut = np.zeros(n, dtype=bool)
    for c in curves:
        v = _full(c(xs[:, :, None], ts[:, None, :]), (n, 4, 4)).reshape(n, -1)
        cut |= (v.min(axis=1) < 0.0) & (v.max(axis=1) > 0.0)
    return cut


def _bisect_2d(c, lo, hi, tline):
    flo = np.asarray(c(lo, tline), dtype=float)
    a, b = lo.copy(), hi.copy()
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (a + b)
        fm = np.asarray(c(mid, tline), dtype=float)
        left = flo * fm > 0.0
        a = np.where(left, mid, a)
        flo = np.where(left, fm, flo)
        b = np.where(left, b, mid)
    return 0.5 * (a + b)


def _sliced_cells_2d(fn, curves, cells):
    """Integrate cut cells: x-root-resolved Gauss along the 3 t-Gauss lines.

    Cells where no x-crossing is found on any line (curve nearly parallel to
    the x axis) are retried with the axes transposed.
    """
    x0, x1, t0, t1 = cells
    n = x0.size
    if n == 0:
        return 0.0
    ht = 0.5 * (t1 - t0)
    tg = t0[:, None] + (_GP3 + 1.0) * ht[:, None]          # (n, 3)
    fr = np.linspace(0.0, 1.0, _NSAMPLE)
    xs = x0[:, None] + fr[None, :] * (x1 - x0)[:, None]    # (n, S)

    line_ids = []
    roots = []
    for c in curves:
        v = _full(c(xs[:, None, :], tg[:, :, None]), (n, 3, _NSAMPLE))
        br = v[:, :, :-1] * v[:, :, 1:] < 0.0
        idx, ldx, jdx = np.nonzero(br)
        if idx.size:
            line_ids.append(idx * 3 + ldx)
            roots.append(_bisect_2d(c, xs[idx, jdx], xs[idx, jdx + 1], tg[idx, ldx]))

    found = np.zeros(n, dtype=bool)
    if line_ids:
        flat_ids = np.concatenate(line_ids)
        flat_roots = np.concatenate(roots)
        found[flat_ids // 3] = True
        padded = _pad_groups(flat_roots, flat_ids, 3 * n, np.inf).reshape(n, 3, -1)
        padded = np.sort(padded, axis=2)
        padded = np.clip(padded, x0[:, None, None], x1[:, None, None])
    else:
        padded = np.minimum(np.full((n, 3, 1), np.inf), x1[:, None, None])

    edges = np.concatenate(
        [np.broadcast_to(x0[:, None, None], (n, 3, 1)), padded,
         np.broadcast_to(x1[:, None, None], (n, 3, 1))], axis=2)
    seg_lo, seg_hi = edges[:, :, :-1], edges[:, :, 1:]
    half = 0.5 * (seg_hi - seg_lo)
    pts = seg_lo[..., None] + (_GP3 + 1.0) * half[..., None]     # (n,3,K,3)
    vals = _full(fn(pts, tg[:, :, None, None]), pts.shape)
    line_integral = np.einsum("nlkg,nlkg->nl", vals, half[..., None] * _GW3)
    cell_vals = ht * (line_integral @ _GW3)

    total = float(np.sum(cell_vals[found]))
    missed = ~found
    if np.any(missed):
        sub = tuple(arr[missed] for arr in cells)
        total += _sliced_transposed(fn, curves, sub)
    return total


def _sliced_transposed(fn, curves, cells):
    x0, x1, t0, t1 = cells
    fn_t = lambda t, x: fn(x, t)
    curves_t = [lambda t, x, _c=c: _c(x, t) for c in curves]
    n = x0.size
    hx = 0.5 * (x1 - x0)
    xg = x0[:, None] + (_GP3 + 1.0) * hx[:, None]
    fr = np.linspace(0.0, 1.0, _NSAMPLE)
    ts = t0[:, None] + fr[None, :] * (t1 - t0)[:, None]

    line_ids = []
    roots = []
    for c in curves_t:
        v = _full(c(ts[:, None, :], xg[:, :, None]), (n, 3, _NSAMPLE))
        br = v[:, :, :-1] * v[:, :, 1:] < 0.0
        idx, ldx, jdx = np.nonzero(br)
        if idx.size:
            line_ids.append(idx * 3 + ldx)
            roots.append(_bisect_2d(c, ts[idx, jdx], ts[idx, jdx + 1], xg[idx, ldx]))
    if line_ids:
        flat_ids = np.concatenate(line_ids)
        flat_roots = np.concatenate(roots)
        padded = _pad_groups(flat_roots, flat_ids, 3 * n, np.inf).reshape(n, 3, -1)
        padded = np.sort(padded, axis=2)
        padded = np.clip(padded, t0[:, None, None], t1[:, None, None])
    else:
        padded = np.minimum(np.full((n, 3, 1), np.inf), t1[:, None, None])
    edges = np.concatenate(
        [np.broadcast_to(t0[:, None, None], (n, 3, 1)), padded,
         np.broadcast_to(t1[:, None, None], (n, 3, 1))], axis=2)
    seg_lo, seg_hi = edges[:, :, :-1], edges[:, :, 1:]
    half = 0.5 * (seg_hi - seg_lo)
    pts = seg_lo[..., None] + (_GP3 + 1.0) * half[..., None]
    vals = _full(fn_t(pts, xg[:, :, None, None]), pts.shape)
    line_integral = np.einsum("nlkg,nlkg->nl", vals, half[..., None] * _GW3)
    return float(np.sum(hx * (line_integral @ _GW3)))


def _subdivide_2d(cells, r):
    x0, x1, t0, t1 = cells
    wx = (x1 - x0) / r
    wt = (t1 - t0) / r
    ox = np.arange(r)
    cx0 = (x0[:, None] + ox[None, :] * wx[:, None])[:, :, None]
    ct0 = (t0[:, None] + ox[None, :] * wt[:, None])[:, None, :]
    shape = (x0.size, r, r)
    nx0 = np.broadcast_to(cx0, shape).ravel()
    nt0 = np.broadcast_to(ct0, shape).ravel()
    nwx = np.repeat(wx, r * r)
    nwt = np.repeat(wt, r * r)
    return nx0, nx0 + nwx, nt0, nt0 + nwt


def integrate_box(fn, box: SpaceTimeBox, cfg: QuadratureConfig,
                  curves: Sequence[Callable] = (),
                  x_knots: Sequence[float] = (),
                  t_knots: Sequence[float] = (),
                  t0: float = 0.0) -> float:
    """Adaptive integral of ``fn(x, t)`` over the box (or a time slab of it)."""
    if not t0 < box.horizon:
        raise ValueError(f"t0 = {t0} must lie below the horizon {box.horizon}")
    xe = _edges(box.domain.a, box.domain.b, cfg.base_cells, x_knots)
    te = _edges(t0, box.horizon, cfg.base_cells, t_knots)
    X0, T0 = np.meshgrid(xe[:-1], te[:-1], indexing="ij")
    X1, T1 = np.meshgrid(xe[1:], te[1:], indexing="ij")
    cells = (X0.ravel(), X1.ravel(), T0.ravel(), T1.ravel())
    cut = _detect_cut_2d(curves, cells)
    keep = ~cut
    smooth = float(np.sum(_gauss_cells_2d(fn, tuple(a[keep] for a in cells)))) \
        if np.any(keep) else 0.0
    active = tuple(a[cut] for a in cells)
    resolved = 0.0
    prev = None
    for level in range(cfg.max_levels + 1):
        total = smooth + resolved + _sliced_cells_2d(fn, curves, active)
        if prev is not None and abs(total - prev) <= max(cfg.tol * abs(total), cfg.abs_floor):
            return total
        if active[0].size == 0:
            return total
        if level == cfg.max_levels:
            raise QuadratureError(prev if prev is not None else math.nan, total)
        prev = total
        children = _subdivide_2d(active, cfg.refine_factor)
        child_cut = _detect_cut_2d(curves, children)
        keep = ~child_cut
        if np.any(keep):
            resolved += float(np.sum(
                _gauss_cells_2d(fn, tuple(a[keep] for a in children))))
        active = tuple(a[child_cut] for a in children)
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _as_integrand_2d(g) -> Integrand2D:
    if isinstance(g, Integrand2D):
        return g
    if isinstance(g, SpaceTimeField):
        return Integrand2D(fn=g.value,
                           curves=tuple(c.fn for c in g.regions.curves),
                           x_knots=g.x_knots, t_knots=g.t_knots)
    if callable(g):
        return Integrand2D(fn=g)
    raise TypeError(f"cannot integrate object of type {type(g).__name__}")


def l2_norm_qt(g, box: SpaceTimeBox, cfg: QuadratureConfig) -> float:
    """L2 norm of g over the space-time box, breakpoint-aware."""
    item = _as_integrand_2d(g)
    sq = lambda x, t: np.asarray(item.fn(x, t), dtype=float) ** 2
    val = integrate_box(sq, box, cfg, curves=item.curves,
                        x_knots=item.x_knots, t_knots=item.t_knots)
    return math.sqrt(max(val, 0.0))


def l2_norm_space_at(g, domain: IntervalDomain, t: float,
                     cfg: QuadratureConfig, horizon: float | None = None) -> float:
    """L2 norm over the spatial domain of a space-time field at fixed time."""
    if horizon is not None and not (0.0 <= t <= horizon):
        raise ValueError(f"time {t} outside [0, {horizon}]")
    item = _as_integrand_2d(g)
    sq = lambda x: np.asarray(item.fn(x, np.full_like(np.asarray(x, dtype=float), t)),
                              dtype=float) ** 2
    curves = [lambda x, _c=c: _c(x, np.full_like(np.asarray(x, dtype=float), t))
              for c in item.curves]
    val = integrate_interval(sq, domain.a, domain.b, cfg,
                             curves=curves, knots=item.x_knots)
    return math.sqrt(max(val, 0.0))


def l2_norm_interval(g, domain: IntervalDomain, cfg: QuadratureConfig,
                     curves: Sequence[Callable] = (),
                     knots: Sequence[float] = ()) -> float:
    """L2 norm over the spatial domain of a spatial field or callable."""
    if isinstance(g, SpatialField):
        fn = g.value
        knots = tuple(knots) + g.knots
        curves = tuple(curves) + g.curves
    else:
        fn = g
    sq = lambda x: np.asarray(fn(x), dtype=float) ** 2
    val = integrate_interval(sq, domain.a, domain.b, cfg, curves=curves, knots=knots)
    return math.sqrt(max(val, 0.0))


def time_average(f: SpaceTimeField, x, t0: float, t1: float,
                 cfg: QuadratureConfig) -> np.ndarray:
    """Slab time average (1/(t1-t0)) * int_{t0}^{t1} f(x, t) dt, vectorized in x.

    Crossing times of the field's breakpoint curves are located per x by
    bisection, the slab is integrated piecewise with Gauss-7, and the piece
    count is doubled until two estimates agree to cfg.tol relatively.
    """
    if not t1 > t0:
        raise ValueError("time_average requires t1 > t0")
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    n = x.size
    fr = np.linspace(0.0, 1.0, 17)
    ts = t0 + fr[None, :] * (t1 - t0)
    ts = np.broadcast_to(ts, (n, fr.size))

    ids = []
    roots = []
    for c in f.regions.curves:
        v = _full(c.fn(x[:, None], ts), ts.shape)
        br = v[:, :-1] * v[:, 1:] < 0.0
        idx, jdx = np.nonzero(br)
        if idx.size:
            lo, hi = ts[idx, jdx].copy(), ts[idx, jdx + 1].copy()
            flo = np.asarray(c.fn(x[idx], lo), dtype=float)
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                fm = np.asarray(c.fn(x[idx], mid), dtype=float)
                left = flo * fm > 0.0
                lo = np.where(left, mid, lo)
                flo = np.where(left, fm, flo)
                hi = np.where(left, hi, mid)
            ids.append(idx)
            roots.append(0.5 * (lo + hi))
    if ids:
        padded = _pad_groups(np.concatenate(roots), np.concatenate(ids), n, np.inf)
        padded = np.sort(padded, axis=1)
        padded = np.clip(padded, t0, t1)
    else:
        padded = np.full((n, 1), t1)
    edges = np.concatenate([np.full((n, 1), t0), padded, np.full((n, 1), t1)], axis=1)

    def estimate(pieces: int) -> np.ndarray:
        frac = np.arange(pieces + 1) / pieces
        sub = edges[:, :-1, None] + frac[None, None, :] * np.diff(edges, axis=1)[:, :, None]
        lo, hi = sub[:, :, :-1], sub[:, :, 1:]
        half = 0.5 * (hi - lo)
        pts = lo[..., None] + (_GP7 + 1.0) * half[..., None]
        vals = _full(f.value(np.broadcast_to(
            x[:, None, None, None], pts.shape), pts), pts.shape)
        return np.einsum("nskg,nskg->n", vals, half[..., None] * _GW7)

    prev = estimate(1)
    pieces = 2
    for _ in range(cfg.max_levels):
        cur = estimate(pieces)
        err = np.abs(cur - prev)
        if np.all(err <= np.maximum(cfg.tol * np.abs(cur), cfg.abs_floor)):
            return np.reshape(cur / (t1 - t0), shape)
        prev = cur
        pieces *= 2
    raise QuadratureError(float(np.max(prev)), float(np.max(cur)),
                          "time_average did not converge")
