"""Error majorants for time-incremental approximations.

A time stepper produces spatial snapshots v_k >= phi on the nodes of a time
partition; their piecewise-linear-in-time interpolation v is admissible for
the continuous problem, so the Theorem-style majorant applies to it.  This
module provides the interpolation, slab-averaged and slab-affine source
surrogates, per-slab flux reconstructions, and two slab-sum majorants:

* the *simple* bound pairs a slab-constant flux tau_k with the slab-averaged
  source and sums  dt_k * [ (D1 + D2)^(1/2) + C_F ||F_k|| ]^2  over slabs;
* the *advanced* bound pairs node fluxes sigma_k interpolated affinely in time
  with the slab-affine source; its slab terms use exact closed-form time
  integrals of affine profiles and drop the residual on the subset omega_k of
  the contact zone where both endpoint residuals are nonpositive.

Both bounds add the initial mismatch ||u0 - v_0||^2 and the data term
alpha * C_F^2 * ||f - f_tilde||^2 for their respective surrogate f_tilde.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fields import (IntervalDomain, NodalFlux, SpaceTimeBox, SpaceTimeField,
                     SpatialField, SpatialFlux, positive_part)
from .problem import ANALYTIC_CLASSIFIER, CoincidenceClassifier, ObstacleViolationError
from .quadrature import (QuadratureConfig, integrate_box, integrate_interval,
                         l2_norm_qt, time_average)

#: sign tolerance classifying a nodal residual as nonpositive on omega_k
TOL_OMEGA = 1e-10


@dataclass(frozen=True)
class TimePartition:
    """Strictly increasing time nodes t_0 = 0 < ... < t_N = T."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("partition needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError(f"partition must start at t = 0, got {nodes[0]}")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("partition nodes must be strictly increasing")

    @staticmethod
    def uniform(horizon: float, n_slabs: int) -> "TimePartition":
        return TimePartition(np.linspace(0.0, horizon, n_slabs + 1))

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def n_slabs(self) -> int:
        return self.nodes.size - 1

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])


class IncrementalApprox:
    """Spatial snapshots v_k on the partition nodes, optionally grid-backed.

    Grid-backed approximations (from the demo solver) carry the value matrix
    and get a fast bilinear evaluation path in :func:`interpolate_in_time`.
    """

    def __init__(self, partition: TimePartition,
                 fields: Sequence[SpatialField],
                 grid_nodes: np.ndarray | None = None,
                 values: np.ndarray | None = None):
        if len(fields) != partition.n_slabs + 1:
            raise ValueError(
                f"need one spatial field per node: {partition.n_slabs + 1} "
                f"expected, got {len(fields)}")
        self.partition = partition
        self.fields = tuple(fields)
        self.grid_nodes = grid_nodes
        self.values = values

    @classmethod
    def from_nodal(cls, partition: TimePartition, grid_nodes, values) -> "IncrementalApprox":
        from .fields import NodalField
        grid_nodes = np.asarray(grid_nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.shape != (partition.n_slabs + 1, grid_nodes.size):
            raise ValueError(
                f"values must have shape (N+1, m) = "
                f"{(partition.n_slabs + 1, grid_nodes.size)}, got {values.shape}")
        fields = [NodalField(grid_nodes, row, name=f"v_{k}")
                  for k, row in enumerate(values)]
        return cls(partition, fields, grid_nodes=grid_nodes, values=values)

    @property
    def n_slabs(self) -> int:
        return self.partition.n_slabs

    def validate_admissible(self, phi: SpatialField,
                            classifier: CoincidenceClassifier,
                            domain: IntervalDomain, n_samples: int = 513) -> None:
        xs = np.linspace(domain.a, domain.b, n_samples)
        pv = np.asarray(phi.value(xs))
        for k, vk in enumerate(self.fields):
            gap = np.asarray(vk.value(xs)) - pv
            worst = int(np.argmin(gap))
            if gap[worst] < -max(classifier.tol_c, 1e-12):
                raise ObstacleViolationError(
                    point=(float(xs[worst]), float(self.partition.nodes[k])),
                    value=float(gap[worst]))


@dataclass(frozen=True)
class FluxSequence:
    """Node-indexed (or slab-indexed) spatial fluxes accompanying v_k."""

    partition: TimePartition
    fluxes: tuple

    def __len__(self) -> int:
        return len(self.fluxes)


def _slab_index(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    k = np.searchsorted(nodes, t, side="right") - 1
    return np.clip(k, 0, nodes.size - 2)


def interpolate_in_time(approx: IncrementalApprox) -> SpaceTimeField:
    """Piecewise-linear-in-time interpolation of the snapshots.

    On each slab:  v = v_k + (v_{k+1} - v_k)(t - t_k)/dt_k,  so
    v_t = (v_{k+1} - v_k)/dt_k.  Convexity keeps v >= phi wherever both
    endpoint snapshots are.
    """
    nodes = approx.partition.nodes
    steps = approx.partition.steps

    if approx.values is not None:
        g = approx.grid_nodes
        V = approx.values
        S = np.diff(V, axis=1) / np.diff(g)

        def _locate(x, t):
            xb, tb = np.broadcast_arrays(np.asarray(x, dtype=float),
                                         np.asarray(t, dtype=float))
            k = _slab_index(nodes, tb)
            lam = (tb - nodes[k]) / steps[k]
            j = np.clip(np.searchsorted(g, xb, side="right") - 1, 0, g.size - 2)
            mu = (xb - g[j]) / (g[j + 1] - g[j])
            return k, lam, j, mu

        def value(x, t):
            k, lam, j, mu = _locate(x, t)
            lo = (1 - mu) * V[k, j] + mu * V[k, j + 1]
            hi = (1 - mu) * V[k + 1, j] + mu * V[k + 1, j + 1]
            return (1 - lam) * lo + lam * hi

        def grad_x(x, t):
            k, lam, j, _ = _locate(x, t)
            return (1 - lam) * S[k, j] + lam * S[k + 1, j]

        def d_t(x, t):
            k, _, j, mu = _locate(x, t)
            dv_lo = (V[k + 1, j] - V[k, j])
            dv_hi = (V[k + 1, j + 1] - V[k, j + 1])
            return ((1 - mu) * dv_lo + mu * dv_hi) / steps[k]

        x_knots: tuple = tuple(g)
    else:
        def _eval(x, t, getter):
            xb, tb = np.broadcast_arrays(np.asarray(x, dtype=float),
                                         np.asarray(t, dtype=float))
            k = _slab_index(nodes, tb)
            out = np.empty(xb.shape, dtype=float)
            for kk in np.unique(k):
                m = k == kk
                lam = (tb[m] - nodes[kk]) / steps[kk]
                lo, hi = getter(kk, xb[m])
                out[m] = (1 - lam) * lo + lam * hi
            return out

        fields = approx.fields

        def value(x, t):
            return _eval(x, t, lambda k, xs: (fields[k].value(xs),
                                              fields[k + 1].value(xs)))

        def grad_x(x, t):
            return _eval(x, t, lambda k, xs: (fields[k].grad(xs),
                                              fields[k + 1].grad(xs)))

        def d_t(x, t):
            xb, tb = np.broadcast_arrays(np.asarray(x, dtype=float),
                                         np.asarray(t, dtype=float))
            k = _slab_index(nodes, tb)
            out = np.empty(xb.shape, dtype=float)
            for kk in np.unique(k):
                m = k == kk
                out[m] = (fields[kk + 1].value(xb[m]) -
                          fields[kk].value(xb[m])) / steps[kk]
            return out

        x_knots = tuple(sorted({x for fld in approx.fields for x in fld.knots}))

    from .fields import RegionDecomposition
    lifted = []
    seen: set[str] = set()
    for k, fld in enumerate(approx.fields):
        for i, c in enumerate(getattr(fld, "curves", ())):
            name = f"slab_curve[{k}:{i}]"
            if name not in seen:
                seen.add(name)
                lifted.append((name, lambda x, t, _c=c: _c(np.asarray(x, dtype=float))))
    return SpaceTimeField(value=value, grad_x=grad_x, d_t=d_t,
                          regions=RegionDecomposition.of(*lifted),
                          x_knots=x_knots, t_knots=tuple(nodes),
                          name="time-incremental v")


def averaged_source(f: SpaceTimeField, partition: TimePartition, k: int,
                    cfg: QuadratureConfig) -> SpatialField:
    """Slab time-average <f>_k(x) of the source, with its x-breakpoints.

    The average is smooth in x except where a breakpoint curve of f crosses
    the slab edges; those level functions are attached for the quadrature.
    """
    t0, t1 = float(partition.nodes[k]), float(partition.nodes[k + 1])
    value = lambda x: time_average(f, x, t0, t1, cfg)
    curves = []
    for c in f.regions.curves:
        for te in (t0, t1):
            curves.append(lambda x, _c=c, _t=te:
                          _c.fn(np.asarray(x, dtype=float),
                                np.full(np.shape(x), _t)))
    return SpatialField(value=value, knots=f.x_knots, curves=tuple(curves),
                        name=f"<f>_[{t0:.4g},{t1:.4g}]")


def source_at(f: SpaceTimeField, t0: float) -> SpatialField:
    """Time slice f(., t0) as a spatial field with lifted breakpoints."""
    curves = tuple(
        (lambda x, _c=c: _c.fn(np.asarray(x, dtype=float), np.full(np.shape(x), t0)))
        for c in f.regions.curves)
    return SpatialField(value=lambda x: f.value(x, np.full(np.shape(x), t0)),
                        knots=f.x_knots, curves=curves, name=f"f(.,{t0:.4g})")


def affine_source(f: SpaceTimeField, partition: TimePartition, k: int,
                  cfg: QuadratureConfig) -> SpaceTimeField:
    """Slab-affine surrogate f_k + (f_{k+1}-f_k)(t-t_k)/dt + zeta_k.

    The shift zeta_k(x) = <f>_k - (f_k + f_{k+1})/2 makes the slab time
    integral of the surrogate match that of f exactly.
    """
    t0, t1 = float(partition.nodes[k]), float(partition.nodes[k + 1])
    dt = t1 - t0
    avg = averaged_source(f, partition, k, cfg)

    def f_at(x, te):
        return f.value(np.asarray(x, dtype=float), np.full(np.shape(x), te))

    def value(x, t):
        lam = (np.asarray(t, dtype=float) - t0) / dt
        f0, f1 = f_at(x, t0), f_at(x, t1)
        zeta = avg.value(x) - 0.5 * (f0 + f1)
        return f0 + (f1 - f0) * lam + zeta

    def d_t(x, t):
        out = (f_at(x, t1) - f_at(x, t0)) / dt
        return np.broadcast_to(out, np.broadcast_shapes(np.shape(out), np.shape(t))).copy()

    from .fields import RegionDecomposition
    vertical = []
    for i, c in enumerate(f.regions.curves):
        for te in (t0, t1):
            vertical.append((f"slab_edge[{i}@{te:.4g}]",
                             lambda x, t, _c=c, _t=te:
                             _c.fn(np.asarray(x, dtype=float),
                                   np.full(np.shape(x), _t))))
    return SpaceTimeField(value=value, d_t=d_t,
                          regions=RegionDecomposition.of(*vertical),
                          x_knots=f.x_knots, t_knots=(t0, t1),
                          name=f"affine f on slab {k}")


def _norm_sq_interval(fn, domain, cfg, knots=(), curves=()):
    sq = lambda x: np.asarray(fn(x), dtype=float) ** 2
    return integrate_interval(sq, domain.a, domain.b, cfg, curves=curves, knots=knots)


def d1(v_k: SpatialField, v_k1: SpatialField, domain: IntervalDomain,
       cfg: QuadratureConfig) -> float:
    """(1/12) ||grad(v_{k+1} - v_k)||^2; order dt^2 for regular snapshots."""
    fn = lambda x: v_k1.grad(x) - v_k.grad(x)
    return _norm_sq_interval(fn, domain, cfg, knots=v_k.knots + v_k1.knots,
                             curves=v_k.curves + v_k1.curves) / 12.0


def d2(v_k: SpatialField, v_k1: SpatialField, tau_k: SpatialFlux,
       domain: IntervalDomain, cfg: QuadratureConfig) -> float:
    """||(1/2) grad(v_{k+1} + v_k) - tau_k||^2, the flux-consistency penalty."""
    fn = lambda x: 0.5 * (v_k1.grad(x) + v_k.grad(x)) - tau_k.value(x)
    return _norm_sq_interval(fn, domain, cfg,
                             knots=v_k.knots + v_k1.knots + tau_k.knots,
                             curves=v_k.curves + v_k1.curves)


def average_gradients(grid_nodes, values) -> NodalFlux:
    """Node-centered flux: mean of adjacent cell slopes, one-sided at the ends.

    The result is continuous piecewise linear, hence divergence-admissible.
    """
    grid_nodes = np.asarray(grid_nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid_nodes.size < 3:
        raise ValueError("gradient averaging needs at least 2 cells (3 nodes)")
    slopes = np.diff(values) / np.diff(grid_nodes)
    node_flux = np.empty_like(values)
    node_flux[0] = slopes[0]
    node_flux[-1] = slopes[-1]
    node_flux[1:-1] = 0.5 * (slopes[:-1] + slopes[1:])
    return NodalFlux(grid_nodes, node_flux)


def midpoint_flux(sigma_k, sigma_k1):
    """Pointwise average of two node fluxes, used as the slab flux."""
    if isinstance(sigma_k, NodalFlux) and isinstance(sigma_k1, NodalFlux):
        if sigma_k.nodes.shape != sigma_k1.nodes.shape or \
                not np.array_equal(sigma_k.nodes, sigma_k1.nodes):
            raise ValueError("midpoint_flux requires fluxes on the same grid")
        return NodalFlux(sigma_k.nodes, 0.5 * (sigma_k.values + sigma_k1.values))
    return SpatialFlux(
        value=lambda x: 0.5 * (sigma_k.value(x) + sigma_k1.value(x)),
        div=lambda x: 0.5 * (sigma_k.div(x) + sigma_k1.div(x)),
        knots=tuple(sigma_k.knots) + tuple(sigma_k1.knots),
        name="midpoint flux")


def flux_field_from_sequence(fluxes: FluxSequence) -> "FluxField":
    """Affine-in-time interpolation of node fluxes as a space-time flux.

    The result is admissible for the global majorant (square-integrable with
    square-integrable divergence for a.e. t), so a slab flux sequence can be
    fed to the non-incremental estimate directly.
    """
    from .fields import FluxField
    part = fluxes.partition
    if len(fluxes) != part.n_slabs + 1:
        raise ValueError(
            f"need one flux per node ({part.n_slabs + 1}), got {len(fluxes)}")
    nodes = part.nodes
    steps = part.steps
    seq = fluxes.fluxes

    def _eval(x, t, getter):
        xb, tb = np.broadcast_arrays(np.asarray(x, dtype=float),
                                     np.asarray(t, dtype=float))
        k = _slab_index(nodes, tb)
        out = np.empty(xb.shape, dtype=float)
        for kk in np.unique(k):
            m = k == kk
            lam = (tb[m] - nodes[kk]) / steps[kk]
            lo, hi = getter(kk, xb[m])
            out[m] = (1 - lam) * lo + lam * hi
        return out

    x_knots = tuple(sorted({x for s in seq for x in s.knots}))
    return FluxField(
        value=lambda x, t: _eval(x, t, lambda k, xs: (seq[k].value(xs),
                                                      seq[k + 1].value(xs))),
        div=lambda x, t: _eval(x, t, lambda k, xs: (seq[k].div(xs),
                                                    seq[k + 1].div(xs))),
        x_knots=x_knots, t_knots=tuple(nodes), name="interpolated flux sequence")


@dataclass(frozen=True)
class IntervalResiduals:
    """Endpoint residuals of one slab and the sign-classified contact subsets."""

    R_low: SpatialField
    R_high: SpatialField
    coincidence: Callable
    omega1: Callable
    omega2: Callable
    omega: Callable
    level_curves: tuple


def interval_residuals(v_k: SpatialField, v_k1: SpatialField,
                       sigma_k: SpatialFlux, sigma_k1: SpatialFlux,
                       f_k: SpatialField, f_k1: SpatialField,
                       dt: float, phi: SpatialField,
                       classifier: CoincidenceClassifier) -> IntervalResiduals:
    """Finite-difference equation residuals at both slab endpoints.

    R_low  = f_k     + div sigma_k     - (v_{k+1} - v_k)/dt
    R_high = f_{k+1} + div sigma_{k+1} - (v_{k+1} - v_k)/dt

    omega1/omega2 restrict the contact zone (both snapshots on the obstacle)
    to where the respective residual is nonpositive; on omega = omega1 & omega2
    the affine-in-time residual is nonpositive throughout the slab and drops
    from the majorant.
    """
    dv = lambda x: (v_k1.value(x) - v_k.value(x)) / dt
    R_low = SpatialField(
        value=lambda x: f_k.value(x) + sigma_k.div(x) - dv(x),
        knots=f_k.knots + sigma_k.knots + v_k.knots + v_k1.knots,
        curves=f_k.curves, name="R_low")
    R_high = SpatialField(
        value=lambda x: f_k1.value(x) + sigma_k1.div(x) - dv(x),
        knots=f_k1.knots + sigma_k1.knots + v_k.knots + v_k1.knots,
        curves=f_k1.curves, name="R_high")

    def coincidence(x):
        return (classifier.spatial_mask(v_k, phi, x)
                & classifier.spatial_mask(v_k1, phi, x))

    omega1 = lambda x: coincidence(x) & (R_low.value(x) <= TOL_OMEGA)
    omega2 = lambda x: coincidence(x) & (R_high.value(x) <= TOL_OMEGA)
    omega = lambda x: omega1(x) & omega2(x)

    levels = (
        lambda x: np.abs(v_k.value(x) - phi.value(x)) - classifier.tol_c,
        lambda x: np.abs(v_k1.value(x) - phi.value(x)) - classifier.tol_c,
        lambda x: R_low.value(x) - TOL_OMEGA,
        lambda x: R_high.value(x) - TOL_OMEGA,
    ) + R_low.curves + R_high.curves
    return IntervalResiduals(R_low=R_low, R_high=R_high, coincidence=coincidence,
                             omega1=omega1, omega2=omega2, omega=omega,
                             level_curves=levels)


def affine_square_slab_integral(g0, g1, dt):
    """Exact slab integral of the squared affine profile g0 -> g1.

    int_0^dt (g0 + (g1-g0) s/dt)^2 ds = (dt/4) [ (g1-g0)^2/3 + (g1+g0)^2 ].
    """
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    return 0.25 * dt * ((g1 - g0) ** 2 / 3.0 + (g1 + g0) ** 2)


@dataclass(frozen=True)
class SimpleSlabTerm:
    k: int
    dt: float
    d1: float
    d2: float
    residual_norm: float
    term: float


@dataclass(frozen=True)
class AdvancedSlabTerm:
    k: int
    dt: float
    dD_sq: float
    sD_sq: float
    dR_sq: float
    sR_sq: float
    gap_sq: float
    residual_sq: float
    term: float


@dataclass(frozen=True)
class IncrementalMajorant:
    """Slab-sum majorant report; total bounds the combined error norm."""

    kind: str
    total: float
    e0_sq: float
    source_mismatch_sq: float
    alpha: float
    C_F: float
    slabs: tuple


def _slab_fluxes(approx: IncrementalApprox, fluxes: FluxSequence):
    n = approx.n_slabs
    if len(fluxes) == n:
        return list(fluxes.fluxes)
    if len(fluxes) == n + 1:
        return [midpoint_flux(fluxes.fluxes[k], fluxes.fluxes[k + 1])
                for k in range(n)]
    raise ValueError(
        f"flux sequence length {len(fluxes)} matches neither slabs ({n}) "
        f"nor nodes ({n + 1}) of the partition")


def _initial_mismatch_sq(u0: SpatialField, v0: SpatialField,
                         domain: IntervalDomain, cfg: QuadratureConfig) -> float:
    fn = lambda x: v0.value(x) - u0.value(x)
    return _norm_sq_interval(fn, domain, cfg, knots=u0.knots + v0.knots,
                             curves=u0.curves + v0.curves)


def simple_incremental_majorant(approx: IncrementalApprox, fluxes: FluxSequence,
                                f: SpaceTimeField, phi: SpatialField,
                                u0: SpatialField, alpha: float, C_F: float,
                                cfg: QuadratureConfig,
                                domain: IntervalDomain,
                                classifier: CoincidenceClassifier = ANALYTIC_CLASSIFIER,
                                ) -> IncrementalMajorant:
    """Slab-sum majorant with slab-constant fluxes and slab-averaged source.

    total = ||u0 - v_0||^2 + alpha C_F^2 ||f - <f>||^2
            + alpha sum_k dt_k [ (D1_k + D2_k)^(1/2) + C_F ||F_k|| ]^2
    """
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    taus = _slab_fluxes(approx, fluxes)
    approx.validate_admissible(phi, classifier, domain)
    part = approx.partition
    box = SpaceTimeBox(domain, part.horizon)

    e0_sq = _initial_mismatch_sq(u0, approx.fields[0], domain, cfg)

    # ||f - <f>||^2 = ||f||^2 - sum_k dt_k ||<f>_k||^2 (slabwise orthogonality)
    f_sq = l2_norm_qt(f, box, cfg) ** 2
    avg_fields = [averaged_source(f, part, k, cfg) for k in range(part.n_slabs)]
    avg_sq = sum(
        dt * _norm_sq_interval(a.value, domain, cfg, knots=a.knots, curves=a.curves)
        for dt, a in zip(part.steps, avg_fields))
    data_sq = max(f_sq - avg_sq, 0.0)

    slabs = []
    total_sum = 0.0
    for k in range(part.n_slabs):
        dt = float(part.steps[k])
        v_k, v_k1 = approx.fields[k], approx.fields[k + 1]
        tau_k = taus[k]
        d1k = d1(v_k, v_k1, domain, cfg)
        d2k = d2(v_k, v_k1, tau_k, domain, cfg)
        avg_k = avg_fields[k]

        def R(x):
            return avg_k.value(x) + tau_k.div(x) - (v_k1.value(x) - v_k.value(x)) / dt

        def coin(x):
            return (classifier.spatial_mask(v_k, phi, x)
                    & classifier.spatial_mask(v_k1, phi, x))

        filtered = lambda x: np.where(coin(x), positive_part(R(x)), R(x))
        levels = avg_k.curves + (
            lambda x: np.abs(v_k.value(x) - phi.value(x)) - classifier.tol_c,
            lambda x: np.abs(v_k1.value(x) - phi.value(x)) - classifier.tol_c,
            R,
        )
        res_sq = _norm_sq_interval(
            filtered, domain, cfg,
            knots=avg_k.knots + tau_k.knots + v_k.knots + v_k1.knots + phi.knots,
            curves=levels)
        term = dt * (math.sqrt(d1k + d2k) + C_F * math.sqrt(res_sq)) ** 2
        slabs.append(SimpleSlabTerm(k=k, dt=dt, d1=d1k, d2=d2k,
                                    residual_norm=math.sqrt(res_sq), term=term))
        total_sum += term

    total = e0_sq + alpha * C_F**2 * data_sq + alpha * total_sum
    return IncrementalMajorant(kind="simple", total=total, e0_sq=e0_sq,
                               source_mismatch_sq=data_sq, alpha=alpha, C_F=C_F,
                               slabs=tuple(slabs))


def advanced_incremental_majorant(approx: IncrementalApprox, fluxes: FluxSequence,
                                  f: SpaceTimeField, phi: SpatialField,
                                  u0: SpatialField, alpha: float, C_F: float,
                                  cfg: QuadratureConfig,
                                  domain: IntervalDomain,
                                  classifier: CoincidenceClassifier = ANALYTIC_CLASSIFIER,
                                  ) -> IncrementalMajorant:
    """Slab-sum majorant with affine-in-time fluxes and slab-affine source.

    Per slab, with D_k = sigma_k - grad v_k and endpoint residuals R_low/R_high
    (dropped on omega_k), the exact affine time integrals give

        G_k^2 = (dt/4) [ ||D_{k+1}-D_k||^2 / 3 + ||D_{k+1}+D_k||^2 ]
        H_k^2 = (dt/4) [ ||R_high-R_low||^2 / 3 + ||R_high+R_low||^2 ]  on Omega \\ omega_k

    and  total = ||u0 - v_0||^2 + alpha C_F^2 ||f - f_tilde||^2
                 + alpha sum_k (G_k + C_F H_k)^2.
    """
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    if len(fluxes) != approx.n_slabs + 1:
        raise ValueError(
            f"advanced majorant needs one flux per node "
            f"({approx.n_slabs + 1}), got {len(fluxes)}")
    approx.validate_admissible(phi, classifier, domain)
    part = approx.partition
    box = SpaceTimeBox(domain, part.horizon)

    e0_sq = _initial_mismatch_sq(u0, approx.fields[0], domain, cfg)

    f_curves = tuple(c.fn for c in f.regions.curves)
    data_sq = 0.0
    slabs = []
    total_sum = 0.0
    for k in range(part.n_slabs):
        t0, t1 = float(part.nodes[k]), float(part.nodes[k + 1])
        dt = t1 - t0
        v_k, v_k1 = approx.fields[k], approx.fields[k + 1]
        sig_k, sig_k1 = fluxes.fluxes[k], fluxes.fluxes[k + 1]
        f_k, f_k1 = source_at(f, t0), source_at(f, t1)

        # ||f - f_tilde||^2 on the slab = ||f - L||^2 - dt ||zeta||^2 where L is
        # the nodal-affine part; the mean shift zeta soaks up the projection.
        def fL(x, t, _t0=t0, _dt=dt, _fk=f_k, _fk1=f_k1):
            lam = (np.asarray(t, dtype=float) - _t0) / _dt
            f0 = _fk.value(x)
            return (np.asarray(f.value(x, t), dtype=float)
                    - f0 - (_fk1.value(x) - f0) * lam) ** 2

        slab_curves = f_curves + tuple(
            (lambda x, t, _c=c: _c(np.asarray(x, dtype=float)))
            for c in f_k.curves + f_k1.curves)
        fl_sq = integrate_box(fL, SpaceTimeBox(domain, t1), cfg,
                              curves=slab_curves, x_knots=f.x_knots,
                              t_knots=(t0, t1), t0=t0)
        avg_k = averaged_source(f, part, k, cfg)
        zeta = lambda x: avg_k.value(x) - 0.5 * (f_k.value(x) + f_k1.value(x))
        zeta_sq = _norm_sq_interval(zeta, domain, cfg,
                                    knots=avg_k.knots,
                                    curves=avg_k.curves + f_k.curves + f_k1.curves)
        data_sq += max(fl_sq - dt * zeta_sq, 0.0)

        dD = lambda x: (sig_k1.value(x) - v_k1.grad(x)) - (sig_k.value(x) - v_k.grad(x))
        sD = lambda x: (sig_k1.value(x) - v_k1.grad(x)) + (sig_k.value(x) - v_k.grad(x))
        d_knots = (sig_k.knots + sig_k1.knots + v_k.knots + v_k1.knots)
        dD_sq = _norm_sq_interval(dD, domain, cfg, knots=d_knots)
        sD_sq = _norm_sq_interval(sD, domain, cfg, knots=d_knots)

        ir = interval_residuals(v_k, v_k1, sig_k, sig_k1, f_k, f_k1,
                                dt, phi, classifier)
        keep = lambda x: ~ir.omega(x)
        dR = lambda x: np.where(keep(x),
                                ir.R_high.value(x) - ir.R_low.value(x), 0.0)
        sR = lambda x: np.where(keep(x),
                                ir.R_high.value(x) + ir.R_low.value(x), 0.0)
        r_knots = ir.R_low.knots + ir.R_high.knots + phi.knots
        dR_sq = _norm_sq_interval(dR, domain, cfg, knots=r_knots,
                                  curves=ir.level_curves)
        sR_sq = _norm_sq_interval(sR, domain, cfg, knots=r_knots,
                                  curves=ir.level_curves)

        gap_sq = 0.25 * dt * (dD_sq / 3.0 + sD_sq)
        res_sq = 0.25 * dt * (dR_sq / 3.0 + sR_sq)
        term = (math.sqrt(gap_sq) + C_F * math.sqrt(res_sq)) ** 2
        slabs.append(AdvancedSlabTerm(k=k, dt=dt, dD_sq=dD_sq, sD_sq=sD_sq,
                                      dR_sq=dR_sq, sR_sq=sR_sq, gap_sq=gap_sq,
                                      residual_sq=res_sq, term=term))
        total_sum += term

    total = e0_sq + alpha * C_F**2 * data_sq + alpha * total_sum
    return IncrementalMajorant(kind="advanced", total=total, e0_sq=e0_sq,
                               source_mismatch_sq=data_sq, alpha=alpha, C_F=C_F,
                               slabs=tuple(slabs))
