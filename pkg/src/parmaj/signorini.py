"""Majorant for the thin-obstacle (Signorini) variant: the constraint acts on
part of the boundary instead of inside the domain.

On an interval the contact part M is a subset of the two endpoints, with the
complement S carrying homogeneous Dirichlet data (S must be nonempty for the
Friedrichs-type inequality, whose constant is supplied by the caller).  For
admissible v (zero on S, >= phi on M) and fluxes with nonnegative outward
normal trace on M,

  (1/2)||e(.,T)||^2 + (1 - 1/(2a)) ||grad e||^2
     <= (1/2)||e(.,0)||^2 + (a/2) (||grad v - tau|| + C_F ||R_f||)^2
        + int_over_M_T (v - phi) tau.n ,

where R_f = f + div tau - v_t is the plain interior residual (the constraint
lives on the boundary, so no interior positive-part filtering applies).  The
boundary term is nonnegative for admissible data; a negative value signals an
inadmissible flux and raises instead of silently shrinking the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import (FluxField, IntervalDomain, RegionDecomposition, SpaceTimeBox,
                     SpaceTimeField, SpatialField)
from .majorant import flux_gap_integrand, residual_Rf
from .problem import ObstacleViolationError
from .quadrature import QuadratureConfig, integrate_interval, l2_norm_qt, l2_norm_space_at
from .quadrature import Integrand2D


class InadmissibleFluxError(Exception):
    """The flux violates the nonnegative normal-trace condition on M."""


@dataclass(frozen=True)
class ContactBoundary:
    """Partition of the two endpoints into contact part M and Dirichlet part S."""

    domain: IntervalDomain
    contact: tuple[float, ...]

    def __post_init__(self):
        eps = 1e-14
        for xb in self.contact:
            if not (abs(xb - self.domain.a) < eps or abs(xb - self.domain.b) < eps):
                raise ValueError(f"contact point {xb} is not a domain endpoint")
        if len(set(self.contact)) >= 2:
            raise ValueError(
                "the Dirichlet part S must be nonempty (the Friedrichs-type "
                "inequality fails when both endpoints are contact points)")

    @property
    def free(self) -> tuple[float, ...]:
        return tuple(xb for xb in (self.domain.a, self.domain.b)
                     if xb not in self.contact)

    def normal(self, xb: float) -> float:
        return -1.0 if xb == self.domain.a else 1.0


@dataclass(frozen=True)
class ThinObstacleData:
    """Problem data for the thin-obstacle variant; phi lives on the contact set.

    C_F is the constant of ||w|| <= C_F ||w'|| for functions vanishing on S
    only; it is not derivable from the interval length alone and must be
    supplied (2L/pi for an interval of length L with one free endpoint).
    """

    box: SpaceTimeBox
    f: SpaceTimeField
    u0: SpatialField
    C_F: float
    phi_contact: dict

    def __post_init__(self):
        if not self.C_F > 0:
            raise ValueError(f"C_F must be positive, got {self.C_F}")
        for xb, pv in self.phi_contact.items():
            u0v = float(np.asarray(self.u0.value(np.array([xb]))).ravel()[0])
            if pv > u0v + 1e-12:
                raise ValueError(
                    f"thin obstacle exceeds the initial datum at {xb}: "
                    f"phi = {pv}, u0 = {u0v}")


@dataclass(frozen=True)
class FluxAdmissibilityReport:
    admissible: bool
    worst_value: float
    worst_time: float
    endpoint: float | None


@dataclass(frozen=True)
class SignoriniBreakdown:
    """Majorant terms; total bounds (1/2)||e(.,T)||^2 + (1-1/(2a))||grad e||^2."""

    e0_sq: float
    flux_gap: float
    residual_norm: float
    boundary_term: float
    alpha: float
    C_F: float
    total: float


def signorini_admissible_flux(tau: FluxField, boundary: ContactBoundary,
                              horizon: float, n_samples: int = 257,
                              tol: float = 1e-10) -> FluxAdmissibilityReport:
    """Check tau . n >= -tol on the contact part at sampled times."""
    ts = np.linspace(0.0, horizon, n_samples)
    worst_val = math.inf
    worst_t, worst_x = 0.0, None
    for xb in boundary.contact:
        trace = np.asarray(tau.value(np.full_like(ts, xb), ts)) * boundary.normal(xb)
        i = int(np.argmin(trace))
        if trace[i] < worst_val:
            worst_val, worst_t, worst_x = float(trace[i]), float(ts[i]), xb
    if worst_x is None:                      # empty contact set
        return FluxAdmissibilityReport(True, math.inf, 0.0, None)
    return FluxAdmissibilityReport(worst_val >= -tol, worst_val, worst_t, worst_x)


def _check_membership(v: SpaceTimeField, data: ThinObstacleData,
                      boundary: ContactBoundary, n_samples: int = 257,
                      tol: float = 1e-9) -> None:
    ts = np.linspace(0.0, data.box.horizon, n_samples)
    for xb in boundary.contact:
        vals = np.asarray(v.value(np.full_like(ts, xb), ts))
        gap = vals - data.phi_contact[xb]
        i = int(np.argmin(gap))
        if gap[i] < -tol:
            raise ObstacleViolationError(point=(xb, float(ts[i])),
                                         value=float(gap[i]))
    for xb in boundary.free:
        vals = np.asarray(v.value(np.full_like(ts, xb), ts))
        i = int(np.argmax(np.abs(vals)))
        if abs(vals[i]) > tol:
            raise ObstacleViolationError(
                point=(xb, float(ts[i])), value=float(vals[i]),
                message=f"v must vanish on the Dirichlet part: "
                        f"v({xb}, {ts[i]:.4g}) = {vals[i]:.3e}")


def boundary_term(v: SpaceTimeField, tau: FluxField, data: ThinObstacleData,
                  boundary: ContactBoundary, cfg: QuadratureConfig) -> float:
    """Contact work integral sum over M of int_0^T (v - phi) tau.n dt."""
    _check_membership(v, data, boundary)
    total = 0.0
    horizon = data.box.horizon
    for xb in boundary.contact:
        n = boundary.normal(xb)
        phi_b = data.phi_contact[xb]

        def fn(t, _xb=xb, _n=n, _phi=phi_b):
            xs = np.full(np.shape(t), _xb)
            return (np.asarray(v.value(xs, t)) - _phi) * np.asarray(tau.value(xs, t)) * _n

        curves = [
            (lambda t, _c=c, _xb=xb: _c.fn(np.full(np.shape(t), _xb), t))
            for c in v.regions.union(tau.regions).curves]
        total += integrate_interval(fn, 0.0, horizon, cfg, curves=curves,
                                    knots=v.t_knots + tau.t_knots)
    return total


def signorini_error_measure(u: SpaceTimeField, v: SpaceTimeField, alpha: float,
                            data: ThinObstacleData, cfg: QuadratureConfig) -> float:
    """The bounded quantity (1/2)||e(.,T)||^2 + (1 - 1/(2 alpha))||grad e||^2."""
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    box = data.box
    curves = tuple(c.fn for c in u.regions.union(v.regions).curves)
    eT = l2_norm_space_at(
        Integrand2D(lambda x, t: v.value(x, t) - u.value(x, t), curves,
                    u.x_knots + v.x_knots, u.t_knots + v.t_knots),
        box.domain, box.horizon, cfg)
    ge = l2_norm_qt(
        Integrand2D(lambda x, t: v.grad_x(x, t) - u.grad_x(x, t), curves,
                    u.x_knots + v.x_knots, u.t_knots + v.t_knots), box, cfg)
    return 0.5 * eT**2 + (1.0 - 0.5 / alpha) * ge**2


def switching_contact_example(horizon: float = 1.0):
    """Closed-form thin-obstacle solution whose contact releases at T/2.

    On (0, 1) with contact part M = {0} and zero thin obstacle: for t <= T/2
    the solution touches the obstacle (u(0,t) = 0 with nonnegative outflow);
    for t > T/2 it lifts off with zero normal flux.  Returns
    (u, exact flux, data, boundary); useful for property tests and demos.
    """
    half = 0.5 * horizon
    dom = IntervalDomain(0.0, 1.0)
    box = SpaceTimeBox(dom, horizon)

    def g_lo(t):                           # contact phase amplitude, <= 0
        return -((half - t) ** 2)

    def g_hi(t):                           # lift-off amplitude, >= 0
        return (t - half) ** 2

    def split(x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return x, t, t <= half

    def u_val(x, t):
        x, t, lo = split(x, t)
        return np.where(lo, g_lo(t) * x * (1.0 - x), g_hi(t) * (1.0 - x * x))

    def u_grad(x, t):
        x, t, lo = split(x, t)
        return np.where(lo, g_lo(t) * (1.0 - 2.0 * x), -2.0 * x * g_hi(t))

    def u_dt(x, t):
        x, t, lo = split(x, t)
        return np.where(lo, 2.0 * (half - t) * x * (1.0 - x),
                        2.0 * (t - half) * (1.0 - x * x))

    def u_div(x, t):
        x, t, lo = split(x, t)
        return np.where(lo, -2.0 * g_lo(t), -2.0 * g_hi(t))

    def f_val(x, t):
        return u_dt(x, t) - u_div(x, t)

    switch = RegionDecomposition.of(("contact_release", lambda x, t:
                                     np.asarray(t, dtype=float) - half))
    u = SpaceTimeField(u_val, u_grad, u_dt, regions=switch,
                       t_knots=(half,), name="thin-obstacle u")
    tau = FluxField(u_grad, u_div, regions=switch, t_knots=(half,),
                    name="thin-obstacle flux")
    f = SpaceTimeField(f_val, regions=switch, t_knots=(half,), name="f")
    u0 = SpatialField(lambda x: -(half**2) * np.asarray(x, dtype=float)
                      * (1.0 - np.asarray(x, dtype=float)),
                      grad=lambda x: -(half**2) * (1.0 - 2.0 * np.asarray(x, dtype=float)),
                      name="u0")
    data = ThinObstacleData(box=box, f=f, u0=u0, C_F=2.0 / math.pi,
                            phi_contact={0.0: 0.0})
    boundary = ContactBoundary(domain=dom, contact=(0.0,))
    return u, tau, data, boundary


def perturbed_member(u: SpaceTimeField, amplitude: float) -> SpaceTimeField:
    """u plus amplitude * t * x(1-x)^2: stays zero on S and keeps the contact
    values on M, so membership in the admissible class is preserved."""
    def p(x, t):
        x = np.asarray(x, dtype=float)
        return amplitude * np.asarray(t, dtype=float) * x * (1.0 - x) ** 2

    def p_x(x, t):
        x = np.asarray(x, dtype=float)
        return amplitude * np.asarray(t, dtype=float) * (1.0 - x) * (1.0 - 3.0 * x)

    def p_t(x, t):
        x = np.asarray(x, dtype=float)
        return amplitude * x * (1.0 - x) ** 2 * np.ones(np.broadcast_shapes(
            np.shape(x), np.shape(t)))

    return SpaceTimeField(
        value=lambda x, t: u.value(x, t) + p(x, t),
        grad_x=lambda x, t: u.grad_x(x, t) + p_x(x, t),
        d_t=lambda x, t: u.d_t(x, t) + p_t(x, t),
        regions=u.regions, x_knots=u.x_knots, t_knots=u.t_knots,
        name=f"perturbed({u.name},{amplitude!r})")


def signorini_majorant(v: SpaceTimeField, tau: FluxField, data: ThinObstacleData,
                       boundary: ContactBoundary, alpha: float,
                       cfg: QuadratureConfig) -> SignoriniBreakdown:
    """Guaranteed bound for the thin-obstacle problem (see module docstring)."""
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    report = signorini_admissible_flux(tau, boundary, data.box.horizon)
    if not report.admissible:
        raise InadmissibleFluxError(
            f"tau.n = {report.worst_value:.3e} < 0 at endpoint "
            f"{report.endpoint}, t = {report.worst_time:.4g}")
    _check_membership(v, data, boundary)
    box = data.box
    e0 = l2_norm_space_at(
        Integrand2D(lambda x, t: v.value(x, t) - data.u0.value(x),
                    tuple(c.fn for c in v.regions.curves),
                    v.x_knots + data.u0.knots, v.t_knots),
        box.domain, 0.0, cfg)
    gap = l2_norm_qt(flux_gap_integrand(v, tau), box, cfg)
    res = l2_norm_qt(residual_Rf(v, tau, data.f), box, cfg)
    bterm = boundary_term(v, tau, data, boundary, cfg)
    if bterm < -1e-10:
        raise InadmissibleFluxError(
            f"negative contact work {bterm:.3e}; the bound would be invalid")
    total = 0.5 * e0**2 + 0.5 * alpha * (gap + data.C_F * res) ** 2 + bterm
    return SignoriniBreakdown(e0_sq=e0**2, flux_gap=gap, residual_norm=res,
                              boundary_term=bterm, alpha=alpha, C_F=data.C_F,
                              total=total)
