"""Combined error norm, equation residuals, and the guaranteed error majorant.

The central estimate: for any admissible v (above the obstacle, matching the
boundary schedule of u) and any flux tau with square-integrable divergence,

    ||e(.,T)||^2 + (2 - 1/a) ||grad e||^2
        <= ||e(.,0)||^2 + a (||tau - grad v|| + C_F ||F_f(v,tau)||)^2,

for every a >= 1/2, where e = v - u, R_f = f + div tau - v_t, and F_f equals
R_f off the coincidence set of v and its positive part on it.  The right side
is computable without knowing u; it vanishes iff v = u and tau = grad u.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fields import (EMPTY_REGIONS, FluxField, RegionDecomposition,
                     SpaceTimeField, SpatialField, positive_part)
from .problem import CoincidenceClassifier, ObstacleViolationError, ProblemData
from .quadrature import Integrand2D, QuadratureConfig, l2_norm_qt, l2_norm_space_at

#: additive slack used when testing rhs >= lhs; violations beyond it falsify
#: the guarantee and indicate an implementation or admissibility bug.
GUARANTEE_SLACK = 1e-8


class GuaranteeViolationWarning(UserWarning):
    """A computed majorant fell below the error it is supposed to bound."""


@dataclass(frozen=True)
class ErrorMeasure:
    """Terms of the combined error norm at a given weight alpha."""

    eT_sq: float
    grad_sq: float
    alpha: float
    combined: float


@dataclass(frozen=True)
class MajorantBreakdown:
    """All terms of the majorant: total = e0_sq + alpha*(gap + C_F*res)^2."""

    e0_sq: float
    flux_gap: float
    residual_norm: float
    alpha: float
    C_F: float
    total: float


@dataclass(frozen=True)
class HypercircleReport:
    """Outcome of the exact-constraint (hypercircle) membership test."""

    member: bool
    bound: float
    worst_point: tuple[float, float]
    worst_value: float


def _merged_meta(*fields):
    regions = EMPTY_REGIONS
    x_knots: tuple = ()
    t_knots: tuple = ()
    for f in fields:
        if f is None:
            continue
        if isinstance(f, SpatialField):
            x_knots += f.knots
            continue
        regions = regions.union(getattr(f, "regions", EMPTY_REGIONS))
        x_knots += getattr(f, "x_knots", ())
        t_knots += getattr(f, "t_knots", ())
    return tuple(c.fn for c in regions.curves), x_knots, t_knots


def _difference(v: SpaceTimeField, u: SpaceTimeField) -> Integrand2D:
    curves, xk, tk = _merged_meta(v, u)
    return Integrand2D(lambda x, t: v.value(x, t) - u.value(x, t), curves, xk, tk)


def _grad_difference(v: SpaceTimeField, u: SpaceTimeField) -> Integrand2D:
    curves, xk, tk = _merged_meta(v, u)
    return Integrand2D(lambda x, t: v.grad_x(x, t) - u.grad_x(x, t), curves, xk, tk)


def flux_gap_integrand(v: SpaceTimeField, tau: FluxField) -> Integrand2D:
    """tau - grad v as a bare integrand with merged breakpoint metadata."""
    curves, xk, tk = _merged_meta(v, tau)
    return Integrand2D(lambda x, t: tau.value(x, t) - v.grad_x(x, t), curves, xk, tk)


def combined_error_norm(u: SpaceTimeField, v: SpaceTimeField, alpha: float,
                        data: ProblemData, cfg: QuadratureConfig) -> ErrorMeasure:
    """Combined norm of e = v - u over the problem's space-time box."""
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    box = data.box
    eT = l2_norm_space_at(_difference(v, u), box.domain, box.horizon, cfg)
    ge = l2_norm_qt(_grad_difference(v, u), box, cfg)
    eT_sq, grad_sq = eT**2, ge**2
    return ErrorMeasure(eT_sq=eT_sq, grad_sq=grad_sq, alpha=alpha,
                        combined=eT_sq + (2.0 - 1.0 / alpha) * grad_sq)


def residual_Rf(v: SpaceTimeField, tau: FluxField,
                f: SpaceTimeField) -> SpaceTimeField:
    """Equation residual R_f = f + div tau - v_t as a pointwise field."""
    if not v.has_dt:
        v.d_t(0.0, 0.0)  # raises MissingDerivativeError naming the field
    if not tau.has_div:
        tau.div(0.0, 0.0)
    curves, xk, tk = _merged_meta(v, tau, f)
    regions = RegionDecomposition.of(*((f"R[{i}]", c) for i, c in enumerate(curves)))
    return SpaceTimeField(
        value=lambda x, t: f.value(x, t) + tau.div(x, t) - v.d_t(x, t),
        regions=regions, x_knots=xk, t_knots=tk,
        name=f"R_f({v.name},{tau.name})")


def residual_Ff(v: SpaceTimeField, tau: FluxField, f: SpaceTimeField,
                phi: SpatialField,
                classifier: CoincidenceClassifier) -> SpaceTimeField:
    """Filtered residual: R_f off the coincidence set, {R_f}_+ on it."""
    R = residual_Rf(v, tau, f)

    def value(x, t):
        r = R.value(x, t)
        on_obstacle = classifier.coincidence_mask(v, phi, x, t)
        return np.where(on_obstacle, positive_part(r), r)

    regions = R.regions.union(
        RegionDecomposition((classifier.level_curve(v, phi),)),
        RegionDecomposition.of(("R_zero_level", R.value)))
    return SpaceTimeField(value=value, regions=regions,
                          x_knots=R.x_knots + phi.knots, t_knots=R.t_knots,
                          name=f"F_f({v.name},{tau.name})")


def check_admissible(v: SpaceTimeField, phi: SpatialField, box,
                     classifier: CoincidenceClassifier,
                     samples: tuple[int, int] = (241, 121)) -> None:
    """Sample-based admissibility check v >= phi - tol_c (necessary, not sufficient)."""
    xs = np.linspace(box.domain.a, box.domain.b, samples[0])
    ts = np.linspace(0.0, box.horizon, samples[1])
    X, T = np.meshgrid(xs, ts, indexing="ij")
    gap = np.asarray(v.value(X, T)) - np.asarray(phi.value(X))
    worst = np.unravel_index(np.argmin(gap), gap.shape)
    if gap[worst] < -max(classifier.tol_c, 1e-12):
        raise ObstacleViolationError(
            point=(float(X[worst]), float(T[worst])), value=float(gap[worst]))


def majorant(v: SpaceTimeField, tau: FluxField, data: ProblemData, alpha: float,
             classifier: CoincidenceClassifier,
             cfg: QuadratureConfig) -> MajorantBreakdown:
    """Evaluate the guaranteed upper bound for the pair (v, tau)."""
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    check_admissible(v, data.phi, data.box, classifier)
    box = data.box
    init_gap = Integrand2D(
        fn=lambda x, t: v.value(x, t) - data.u0.value(x),
        curves=tuple(c.fn for c in v.regions.curves),
        x_knots=v.x_knots + data.u0.knots, t_knots=v.t_knots)
    e0 = l2_norm_space_at(init_gap, box.domain, 0.0, cfg)
    gap = l2_norm_qt(flux_gap_integrand(v, tau), box, cfg)
    res = l2_norm_qt(residual_Ff(v, tau, data.f, data.phi, classifier), box, cfg)
    total = e0**2 + alpha * (gap + data.C_F * res) ** 2
    return MajorantBreakdown(e0_sq=e0**2, flux_gap=gap, residual_norm=res,
                             alpha=alpha, C_F=data.C_F, total=total)


def specialized_bounds(breakdown: MajorantBreakdown) -> tuple[float, float]:
    """The two closed-form specializations of the majorant.

    Returns (bound on ||e(.,T)||^2 + ||grad e||^2 at alpha = 1,
             bound on ||e(.,T)||^2 at the limit alpha = 1/2, carrying 1/2).
    """
    core = (breakdown.flux_gap + breakdown.C_F * breakdown.residual_norm) ** 2
    return breakdown.e0_sq + core, breakdown.e0_sq + 0.5 * core


def hypercircle_check(v: SpaceTimeField, tau: FluxField, data: ProblemData,
                      classifier: CoincidenceClassifier, cfg: QuadratureConfig,
                      alpha: float = 1.0, samples: tuple[int, int] = (201, 101),
                      tol: float | None = None) -> HypercircleReport:
    """Test (v, tau) for exact-constraint membership; if it holds, the bound
    collapses to e0_sq + alpha^2 ||tau - grad v||^2.

    Membership requires R_f = 0 off the coincidence set and R_f <= 0 on it at
    every sample point (within a tol_c-scaled tolerance).
    """
    if tol is None:
        tol = max(1e3 * classifier.tol_c, 1e-9)
    box = data.box
    xs = np.linspace(box.domain.a, box.domain.b, samples[0] + 2)[1:-1]
    ts = np.linspace(0.0, box.horizon, samples[1] + 2)[1:-1]
    X, T = np.meshgrid(xs, ts, indexing="ij")
    R = np.asarray(residual_Rf(v, tau, data.f).value(X, T))
    on_obstacle = classifier.coincidence_mask(v, data.phi, X, T)
    violation = np.where(on_obstacle, positive_part(R), np.abs(R))
    worst = np.unravel_index(np.argmax(violation), violation.shape)
    member = bool(violation[worst] <= tol)
    gap = l2_norm_qt(flux_gap_integrand(v, tau), box, cfg)
    e0 = l2_norm_space_at(
        Integrand2D(lambda x, t: v.value(x, t) - data.u0.value(x),
                    tuple(c.fn for c in v.regions.curves),
                    v.x_knots + data.u0.knots, v.t_knots),
        box.domain, 0.0, cfg)
    bound = e0**2 + alpha**2 * gap**2
    return HypercircleReport(member=member, bound=bound,
                             worst_point=(float(X[worst]), float(T[worst])),
                             worst_value=float(violation[worst]))


def efficiency_index(lhs: float, rhs: float) -> float:
    """sqrt(rhs/lhs); +inf when lhs = 0 < rhs, nan when both vanish."""
    if lhs < 0 or rhs < 0:
        raise ValueError("efficiency index needs nonnegative lhs and rhs")
    if lhs == 0.0:
        return math.inf if rhs > 0 else math.nan
    if rhs < lhs - GUARANTEE_SLACK:
        warnings.warn(
            f"majorant {rhs:.6g} fell below the error measure {lhs:.6g}; "
            "this falsifies the guarantee (implementation or admissibility bug)",
            GuaranteeViolationWarning, stacklevel=2)
    return math.sqrt(rhs / lhs)
