"""Bounds for the modeling error introduced by simplifying the problem data.

Replacing (f, u0) by simplified (f~, u0~) changes the exact solution from u
to u~; the combined error norm of u - u~ admits two computable bounds that
need no knowledge of either solution beyond, for the sharp variant, the
coincidence set of u~:

  sharp :  ||u0 - u0~||^2 + alpha C_F^2 ||g||^2,   g = f - f~ off the contact
           set of u~ and {f - f~}_+ on it;
  coarse:  ||u0 - u0~||^2 + alpha C_F^2 ||f - f~||^2.

Pointwise |g| <= |f - f~|, so sharp <= coarse always.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import SpaceTimeField, positive_part
from .problem import ANALYTIC_CLASSIFIER, CoincidenceClassifier, ProblemData
from .quadrature import Integrand2D, QuadratureConfig, l2_norm_interval, l2_norm_qt


class MissingCoarseSolutionError(Exception):
    """The sharp bound needs the coarse solution; fall back to the coarse bound."""


@dataclass(frozen=True)
class CoarseningPair:
    """Fine and simplified problem data sharing domain, obstacle and C_F.

    ``coarse_solution`` is the exact solution of the simplified problem (or a
    stand-in whose coincidence set is used as given); it is only needed by the
    sharp bound.
    """

    fine: ProblemData
    coarse: ProblemData
    coarse_solution: SpaceTimeField | None = None
    classifier: CoincidenceClassifier = field(default=ANALYTIC_CLASSIFIER)

    def __post_init__(self):
        if self.fine.box != self.coarse.box:
            raise ValueError("coarsening pair must share the space-time box")
        if self.fine.C_F != self.coarse.C_F:
            raise ValueError("coarsening pair must share the Friedrichs constant")
        dom = self.fine.box.domain
        xs = np.linspace(dom.a, dom.b, 65)
        if not np.allclose(np.asarray(self.fine.phi.value(xs)),
                           np.asarray(self.coarse.phi.value(xs)),
                           rtol=0.0, atol=1e-12):
            raise ValueError("coarsening pair must share the obstacle")


def _initial_mismatch_sq(pair: CoarseningPair, cfg: QuadratureConfig) -> float:
    u0, u0c = pair.fine.u0, pair.coarse.u0
    fn = lambda x: np.asarray(u0.value(x)) - np.asarray(u0c.value(x))
    return l2_norm_interval(fn, pair.fine.box.domain, cfg,
                            knots=u0.knots + u0c.knots,
                            curves=u0.curves + u0c.curves) ** 2


def _source_gap(pair: CoarseningPair) -> Integrand2D:
    f, fc = pair.fine.f, pair.coarse.f
    curves = tuple(c.fn for c in f.regions.union(fc.regions).curves)
    return Integrand2D(lambda x, t: f.value(x, t) - fc.value(x, t), curves,
                       f.x_knots + fc.x_knots, f.t_knots + fc.t_knots)


def coarsening_bound_sharp(pair: CoarseningPair, alpha: float,
                           cfg: QuadratureConfig) -> float:
    """Contact-aware bound; positive-part filtering on the coarse solution's
    coincidence set can remove source perturbations entirely."""
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    if pair.coarse_solution is None:
        raise MissingCoarseSolutionError(
            "sharp bound needs the coarse solution's coincidence set; "
            "use coarsening_bound_coarse instead")
    diff = _source_gap(pair)
    ut = pair.coarse_solution
    phi = pair.fine.phi
    classifier = pair.classifier

    def g(x, t):
        d = diff.fn(x, t)
        on_obstacle = classifier.coincidence_mask(ut, phi, x, t)
        return np.where(on_obstacle, positive_part(d), d)

    curves = diff.curves + tuple(c.fn for c in ut.regions.curves)
    curves += (classifier.level_curve(ut, phi).fn, diff.fn)
    g_norm = l2_norm_qt(Integrand2D(g, curves, diff.x_knots + ut.x_knots + phi.knots,
                                    diff.t_knots + ut.t_knots),
                        pair.fine.box, cfg)
    C_F = pair.fine.C_F
    return _initial_mismatch_sq(pair, cfg) + alpha * C_F**2 * g_norm**2


def coarsening_bound_coarse(pair: CoarseningPair, alpha: float,
                            cfg: QuadratureConfig) -> float:
    """Contact-free bound using the plain source mismatch norm."""
    if alpha < 0.5:
        raise ValueError(f"alpha must be >= 1/2, got {alpha}")
    gap_norm = l2_norm_qt(_source_gap(pair), pair.fine.box, cfg)
    C_F = pair.fine.C_F
    return _initial_mismatch_sq(pair, cfg) + alpha * C_F**2 * gap_norm**2
