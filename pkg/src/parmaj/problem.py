"""Problem instance bundle and the coincidence-set classifier."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import BreakCurve, SpaceTimeBox, SpaceTimeField, SpatialField


class ObstacleViolationError(Exception):
    """An approximation dips below the obstacle beyond tolerance."""

    def __init__(self, point, value, message=""):
        self.point = point
        self.value = value
        super().__init__(
            message or f"obstacle constraint violated at {point}: v - phi = {value:.3e}")


@dataclass(frozen=True)
class CoincidenceClassifier:
    """Splits Q_T into the coincidence set {|v - phi| <= tol_c} and its complement.

    Analytic catalog fields sit on the obstacle exactly (tol_c ~ 1e-12);
    solver-produced fields land on it only approximately (tol_c ~ 1e-8).
    """

    tol_c: float = 1e-12

    def __post_init__(self):
        if self.tol_c < 0:
            raise ValueError("tol_c must be nonnegative")

    def coincidence_mask(self, v: SpaceTimeField, phi: SpatialField, x, t):
        return np.abs(v.value(x, t) - phi.value(x)) <= self.tol_c

    def level_curve(self, v: SpaceTimeField, phi: SpatialField) -> BreakCurve:
        """Level function vanishing on the coincidence boundary."""
        fn = lambda x, t: np.abs(v.value(x, t) - phi.value(x)) - self.tol_c
        return BreakCurve(f"coincidence[{v.name or id(v)}]", fn)

    def spatial_mask(self, v: SpatialField, phi: SpatialField, x):
        return np.abs(v.value(x) - phi.value(x)) <= self.tol_c


ANALYTIC_CLASSIFIER = CoincidenceClassifier(tol_c=1e-12)
SOLVER_CLASSIFIER = CoincidenceClassifier(tol_c=1e-8)


@dataclass(frozen=True)
class ProblemData:
    """One obstacle-problem instance: domain, data, and Friedrichs constant.

    ``boundary`` is an optional Dirichlet schedule t -> value imposed at both
    endpoints (None means homogeneous).  It only matters to the demo solver;
    the estimates use differences v - u that vanish on the lateral boundary.
    """

    box: SpaceTimeBox
    f: SpaceTimeField
    u0: SpatialField
    phi: SpatialField
    C_F: float
    boundary: Callable | None = None

    def __post_init__(self):
        if not self.C_F > 0:
            raise ValueError(f"C_F must be positive, got {self.C_F}")
        dom = self.box.domain
        for xb in (dom.a, dom.b):
            pv = float(np.asarray(self.phi.value(np.array([xb]))).ravel()[0])
            if pv > 1e-12:
                raise ValueError(
                    f"obstacle must satisfy phi <= 0 on the boundary; "
                    f"phi({xb}) = {pv:.3e}")
        xs = np.linspace(dom.a, dom.b, 513)
        gap = np.asarray(self.u0.value(xs)) - np.asarray(self.phi.value(xs))
        worst = int(np.argmin(gap))
        if gap[worst] < -1e-12:
            raise ValueError(
                f"initial datum below obstacle: u0 - phi = {gap[worst]:.3e} "
                f"at x = {xs[worst]:.6f}")
