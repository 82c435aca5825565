"""Desk-scale benchmark: analytic obstacle problem with known exact solution.

The instance lives on (-1, 1) x (0, 0.5) with zero obstacle.  The exact
solution u = (4|x|/(2t+1) - 1)^2 on N = {4|x| > 2t+1} and 0 on the contact
zone, with matching piecewise source; it is C^1 across the moving contact
line 4|x| = 2t+1.  The module provides the approximation family v_eps, the
one-slab time interpolations w_delta, three flux families (exact gradient,
a two-parameter piecewise-linear family, and a parameter-free curved-front
family), a coefficient optimizer, and reproduction of the five reference
result tables with per-cell deviations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .fields import (FluxField, IntervalDomain, RegionDecomposition, SpaceTimeBox,
                     SpaceTimeField, SpatialField, constant_spatial,
                     friedrichs_constant)
from .incremental import IncrementalApprox, TimePartition, interpolate_in_time
from .majorant import combined_error_norm, efficiency_index, majorant
from .problem import ANALYTIC_CLASSIFIER, CoincidenceClassifier, ProblemData
from .quadrature import QuadratureConfig, integrate_box

T_FINAL = 0.5
OMEGA = IntervalDomain(-1.0, 1.0)
BOX = SpaceTimeBox(OMEGA, T_FINAL)
C_F = friedrichs_constant(OMEGA)          # = 2/pi

EPS_RANGE = (0.0, 0.5)
DELTA_RANGE = (0.0, 0.5)                  # delta in (0, 0.5]


def _xt(x, t):
    return np.asarray(x, dtype=float), np.asarray(t, dtype=float)


def _front(x, t):
    x, t = _xt(x, t)
    return 4.0 * np.abs(x) - (2.0 * t + 1.0)


FRONT = ("contact_front", _front)


def _front_eps(eps: float):
    def fn(x, t):
        x, t = _xt(x, t)
        return 4.0 * np.abs(x) - ((2.0 - eps) * t + 1.0)
    return (f"contact_front_eps[{eps!r}]", fn)


def boundary_values(t):
    """Dirichlet values of the exact solution at x = +-1."""
    t = np.asarray(t, dtype=float)
    return (9.0 - 12.0 * t + 4.0 * t * t) / (2.0 * t + 1.0) ** 2


def exact_solution() -> SpaceTimeField:
    def value(x, t):
        x, t = _xt(x, t)
        s = 4.0 * np.abs(x) / (2.0 * t + 1.0) - 1.0
        return np.where(_front(x, t) > 0, s * s, 0.0)

    def grad_x(x, t):
        x, t = _xt(x, t)
        q = 2.0 * t + 1.0
        g = 32.0 * x / q**2 - np.sign(x) * 8.0 / q
        return np.where(_front(x, t) > 0, g, 0.0)

    def d_t(x, t):
        x, t = _xt(x, t)
        r = np.abs(x)
        q = 2.0 * t + 1.0
        g = -16.0 * r / q**2 * (4.0 * r / q - 1.0)
        return np.where(_front(x, t) > 0, g, 0.0)

    return SpaceTimeField(value, grad_x, d_t,
                          regions=RegionDecomposition.of(FRONT), name="u")


def exact_flux() -> FluxField:
    u = exact_solution()

    def div(x, t):
        x, t = _xt(x, t)
        return np.where(_front(x, t) > 0, 32.0 / (2.0 * t + 1.0) ** 2, 0.0)

    return FluxField(u.grad_x, div, regions=RegionDecomposition.of(FRONT),
                     name="grad u")


make_tau_exact = exact_flux


def source() -> SpaceTimeField:
    def value(x, t):
        x, t = _xt(x, t)
        q = 2.0 * t + 1.0
        g = -16.0 / q**2 * (4.0 * x * x / q - np.abs(x) + 2.0)
        return np.where(_front(x, t) > 0, g, 0.0)

    return SpaceTimeField(value, regions=RegionDecomposition.of(FRONT), name="f")


def initial_datum() -> SpatialField:
    def value(x):
        x = np.asarray(x, dtype=float)
        r = np.abs(x)
        return np.where(4.0 * r > 1.0, 16.0 * x * x - 8.0 * r + 1.0, 0.0)

    def grad(x):
        x = np.asarray(x, dtype=float)
        g = 32.0 * x - 8.0 * np.sign(x)
        return np.where(4.0 * np.abs(x) > 1.0, g, 0.0)

    return SpatialField(value, grad, knots=(-0.25, 0.25), name="u0")


def obstacle() -> SpatialField:
    return constant_spatial(0.0, name="phi")


def solution_slice(t0: float) -> SpatialField:
    """Exact solution at a fixed time, as a spatial field."""
    u = exact_solution()
    c = (2.0 * t0 + 1.0) / 4.0
    return SpatialField(
        value=lambda x: u.value(x, np.full(np.shape(x), t0)),
        grad=lambda x: u.grad_x(x, np.full(np.shape(x), t0)),
        knots=(-c, c), name=f"u(.,{t0:.4g})")


def problem_data(horizon: float = T_FINAL) -> ProblemData:
    return ProblemData(box=SpaceTimeBox(OMEGA, horizon), f=source(),
                       u0=initial_datum(), phi=obstacle(), C_F=C_F,
                       boundary=boundary_values)


def make_v_eps(eps: float) -> SpaceTimeField:
    """Approximation family: exact solution plus a bump vanishing at eps = 0.

    The bump 100*eps*t*(1-|x|)*(|x|-c_eps(t))^2 lives where 4|x| exceeds
    (2-eps)t + 1; the field stays above the obstacle and keeps the exact
    boundary and initial values.
    """
    if not EPS_RANGE[0] <= eps <= EPS_RANGE[1]:
        raise ValueError(f"eps must lie in [0, 1/2], got {eps}")
    u = exact_solution()
    name, inside_fn = _front_eps(eps)

    def bump_parts(x, t):
        x, t = _xt(x, t)
        r = np.abs(x)
        c = ((2.0 - eps) * t + 1.0) / 4.0
        return r, c, inside_fn(x, t) > 0

    def value(x, t):
        r, c, inside = bump_parts(x, t)
        t = np.asarray(t, dtype=float)
        bump = 100.0 * eps * t * (1.0 - r) * (r - c) ** 2
        return u.value(x, t) + np.where(inside, bump, 0.0)

    def grad_x(x, t):
        r, c, inside = bump_parts(x, t)
        t = np.asarray(t, dtype=float)
        g = 100.0 * eps * t * (-((r - c) ** 2) + 2.0 * (1.0 - r) * (r - c))
        return u.grad_x(x, t) + np.where(inside, np.sign(np.asarray(x, dtype=float)) * g, 0.0)

    def d_t(x, t):
        r, c, inside = bump_parts(x, t)
        t = np.asarray(t, dtype=float)
        cp = (2.0 - eps) / 4.0
        g = 100.0 * eps * (1.0 - r) * (r - c) * ((r - c) - 2.0 * t * cp)
        return u.d_t(x, t) + np.where(inside, g, 0.0)

    return SpaceTimeField(value, grad_x, d_t,
                          regions=RegionDecomposition.of(FRONT, (name, inside_fn)),
                          name=f"v_eps[{eps!r}]")


def make_w_delta(delta: float) -> tuple[IncrementalApprox, SpaceTimeField]:
    """One-slab time interpolation between the exact slices at 0 and delta."""
    if not DELTA_RANGE[0] < delta <= DELTA_RANGE[1]:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    part = TimePartition(np.array([0.0, delta]))
    approx = IncrementalApprox(part, [solution_slice(0.0), solution_slice(delta)])
    field = interpolate_in_time(approx)
    field.name = f"w_delta[{delta!r}]"
    return approx, field


def _taud_regions(delta: float):
    def mid(x, t):
        x, t = _xt(x, t)
        return np.abs(x) - (delta + 3.0 * t) / (4.0 * delta)
    return RegionDecomposition.of(FRONT, (f"taud_mid[{delta!r}]", mid)), mid


def _taud_basis(delta: float):
    """tau_delta = xi * A + eta * B; both basis fields vanish on branch 1."""
    _, mid = _taud_regions(delta)

    def branches(x, t):
        x, t = _xt(x, t)
        r = np.abs(x)
        b1 = _front(x, t) <= 0           # |x| <= (1+2t)/4
        b3 = mid(x, t) > 0               # |x| >  (delta+3t)/(4 delta)
        return r, b1, b3

    def a_val(x, t):
        r, b1, b3 = branches(x, t)
        s = np.sign(np.asarray(x, dtype=float))
        t = np.asarray(t, dtype=float)
        v3 = (4.0 / 3.0) * s * (r - 0.25) - s * t / delta
        return np.where(b3, v3, 0.0)

    def a_div(x, t):
        _, b1, b3 = branches(x, t)
        return np.where(b3, 4.0 / 3.0, 0.0)

    def b_val(x, t):
        r, b1, b3 = branches(x, t)
        s = np.sign(np.asarray(x, dtype=float))
        t = np.asarray(t, dtype=float)
        v2 = (4.0 / (3.0 - 2.0 * delta)) * s * (r - (1.0 + 2.0 * t) / 4.0)
        v3 = s * t / delta
        return np.where(b1, 0.0, np.where(b3, v3, v2))

    def b_div(x, t):
        _, b1, b3 = branches(x, t)
        return np.where(b1, 0.0, np.where(b3, 0.0, 4.0 / (3.0 - 2.0 * delta)))

    return (a_val, a_div), (b_val, b_div)


def make_tau_delta(delta: float, xi: float, eta: float) -> FluxField:
    """Two-parameter piecewise-linear flux family on the sub-cylinder Q_delta.

    Zero inside the contact zone, slope eta between the contact front and the
    ray |x| = (delta + 3t)/(4 delta), slope xi outside; continuous across both
    interfaces for every (xi, eta).
    """
    if not DELTA_RANGE[0] < delta <= DELTA_RANGE[1]:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    regions, _ = _taud_regions(delta)
    (a_val, a_div), (b_val, b_div) = _taud_basis(delta)
    return FluxField(
        value=lambda x, t: xi * a_val(x, t) + eta * b_val(x, t),
        div=lambda x, t: xi * a_div(x, t) + eta * b_div(x, t),
        regions=regions, name=f"tau_delta[{delta!r};xi={xi!r},eta={eta!r}]")


def make_tau_hat_delta(delta: float) -> FluxField:
    """Parameter-free flux family with a curved interface matching the exact
    contact front at t = 0 and t = delta; continuous for every delta."""
    if not DELTA_RANGE[0] < delta <= DELTA_RANGE[1]:
        raise ValueError(f"delta must lie in (0, 1/2], got {delta}")
    p = 1.0 + 2.0 * delta

    def interface(x, t):
        x, t = _xt(x, t)
        return np.abs(x) - p * (p - 2.0 * t) / (4.0 * (p * p - 4.0 * t * (1.0 + delta)))

    def value(x, t):
        x, t = _xt(x, t)
        s = np.sign(x)
        r = np.abs(x)
        v = s * (32.0 * (r - (1.0 + 2.0 * t) / 4.0)
                 - (128.0 * (1.0 + delta) * t / p**2) * (r - p / 4.0))
        return np.where(interface(x, t) > 0, v, 0.0)

    def div(x, t):
        x, t = _xt(x, t)
        return np.where(interface(x, t) > 0,
                        32.0 - 128.0 * (1.0 + delta) * t / p**2, 0.0)

    return FluxField(value, div,
                     regions=RegionDecomposition.of(
                         (f"tauhat_front[{delta!r}]", interface)),
                     name=f"tau_hat[{delta!r}]")


# ---------------------------------------------------------------------------
# Coefficient optimizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizerResult:
    xi: float
    eta: float
    rhs: float
    converged: bool
    nfev: int
    message: str = ""


def optimize_xi_eta(delta: float, v: SpaceTimeField, alpha: float,
                    cfg: QuadratureConfig,
                    phi: SpatialField | None = None,
                    classifier: CoincidenceClassifier = ANALYTIC_CLASSIFIER,
                    grid_step: float = 2.0, grid_max: float = 40.0,
                    check: bool = True) -> OptimizerResult:
    """Minimize the majorant over the flux family coefficients (xi, eta).

    Both majorant terms are norms of affine images of (xi, eta), because the
    family's divergence vanishes on the coincidence set of the catalog
    approximations (where the residual is identically zero), so the objective
    is a convex closed form over twelve precomputed Gram integrals.  A coarse
    grid search (step ``grid_step`` on [0, grid_max]^2) seeds a Nelder-Mead
    descent with relative tolerance 1e-4.  When ``check`` is set, the result
    is validated against a direct majorant evaluation; disagreement or a
    non-converged simplex is reported via ``converged``/``message``.
    """
    if phi is None:
        phi = obstacle()
    data = problem_data(horizon=delta)
    box = data.box
    f = data.f
    (a_val, a_div), (b_val, b_div) = _taud_basis(delta)
    regions, _ = _taud_regions(delta)
    curves = tuple(c.fn for c in regions.union(v.regions).curves)
    curves += (classifier.level_curve(v, phi).fn,)
    xk = v.x_knots + phi.knots
    tk = v.t_knots

    def integ(fn):
        return integrate_box(fn, box, cfg, curves=curves, x_knots=xk, t_knots=tk)

    gv = v.grad_x
    g_vv = integ(lambda x, t: gv(x, t) ** 2)
    g_av = integ(lambda x, t: a_val(x, t) * gv(x, t))
    g_bv = integ(lambda x, t: b_val(x, t) * gv(x, t))
    g_aa = integ(lambda x, t: a_val(x, t) ** 2)
    g_ab = integ(lambda x, t: a_val(x, t) * b_val(x, t))
    g_bb = integ(lambda x, t: b_val(x, t) ** 2)

    def off_contact(x, t):
        return ~classifier.coincidence_mask(v, phi, x, t)

    def r0(x, t):
        return np.where(off_contact(x, t), f.value(x, t) - v.d_t(x, t), 0.0)

    h_rr = integ(lambda x, t: r0(x, t) ** 2)
    h_ra = integ(lambda x, t: r0(x, t) * np.where(off_contact(x, t), a_div(x, t), 0.0))
    h_rb = integ(lambda x, t: r0(x, t) * np.where(off_contact(x, t), b_div(x, t), 0.0))
    h_aa = integ(lambda x, t: np.where(off_contact(x, t), a_div(x, t) ** 2, 0.0))
    h_ab = integ(lambda x, t: np.where(off_contact(x, t),
                                       a_div(x, t) * b_div(x, t), 0.0))
    h_bb = integ(lambda x, t: np.where(off_contact(x, t), b_div(x, t) ** 2, 0.0))

    def objective(p):
        xi, eta = p
        gap_sq = (g_vv + xi**2 * g_aa + eta**2 * g_bb
                  + 2 * xi * eta * g_ab - 2 * xi * g_av - 2 * eta * g_bv)
        res_sq = (h_rr + xi**2 * h_aa + eta**2 * h_bb
                  + 2 * xi * h_ra + 2 * eta * h_rb + 2 * xi * eta * h_ab)
        return alpha * (math.sqrt(max(gap_sq, 0.0))
                        + C_F * math.sqrt(max(res_sq, 0.0))) ** 2

    grid = np.arange(0.0, grid_max + 0.5 * grid_step, grid_step)
    best_val = math.inf
    best_p = (0.0, 0.0)
    for xi in grid:
        for eta in grid:
            val = objective((xi, eta))
            if val < best_val:
                best_val, best_p = val, (float(xi), float(eta))

    res = minimize(objective, best_p, method="Nelder-Mead",
                   options={"xatol": 1e-3, "fatol": 1e-4 * max(best_val, 1e-12),
                            "maxiter": 2000})
    xi_opt, eta_opt = float(res.x[0]), float(res.x[1])
    rhs_model = float(res.fun)
    converged = bool(res.success)
    message = "" if converged else str(res.message)

    if check:
        direct = majorant(v, make_tau_delta(delta, xi_opt, eta_opt), data,
                          alpha, classifier, cfg)
        drift = abs(direct.total - rhs_model)
        if drift > 1e-2 * max(direct.total, 1e-8):
            converged = False
            message = (message + " " if message else "") + \
                f"closed-form/direct mismatch {drift:.3e}"
        rhs_model = direct.total
    return OptimizerResult(xi=xi_opt, eta=eta_opt, rhs=rhs_model,
                           converged=converged, nfev=int(res.nfev),
                           message=message)


# ---------------------------------------------------------------------------
# Published reference tables (2-3 printed digits)
# ---------------------------------------------------------------------------

TABLE1_EPS = (0.50, 0.35, 0.25, 0.15, 0.05, 0.00)

REF_TABLE1 = {
    0.50: {"eT_sq": 21.21e-2, "grad_sq": 2.42, "e0_sq": 0.0,
           "flux_gap": 1.56, "residual_norm": 0.87},
    0.35: {"eT_sq": 8.20e-2, "grad_sq": 1.07, "e0_sq": 0.0,
           "flux_gap": 1.03, "residual_norm": 0.59},
    0.25: {"eT_sq": 3.55e-2, "grad_sq": 0.51, "e0_sq": 0.0,
           "flux_gap": 0.71, "residual_norm": 0.41},
    0.15: {"eT_sq": 1.08e-2, "grad_sq": 0.17, "e0_sq": 0.0,
           "flux_gap": 0.41, "residual_norm": 0.24},
    0.05: {"eT_sq": 1.02e-3, "grad_sq": 1.75e-2, "e0_sq": 0.0,
           "flux_gap": 0.13, "residual_norm": 7.87e-2},
    0.00: {"eT_sq": 0.0, "grad_sq": 0.0, "e0_sq": 0.0,
           "flux_gap": 0.0, "residual_norm": 0.0},
}

REF_TABLE2 = {
    (0.50, 1.0): (2.63, 4.47, 1.304), (0.50, 2.0): (3.84, 8.94, 1.526),
    (0.35, 1.0): (1.15, 1.98, 1.312), (0.35, 2.0): (1.69, 3.95, 1.529),
    (0.25, 1.0): (0.55, 0.94, 1.307), (0.25, 2.0): (0.80, 1.89, 1.537),
    (0.15, 1.0): (0.18, 0.32, 1.333), (0.15, 2.0): (0.27, 0.63, 1.528),
    (0.05, 1.0): (1.85e-2, 3.24e-2, 1.323), (0.05, 2.0): (2.73e-2, 6.49e-2, 1.542),
    (0.00, 1.0): (0.0, 0.0, None), (0.00, 2.0): (0.0, 0.0, None),
}

REF_TABLE3 = {
    0.5: (16.07, 5.62, 0.33, 19.89, 7.722),
    0.3: (18.68, 9.61, 0.13, 8.27, 7.829),
    0.2: (20.30, 12.78, 0.06, 3.64, 7.857),
    0.1: (22.18, 17.33, 0.01, 0.72, 8.487),
}

REF_TABLE4 = {
    0.5: (18.08, 7.22, 4.54, 27.41, 2.456),
    0.3: (21.54, 10.23, 0.89, 22.43, 5.024),
    0.2: (22.38, 12.92, 0.20, 9.86, 6.963),
}

REF_TABLE5 = {
    ("v_eps", 0.3): (0.13, 8.43, 7.901),
    ("v_eps", 0.2): (0.06, 1.58, 5.179),
    ("v_eps", 0.1): (0.01, 0.34, 5.860),
    ("w_delta", 0.5): (4.54, 24.68, 2.331),
    ("w_delta", 0.3): (0.89, 9.13, 3.021),
    ("w_delta", 0.2): (0.20, 3.93, 1.983),
}

TABLE5_EPS = 0.2    # the v_eps block uses this fixed approximation parameter


def deviation(ours: float, reference: float) -> float:
    """Relative deviation from the published value (absolute when it is 0)."""
    if reference == 0.0:
        return ours
    return (ours - reference) / abs(reference)


@lru_cache(maxsize=None)
def _error_components_v_eps(eps: float, horizon: float,
                            cfg: QuadratureConfig) -> tuple[float, float]:
    data = problem_data(horizon)
    m = combined_error_norm(exact_solution(), make_v_eps(eps), 1.0, data, cfg)
    return m.eT_sq, m.grad_sq


@lru_cache(maxsize=None)
def _error_components_w(delta: float, cfg: QuadratureConfig) -> tuple[float, float]:
    data = problem_data(delta)
    _, w = make_w_delta(delta)
    m = combined_error_norm(exact_solution(), w, 1.0, data, cfg)
    return m.eT_sq, m.grad_sq


@lru_cache(maxsize=None)
def table1_components(eps: float, cfg: QuadratureConfig) -> dict:
    """The five reported quantities for (v_eps, exact flux) on the full box."""
    data = problem_data()
    v = make_v_eps(eps)
    eT_sq, grad_sq = _error_components_v_eps(eps, T_FINAL, cfg)
    b = majorant(v, exact_flux(), data, 1.0, ANALYTIC_CLASSIFIER, cfg)
    return {"eT_sq": eT_sq, "grad_sq": grad_sq, "e0_sq": b.e0_sq,
            "flux_gap": b.flux_gap, "residual_norm": b.residual_norm}


def _with_reference(row: dict, computed: dict, reference: dict) -> dict:
    for key, val in computed.items():
        row[key] = val
        if key in reference and reference[key] is not None:
            row[f"{key}_ref"] = reference[key]
            row[f"{key}_dev"] = deviation(val, reference[key])
    return row


def reproduce_table1(cfg: QuadratureConfig) -> list[dict]:
    rows = []
    for eps in TABLE1_EPS:
        comp = table1_components(eps, cfg)
        rows.append(_with_reference({"eps": eps}, comp, REF_TABLE1[eps]))
    return rows


def reproduce_table2(cfg: QuadratureConfig) -> list[dict]:
    rows = []
    for eps in TABLE1_EPS:
        comp = table1_components(eps, cfg)
        row: dict = {"eps": eps}
        for alpha in (1.0, 2.0):
            lhs = comp["eT_sq"] + (2.0 - 1.0 / alpha) * comp["grad_sq"]
            rhs = comp["e0_sq"] + alpha * (
                comp["flux_gap"] + C_F * comp["residual_norm"]) ** 2
            ieff = efficiency_index(lhs, rhs)
            plhs, prhs, pieff = REF_TABLE2[(eps, alpha)]
            tag = f"a{int(alpha)}"
            computed = {f"lhs_{tag}": lhs, f"rhs_{tag}": rhs, f"ieff_{tag}": ieff}
            refs = {f"lhs_{tag}": plhs, f"rhs_{tag}": prhs, f"ieff_{tag}": pieff}
            _with_reference(row, computed, refs)
        rows.append(row)
    return rows


def _taud_row(delta: float, v: SpaceTimeField, lhs_parts: tuple[float, float],
              reference: tuple, cfg: QuadratureConfig,
              optimize: bool = True) -> dict:
    xi_p, eta_p, lhs_p, rhs_p, ieff_p = reference
    data = problem_data(delta)
    eT_sq, grad_sq = lhs_parts
    lhs = eT_sq + grad_sq
    b = majorant(v, make_tau_delta(delta, xi_p, eta_p), data, 1.0,
                 ANALYTIC_CLASSIFIER, cfg)
    row: dict = {"delta": delta, "xi": xi_p, "eta": eta_p}
    _with_reference(row, {"lhs": lhs, "rhs": b.total,
                      "ieff": efficiency_index(lhs, b.total)},
                {"lhs": lhs_p, "rhs": rhs_p, "ieff": ieff_p})
    if optimize:
        opt = optimize_xi_eta(delta, v, 1.0, cfg)
        row.update({"xi_opt": opt.xi, "eta_opt": opt.eta, "rhs_opt": opt.rhs,
                    "xi_opt_dev": deviation(opt.xi, xi_p),
                    "eta_opt_dev": deviation(opt.eta, eta_p),
                    "rhs_opt_vs_ref": deviation(opt.rhs, rhs_p),
                    "opt_converged": opt.converged})
    return row


def reproduce_table3(cfg: QuadratureConfig, optimize: bool = True) -> list[dict]:
    rows = []
    for delta, reference in REF_TABLE3.items():
        v = make_v_eps(TABLE5_EPS)
        parts = _error_components_v_eps(TABLE5_EPS, delta, cfg)
        rows.append(_taud_row(delta, v, parts, reference, cfg, optimize))
    return rows


def reproduce_table4(cfg: QuadratureConfig, optimize: bool = True) -> list[dict]:
    rows = []
    for delta, reference in REF_TABLE4.items():
        _, w = make_w_delta(delta)
        parts = _error_components_w(delta, cfg)
        rows.append(_taud_row(delta, w, parts, reference, cfg, optimize))
    return rows


def reproduce_table5(cfg: QuadratureConfig) -> list[dict]:
    rows = []
    for (family, delta), (lhs_p, rhs_p, ieff_p) in REF_TABLE5.items():
        if family == "v_eps":
            v = make_v_eps(TABLE5_EPS)
            eT_sq, grad_sq = _error_components_v_eps(TABLE5_EPS, delta, cfg)
        else:
            _, v = make_w_delta(delta)
            eT_sq, grad_sq = _error_components_w(delta, cfg)
        lhs = eT_sq + grad_sq
        data = problem_data(delta)
        b = majorant(v, make_tau_hat_delta(delta), data, 1.0,
                     ANALYTIC_CLASSIFIER, cfg)
        row: dict = {"family": family, "delta": delta}
        _with_reference(row, {"lhs": lhs, "rhs": b.total,
                          "ieff": efficiency_index(lhs, b.total)},
                    {"lhs": lhs_p, "rhs": rhs_p, "ieff": ieff_p})
        rows.append(row)
    return rows


def reproduce_table(n: int, cfg: QuadratureConfig, optimize: bool = True) -> list[dict]:
    """Recompute every numeric cell of reference table ``n`` (1..5)."""
    if n == 1:
        return reproduce_table1(cfg)
    if n == 2:
        return reproduce_table2(cfg)
    if n == 3:
        return reproduce_table3(cfg, optimize)
    if n == 4:
        return reproduce_table4(cfg, optimize)
    if n == 5:
        return reproduce_table5(cfg)
    raise ValueError(f"table index must be 1..5, got {n}")
