"""Command-line front end.

Subcommands: majorant, tables, increment, coarsen, signorini, solve.  Every
command prints a human-readable table, optionally writes a CSV (6 significant
digits, LF, comma separated) and renders figures next to it unless
--no-figures is given.  Flags override an optional JSON config file.

Exit codes: 0 success; 1 configuration or numerical failure; 2 when a
computed majorant falls below the error it must bound (guarantee violation,
which indicates an implementation or admissibility bug).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import benchmark as bm
from .incremental import (advanced_incremental_majorant, interpolate_in_time,
                          simple_incremental_majorant, TimePartition)
from .majorant import (GUARANTEE_SLACK, combined_error_norm, efficiency_index,
                       majorant)
from .coarsening import (CoarseningPair, coarsening_bound_coarse,
                         coarsening_bound_sharp)
from .problem import (ANALYTIC_CLASSIFIER, SOLVER_CLASSIFIER, ProblemData)
from .quadrature import QuadratureConfig, QuadratureError
from .signorini import (perturbed_member, signorini_error_measure,
                        signorini_majorant, switching_contact_example)
from .solver import SolverConfig, SpatialGrid, solve_sequence
from . import reporting

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_GUARANTEE_VIOLATED = 2


def guarantee_holds(lhs: float, rhs: float) -> bool:
    return rhs >= lhs - GUARANTEE_SLACK


def _quad_config(args) -> QuadratureConfig:
    return QuadratureConfig(base_cells=args.base_cells, tol=args.tol_q,
                            max_levels=args.max_levels)


def _figure_path(out: str | None, suffix: str, figdir: str | None) -> Path:
    base = Path(out) if out else Path("parmaj_report.csv")
    stem = base.with_suffix("")
    if figdir:
        return Path(figdir) / f"{stem.name}_{suffix}.png"
    return Path(f"{stem}_{suffix}.png")


def _emit(rows, args, label: str) -> None:
    print(reporting.print_table(rows))
    if args.out:
        path = reporting.write_csv(rows, args.out)
        print(f"wrote {path}")


def _violations(pairs) -> list[str]:
    bad = []
    for label, lhs, rhs in pairs:
        if not guarantee_holds(lhs, rhs):
            bad.append(f"{label}: majorant {rhs:.6g} < error {lhs:.6g}")
    return bad


def _report_violations(bad: list[str]) -> int:
    for line in bad:
        print(f"GUARANTEE VIOLATED  {line}", file=sys.stderr)
    return EXIT_GUARANTEE_VIOLATED if bad else EXIT_OK


# ---------------------------------------------------------------------------
# majorant
# ---------------------------------------------------------------------------

def _pick_v(args):
    if args.family == "v_eps":
        if args.eps is None:
            raise ValueError("--eps is required for family v_eps")
        return bm.make_v_eps(args.eps)
    if args.family == "w_delta":
        if args.delta is None:
            raise ValueError("--delta is required for family w_delta")
        return bm.make_w_delta(args.delta)[1]
    raise ValueError(f"unknown family {args.family!r}")


def _pick_tau(args, v, cfg):
    if args.tau == "exact":
        return bm.make_tau_exact(), None
    if args.delta is None:
        raise ValueError(f"--delta is required for tau {args.tau!r}")
    if args.tau == "tau_hat":
        return bm.make_tau_hat_delta(args.delta), None
    if args.tau == "tau_delta":
        if args.xi is None or args.eta is None:
            opt = bm.optimize_xi_eta(args.delta, v, args.alpha[0], cfg)
            return bm.make_tau_delta(args.delta, opt.xi, opt.eta), opt
        return bm.make_tau_delta(args.delta, args.xi, args.eta), None
    raise ValueError(f"unknown tau {args.tau!r}")


def cmd_majorant(args) -> int:
    cfg = _quad_config(args)
    v = _pick_v(args)
    tau, opt = _pick_tau(args, v, cfg)
    if args.horizon is not None:
        horizon = args.horizon
    elif args.tau in ("tau_delta", "tau_hat") or args.family == "w_delta":
        horizon = args.delta
    else:
        horizon = bm.T_FINAL
    data = bm.problem_data(horizon)
    u = bm.exact_solution()

    rows = []
    checks = []
    for alpha in args.alpha:
        err = combined_error_norm(u, v, alpha, data, cfg)
        b = majorant(v, tau, data, alpha, ANALYTIC_CLASSIFIER, cfg)
        rows.append({
            "family": args.family, "eps": args.eps, "delta": args.delta,
            "tau": args.tau, "alpha": alpha,
            "eT_sq": err.eT_sq, "grad_sq": err.grad_sq, "lhs": err.combined,
            "e0_sq": b.e0_sq, "flux_gap": b.flux_gap,
            "residual_norm": b.residual_norm, "rhs": b.total,
            "i_eff": efficiency_index(err.combined, b.total),
        })
        if opt is not None:
            rows[-1].update({"xi": opt.xi, "eta": opt.eta})
        elif args.xi is not None:
            rows[-1].update({"xi": args.xi, "eta": args.eta})
        checks.append((f"alpha={alpha}", err.combined, b.total))
    _emit(rows, args, "majorant")
    if args.figures:
        p1 = reporting.figure_profiles(
            u, v, horizon, _figure_path(args.out, "profiles", args.figures_dir))
        p2 = reporting.figure_flux(
            tau, horizon, _figure_path(args.out, "flux", args.figures_dir))
        print(f"wrote {p1}\nwrote {p2}")
    return _report_violations(_violations(checks))


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def cmd_tables(args) -> int:
    cfg = _quad_config(args)
    which = list(range(1, 6)) if args.which == "all" else [int(args.which)]
    exit_code = EXIT_OK
    for n in which:
        rows = bm.reproduce_table(n, cfg, optimize=not args.no_optimize)
        out = args.out
        if len(which) > 1 and out:
            stem = Path(out).with_suffix("")
            out = f"{stem}_t{n}{Path(args.out).suffix or '.csv'}"
        print(f"--- table {n} ---")
        print(reporting.print_table(rows))
        if out:
            print(f"wrote {reporting.write_csv(rows, out)}")
        if args.figures:
            fig_path = _figure_path(out or f"table{n}.csv", "fig", args.figures_dir)
            if n == 1:
                reporting.figure_table1_components(rows, fig_path)
            elif n == 2:
                reporting.figure_error_vs_majorant(
                    rows, fig_path, label_key="eps",
                    lhs_key="lhs_a1", rhs_key="rhs_a1")
            else:
                reporting.figure_error_vs_majorant(rows, fig_path,
                                                   label_key="delta")
            print(f"wrote {fig_path}")
        pairs = []
        for row in rows:
            if "lhs" in row and "rhs" in row:
                pairs.append((f"table{n} row {row.get('delta', row.get('eps'))}",
                              row["lhs"], row["rhs"]))
            for a in ("a1", "a2"):
                if f"lhs_{a}" in row:
                    pairs.append((f"table{n} row {row.get('eps')} {a}",
                                  row[f"lhs_{a}"], row[f"rhs_{a}"]))
        code = _report_violations(_violations(pairs))
        exit_code = max(exit_code, code)
    return exit_code


# ---------------------------------------------------------------------------
# increment
# ---------------------------------------------------------------------------

def cmd_increment(args) -> int:
    cfg = _quad_config(args)
    data = bm.problem_data()
    part = TimePartition.uniform(bm.T_FINAL, args.steps)
    if args.source == "solver":
        grid = SpatialGrid(bm.OMEGA.a, bm.OMEGA.b, args.nodes)
        approx, fluxes = solve_sequence(data, part, grid, SolverConfig(), cfg)
        classifier = SOLVER_CLASSIFIER
    else:
        from .incremental import FluxSequence, IncrementalApprox, average_gradients
        grid = SpatialGrid(bm.OMEGA.a, bm.OMEGA.b, args.nodes)
        nodes = grid.nodes
        u = bm.exact_solution()
        values = np.stack([u.value(nodes, np.full_like(nodes, t))
                           for t in part.nodes])
        approx = IncrementalApprox.from_nodal(part, nodes, values)
        fluxes = FluxSequence(part, tuple(
            average_gradients(nodes, row) for row in values))
        classifier = SOLVER_CLASSIFIER
    v = interpolate_in_time(approx)
    err = combined_error_norm(bm.exact_solution(), v, args.alpha[0], data, cfg)

    kinds = ("simple", "advanced") if args.majorant == "both" else (args.majorant,)
    rows = []
    checks = []
    reports = []
    for kind in kinds:
        fn = (simple_incremental_majorant if kind == "simple"
              else advanced_incremental_majorant)
        rep = fn(approx, fluxes, data.f, data.phi, data.u0, args.alpha[0],
                 bm.C_F, cfg, bm.OMEGA, classifier)
        reports.append(rep)
        rows.append({"kind": kind, "steps": args.steps, "nodes": args.nodes,
                     "alpha": args.alpha[0], "true_error": err.combined,
                     "majorant": rep.total, "e0_sq": rep.e0_sq,
                     "source_mismatch_sq": rep.source_mismatch_sq,
                     "i_eff": efficiency_index(err.combined, rep.total)})
        checks.append((kind, err.combined, rep.total))
    _emit(rows, args, "increment")
    if args.figures:
        for rep in reports:
            p = reporting.figure_slab_terms(
                rep, _figure_path(args.out, f"slabs_{rep.kind}", args.figures_dir))
            print(f"wrote {p}")
    return _report_violations(_violations(checks))


# ---------------------------------------------------------------------------
# coarsen
# ---------------------------------------------------------------------------

def cmd_coarsen(args) -> int:
    cfg = _quad_config(args)
    fine = bm.problem_data()
    shift = args.shift
    if args.mode == "indicator":
        # bump the source on the exact contact zone; there the stand-in coarse
        # solution (the fine one) sits on the obstacle and f - f~ = -shift < 0,
        # so the contact-aware bound filters the perturbation away entirely.
        front = bm._front

        def f_coarse_value(x, t):
            base = fine.f.value(x, t)
            return base + np.where(front(x, t) > 0, 0.0, shift)

        from .fields import SpaceTimeField
        f_coarse = SpaceTimeField(f_coarse_value, regions=fine.f.regions,
                                  name="f+indicator")
        coarse = ProblemData(box=fine.box, f=f_coarse, u0=fine.u0,
                             phi=fine.phi, C_F=fine.C_F, boundary=fine.boundary)
        pair = CoarseningPair(fine=fine, coarse=coarse,
                              coarse_solution=bm.exact_solution())
        sharp = coarsening_bound_sharp(pair, args.alpha[0], cfg)
    else:
        from .fields import SpaceTimeField
        f_coarse = SpaceTimeField(
            lambda x, t: fine.f.value(x, t) - shift,
            regions=fine.f.regions, name="f-const")
        coarse = ProblemData(box=fine.box, f=f_coarse, u0=fine.u0,
                             phi=fine.phi, C_F=fine.C_F, boundary=fine.boundary)
        pair = CoarseningPair(fine=fine, coarse=coarse)
        sharp = None
    coarse_bound = coarsening_bound_coarse(pair, args.alpha[0], cfg)
    rows = [{"mode": args.mode, "shift": shift, "alpha": args.alpha[0],
             "sharp_bound": sharp, "coarse_bound": coarse_bound}]
    _emit(rows, args, "coarsen")
    if args.figures:
        fig_rows = [{"label": "bounds",
                     "lhs": 0.0 if sharp is None else sharp,
                     "rhs": coarse_bound}]
        p = reporting.figure_error_vs_majorant(
            fig_rows, _figure_path(args.out, "bounds", args.figures_dir),
            label_key="label")
        print(f"wrote {p}")
    if sharp is not None and sharp > coarse_bound + GUARANTEE_SLACK:
        print("GUARANTEE VIOLATED  sharp bound exceeds coarse bound",
              file=sys.stderr)
        return EXIT_GUARANTEE_VIOLATED
    return EXIT_OK


# ---------------------------------------------------------------------------
# signorini
# ---------------------------------------------------------------------------

def cmd_signorini(args) -> int:
    cfg = _quad_config(args)
    u, tau, data, boundary = switching_contact_example()
    v = perturbed_member(u, args.perturb) if args.perturb else u
    lhs = signorini_error_measure(u, v, args.alpha[0], data, cfg)
    b = signorini_majorant(v, tau, data, boundary, args.alpha[0], cfg)
    rows = [{"perturb": args.perturb, "alpha": args.alpha[0], "lhs": lhs,
             "rhs": b.total, "e0_sq": b.e0_sq, "flux_gap": b.flux_gap,
             "residual_norm": b.residual_norm, "boundary_term": b.boundary_term,
             "i_eff": efficiency_index(lhs, b.total) if lhs > 0 else None}]
    _emit(rows, args, "signorini")
    if args.figures:
        p = reporting.figure_profiles(
            u, v if args.perturb else None, data.box.horizon,
            _figure_path(args.out, "profiles", args.figures_dir),
            domain=(data.box.domain.a, data.box.domain.b))
        print(f"wrote {p}")
    return _report_violations(_violations([("signorini", lhs, b.total)]))


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    cfg = _quad_config(args)
    data = bm.problem_data()
    grid = SpatialGrid(bm.OMEGA.a, bm.OMEGA.b, args.nodes)
    part = TimePartition.uniform(bm.T_FINAL, args.steps)
    approx, fluxes = solve_sequence(data, part, grid, SolverConfig(), cfg)
    u = bm.exact_solution()
    nodes = grid.nodes
    rows = []
    phi = data.phi.value(nodes)
    for k, t in enumerate(part.nodes):
        vk = approx.values[k]
        exact = u.value(nodes, np.full_like(nodes, t))
        rows.append({"step": k, "t": t,
                     "min_gap": float(np.min(vk - phi)),
                     "max_value": float(np.max(vk)),
                     "nodal_l2_error": float(
                         math.sqrt(grid.h * float(np.sum((vk - exact) ** 2))))})
    _emit(rows, args, "solve")
    if args.figures:
        p = reporting.figure_solution_evolution(
            nodes, approx.values, _figure_path(args.out, "evolution",
                                               args.figures_dir))
        print(f"wrote {p}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parmaj",
        description="Guaranteed error bounds for parabolic obstacle problems")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--alpha", type=float, action="append",
                       help="majorant weight(s) alpha >= 1/2 (repeatable)")
        p.add_argument("--tol-q", dest="tol_q", type=float, default=None,
                       help="relative quadrature tolerance")
        p.add_argument("--base-cells", dest="base_cells", type=int, default=None)
        p.add_argument("--max-levels", dest="max_levels", type=int, default=None)
        p.add_argument("--out", type=str, default=None, help="CSV output path")
        p.add_argument("--figures", dest="figures", action="store_true",
                       default=None, help="render figures next to the CSV")
        p.add_argument("--no-figures", dest="figures", action="store_false")
        p.add_argument("--figures-dir", type=str, default=None)

    p = sub.add_parser("majorant", help="error measure and majorant for a "
                                        "catalog approximation/flux pair")
    common(p)
    p.add_argument("--family", choices=("v_eps", "w_delta"), required=True)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--tau", choices=("exact", "tau_delta", "tau_hat"),
                   default="exact")
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.set_defaults(handler=cmd_majorant)

    p = sub.add_parser("tables", help="recompute the published reference tables "
                                      "with deviations")
    common(p)
    p.add_argument("--which", type=str, required=True,
                   help="table index 1..5 or 'all'")
    p.add_argument("--no-optimize", action="store_true",
                   help="skip the coefficient optimizer columns")
    p.set_defaults(handler=cmd_tables)

    p = sub.add_parser("increment", help="incremental majorants for solver "
                                         "output or exact nodal traces")
    common(p)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--nodes", type=int, default=201)
    p.add_argument("--majorant", choices=("simple", "advanced", "both"),
                   default="both")
    p.add_argument("--source", choices=("solver", "exact"), default="solver")
    p.set_defaults(handler=cmd_increment)

    p = sub.add_parser("coarsen", help="modeling-error bounds for simplified "
                                       "source data")
    common(p)
    p.add_argument("--mode", choices=("indicator", "constant"),
                   default="indicator")
    p.add_argument("--shift", type=float, default=1.0)
    p.set_defaults(handler=cmd_coarsen)

    p = sub.add_parser("signorini", help="thin-obstacle majorant on the "
                                         "switching-contact example")
    common(p)
    p.add_argument("--perturb", type=float, default=0.5)
    p.set_defaults(handler=cmd_signorini)

    p = sub.add_parser("solve", help="run the projected-relaxation demo solver")
    common(p)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--nodes", type=int, default=201)
    p.set_defaults(handler=cmd_solve)
    return parser


_DEFAULTS = {"alpha": [1.0], "tol_q": 1e-6, "base_cells": 64, "max_levels": 12,
             "figures": True}


def _apply_config(args: argparse.Namespace) -> argparse.Namespace:
    file_defaults = {}
    if args.config:
        try:
            file_defaults = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config file {args.config!r}: {exc}")
        if not isinstance(file_defaults, dict):
            raise ValueError("config file must contain a JSON object")
    for key, fallback in {**_DEFAULTS, **file_defaults}.items():
        if getattr(args, key, None) is None:
            setattr(args, key, fallback)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for guarantee
        # violations here, so remap anything nonzero to the failure code.
        return EXIT_OK if exc.code in (0, None) else EXIT_FAILURE
    try:
        args = _apply_config(args)
        return args.handler(args)
    except QuadratureError as exc:
        print(f"error: quadrature did not converge "
              f"({exc.previous!r} -> {exc.last!r}); raise --max-levels or "
              f"loosen --tol-q", file=sys.stderr)
        return EXIT_FAILURE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
