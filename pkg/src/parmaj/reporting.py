"""Delimited output and figure rendering for the CLI report paths.

CSV contract: header + rows, '.' decimal point, ',' separator, LF line
terminator, reals printed with 6 significant digits; identical inputs produce
byte-identical files.  Figures are rendered with the Agg backend next to the
delimited output (PNG, 150 dpi).
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    fv = float(v)
    if math.isnan(fv):
        return ""
    if math.isinf(fv):
        return "inf" if fv > 0 else "-inf"
    return f"{fv:.6g}"


def write_csv(rows: list[dict], path, columns: list[str] | None = None) -> Path:
    """Write homogeneous row dicts; column order follows first row unless given."""
    path = Path(path)
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row.get(c)) for c in columns))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def print_table(rows: list[dict], columns: list[str] | None = None) -> str:
    """Human-readable fixed-width rendering of the same rows."""
    if not rows:
        return "(no rows)"
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    cells = [[format_value(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells))
              for i, c in enumerate(columns)]
    out = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    for row in cells:
        out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(out)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def figure_error_vs_majorant(rows: list[dict], path, label_key: str = "eps",
                             lhs_key: str = "lhs", rhs_key: str = "rhs") -> Path:
    """Grouped bars of the error measure against its guaranteed bound."""
    labels = [format_value(r.get(label_key)) for r in rows]
    lhs = [r.get(lhs_key, math.nan) for r in rows]
    rhs = [r.get(rhs_key, math.nan) for r in rows]
    xpos = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(xpos - 0.18, lhs, width=0.36, label="error measure", color="#33658a")
    ax.bar(xpos + 0.18, rhs, width=0.36, label="majorant", color="#f26419")
    ax.set_xticks(xpos, labels)
    ax.set_xlabel(label_key)
    positive = [v for v in lhs + rhs if v and v > 0 and not math.isnan(v)]
    if positive and max(positive) / min(positive) > 50:
        ax.set_yscale("log")
    ax.legend(frameon=False)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def figure_table1_components(rows: list[dict], path) -> Path:
    """Decay of the individual estimate components as eps -> 0."""
    eps = [r["eps"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for key, label in [("eT_sq", "final-time error sq."),
                       ("grad_sq", "gradient error sq."),
                       ("flux_gap", "flux gap"),
                       ("residual_norm", "filtered residual")]:
        ax.plot(eps, [max(r[key], 1e-16) for r in rows], "o-", label=label)
    ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.legend(frameon=False, fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def figure_profiles(u, v, horizon: float, path, times=None,
                    label_u: str = "exact", label_v: str = "approximation",
                    domain: tuple[float, float] = (-1.0, 1.0)) -> Path:
    """Spatial profiles of u and v at a few times (v may be None)."""
    times = times if times is not None else [0.0, 0.5 * horizon, horizon]
    xs = np.linspace(domain[0], domain[1], 801)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for i, t in enumerate(times):
        ts = np.full_like(xs, t)
        ax.plot(xs, u.value(xs, ts), color=f"C{i}", label=f"{label_u}, t={t:g}")
        if v is not None:
            ax.plot(xs, v.value(xs, ts), color=f"C{i}", ls="--",
                    label=f"{label_v}, t={t:g}")
    ax.set_xlabel("x")
    ax.legend(frameon=False, fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def figure_flux(tau, horizon: float, path, times=None,
                domain: tuple[float, float] = (-1.0, 1.0)) -> Path:
    """Flux profiles at a few times."""
    times = times if times is not None else [0.0, 0.5 * horizon, horizon]
    xs = np.linspace(domain[0], domain[1], 801)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for t in times:
        ax.plot(xs, tau.value(xs, np.full_like(xs, t)), label=f"t={t:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("flux")
    ax.legend(frameon=False, fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def figure_slab_terms(report, path) -> Path:
    """Per-slab contributions of an incremental majorant."""
    ks = [s.k for s in report.slabs]
    terms = [s.term for s in report.slabs]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(ks, terms, color="#33658a")
    ax.set_xlabel("slab index")
    ax.set_ylabel("slab term")
    ax.set_title(f"{report.kind} majorant: total {report.total:.4g}")
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def figure_solution_evolution(grid_nodes, values, path, n_lines: int = 6) -> Path:
    """Nodal solver snapshots over time."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    idx = np.unique(np.linspace(0, len(values) - 1, n_lines).astype(int))
    for i in idx:
        ax.plot(grid_nodes, values[i], label=f"step {i}")
    ax.set_xlabel("x")
    ax.legend(frameon=False, fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)
