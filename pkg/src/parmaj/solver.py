"""Demo producer of genuine numerical approximations for the benchmark problem:
implicit Euler in time, 3-point finite differences in space, and projected
successive over-relaxation (PSOR) for the discrete obstacle problem per step.

The solver exists to feed the estimates with realistic data; it performs no
error control of its own (that is the majorant's job).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:                                     # pragma: no cover
    njit = None

from .incremental import (FluxSequence, IncrementalApprox, TimePartition,
                          average_gradients)
from .problem import ProblemData
from .quadrature import QuadratureConfig, time_average


class SolverError(Exception):
    """PSOR failed to reach the complementarity tolerance."""

    def __init__(self, residual: float, sweeps: int):
        self.residual = residual
        self.sweeps = sweeps
        super().__init__(
            f"PSOR stalled at complementarity residual {residual:.3e} "
            f"after {sweeps} sweeps")


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform nodes on [a, b], endpoints included."""

    a: float
    b: float
    m: int

    def __post_init__(self):
        if self.m < 3:
            raise ValueError(f"grid needs at least 3 nodes, got {self.m}")
        if not self.a < self.b:
            raise ValueError("grid requires a < b")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.m - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.m)


@dataclass(frozen=True)
class SolverConfig:
    relaxation: float = 1.5
    tol: float = 1e-10
    max_sweeps: int = 100_000

    def __post_init__(self):
        if not 0.0 < self.relaxation < 2.0:
            raise ValueError(f"relaxation must lie in (0, 2), got {self.relaxation}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def _psor_kernel_py(v, rhs, phi, diag, off, omega, tol, max_sweeps):
    m = v.size
    worst = np.inf
    for sweep in range(max_sweeps):
        for i in range(1, m - 1):
            z = (rhs[i] + off * (v[i - 1] + v[i + 1])) / diag
            vi = (1.0 - omega) * v[i] + omega * z
            v[i] = vi if vi > phi[i] else phi[i]
        worst = 0.0
        for i in range(1, m - 1):
            q = diag * v[i] - off * (v[i - 1] + v[i + 1]) - rhs[i]
            g = v[i] - phi[i]
            r = q if q < g else g
            a = -r if r < 0.0 else r
            if a > worst:
                worst = a
        if worst < tol:
            return sweep + 1, worst
    return -1, worst


_psor_kernel = njit(cache=True)(_psor_kernel_py) if njit is not None else _psor_kernel_py


def implicit_euler_step(v_prev, f_slab, dt: float, phi, grid: SpatialGrid,
                        cfg: SolverConfig,
                        bc: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """One backward-Euler step of the discrete obstacle problem.

    Solves (I/dt + A_h) v >= f + v_prev/dt with v >= phi componentwise and
    complementarity, Dirichlet values ``bc`` at the endpoints, by projected
    Gauss-Seidel sweeps (projection after each nodal update) until the
    complementarity residual max_i |min(q_i, v_i - phi_i)| < tol.
    """
    v_prev = np.asarray(v_prev, dtype=float)
    f_slab = np.asarray(f_slab, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not (v_prev.size == f_slab.size == phi.size == grid.m):
        raise ValueError("nodal arrays must match the grid size")
    if np.any(v_prev < phi - 1e-12):
        raise ValueError("previous iterate dips below the obstacle")
    h = grid.h
    diag = 1.0 / dt + 2.0 / h**2
    off = 1.0 / h**2
    rhs = f_slab + v_prev / dt
    v = v_prev.copy()
    v[0], v[-1] = bc
    v[1:-1] = np.maximum(v[1:-1], phi[1:-1])
    sweeps, worst = _psor_kernel(v, rhs, phi, diag, off,
                                 cfg.relaxation, cfg.tol, cfg.max_sweeps)
    if sweeps < 0:
        raise SolverError(residual=float(worst), sweeps=cfg.max_sweeps)
    return v


def complementarity_residual(v, v_prev, f_slab, dt: float, phi,
                             grid: SpatialGrid) -> float:
    """max_i |min(q_i, v_i - phi_i)| over interior nodes (diagnostic)."""
    v = np.asarray(v, dtype=float)
    h = grid.h
    diag = 1.0 / dt + 2.0 / h**2
    off = 1.0 / h**2
    rhs = np.asarray(f_slab, dtype=float) + np.asarray(v_prev, dtype=float) / dt
    q = diag * v[1:-1] - off * (v[:-2] + v[2:]) - rhs[1:-1]
    gap = v[1:-1] - np.asarray(phi)[1:-1]
    return float(np.max(np.abs(np.minimum(q, gap))))


def solve_sequence(data: ProblemData, partition: TimePartition, grid: SpatialGrid,
                   cfg: SolverConfig,
                   quad_cfg: QuadratureConfig | None = None,
                   ) -> tuple[IncrementalApprox, FluxSequence]:
    """March implicit Euler over all slabs of the partition.

    The slab source is the nodal sampling of the slab time-average of f; the
    Dirichlet schedule of ``data`` is imposed at the endpoints each step.
    Returns the nodal approximation and the averaged-gradient flux sequence.
    """
    quad_cfg = quad_cfg or QuadratureConfig()
    nodes = grid.nodes
    phi = np.asarray(data.phi.value(nodes), dtype=float)
    values = np.empty((partition.n_slabs + 1, grid.m))
    v = np.maximum(np.asarray(data.u0.value(nodes), dtype=float), phi)
    values[0] = v
    for k in range(partition.n_slabs):
        t0, t1 = float(partition.nodes[k]), float(partition.nodes[k + 1])
        f_slab = np.asarray(time_average(data.f, nodes, t0, t1, quad_cfg))
        if data.boundary is not None:
            g = float(data.boundary(t1))
            bc = (g, g)
        else:
            bc = (0.0, 0.0)
        v = implicit_euler_step(v, f_slab, t1 - t0, phi, grid, cfg, bc=bc)
        values[k + 1] = v
    approx = IncrementalApprox.from_nodal(partition, nodes, values)
    fluxes = FluxSequence(partition, tuple(
        average_gradients(nodes, row) for row in values))
    return approx, fluxes
