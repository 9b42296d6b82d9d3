"""Numerical solution operator on a fixed Lagrangian grid.

Every cell breaks at most once, at a time known from the initial data, so
cell derivatives have closed forms in time.  Only the removal fractions
``beta`` are unknown; they depend on where the cell sits when it breaks.
Time is split by a partition that groups nearby breaking times into steps
of length at most ``dt``; inside a step the fractions are found by a short
fixed-point iteration on the positions at the end of the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from alphahs.eulerian import AlphaProfile, EulerianState, project
from alphahs.lagrangian import (
    BreakingTimes,
    LagrangianGrid,
    breaking_times,
    to_eulerian,
    to_lagrangian,
)
from alphahs.piecewise import _frozen

__all__ = [
    "ConfigurationError",
    "EvolutionConfig",
    "IntervalRecord",
    "NodeValues",
    "Solution",
    "TimePartition",
    "compute_dt",
    "evolve_cells",
    "extract_partition",
    "iterate_interval",
    "reconstruct_nodes",
    "solve",
    "solve_grid",
]


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    minimal_steps: bool = True
    dt_cap: float | None = None
    max_iterations: int = 3
    check_invariants: bool = True

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.dt_cap is not None and not self.dt_cap > 0.0:
            raise ConfigurationError("dt_cap must be positive")

    @staticmethod
    def epsilon(G_inf: float, dt: float, dx: float) -> float:
        """Termination threshold for consecutive position iterates."""
        return 0.125 * G_inf * dt * dt * dx


def compute_dt(dx: float, alpha: AlphaProfile, G_inf: float, T: float) -> float:
    """Largest step for which the fixed-point map contracts by ``dx``."""
    if not dx > 0.0 or G_inf < 0.0:
        raise ValueError("need dx > 0 and G_inf >= 0")
    prod = alpha.lipschitz * G_inf
    if prod <= 0.0:
        return float(T)
    return math.sqrt(8.0 * dx / prod)


# {{{ time partition

@dataclass(frozen=True, eq=False)
class TimePartition:
    taus: np.ndarray
    dt: float
    T: float
    cells: tuple = field(default=(), repr=False)
    minimal: bool = True

    @property
    def N(self) -> int:
        return self.taus.size - 1

    def __len__(self) -> int:
        return self.taus.size

    def check(self) -> list[str]:
        out = []
        t = self.taus
        if t[0] != 0.0 or t[-1] != self.T:
            out.append("partition must run from 0 to T")
        if np.any(np.diff(t) <= 0.0):
            out.append("partition must be strictly increasing")
        if self.minimal and self.dt > 0.0:
            if not self.N < 2.0 * (self.T / self.dt + 1.0):
                out.append(f"N = {self.N} violates N < 2 (T/dt + 1)")
            if t.size > 3:
                gaps = t[2:-1] - t[:-3]
                if np.any(gaps <= self.dt):
                    out.append("two consecutive steps shorter than dt")
        return out


def _assign_cells(times: BreakingTimes, taus: np.ndarray) -> tuple:
    tau = times.tau
    finite = np.flatnonzero(np.isfinite(tau) & (tau > 0.0))
    order = finite[np.argsort(tau[finite], kind="stable")]
    st = tau[order]
    cuts = np.searchsorted(st, taus, side="right")
    return tuple(order[cuts[k]:cuts[k + 1]] for k in range(taus.size - 1))


def extract_partition(times: BreakingTimes, dt: float, T: float) -> TimePartition:
    """Time sequence that groups breaking times closer than ``dt``."""
    if not T > 0.0:
        raise ValueError("T must be positive")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    hat = np.asarray(times.distinct, dtype=np.float64)

    def h(i: int) -> float:
        return float(hat[i]) if i < hat.size else math.inf

    taus = [0.0]
    m = 0
    while True:
        tk = taus[-1]
        if h(m + 1) >= T:
            taus.append(float(T))
            break
        if h(m + 2) - tk <= dt and h(m + 2) < T:
            bound = min(tk + dt, T)
            j = int(np.searchsorted(hat, bound, side="right")) - 1
            taus.append(float(hat[j]))
            m = j
            if hat[j] >= T:
                break
        else:
            taus.append(h(m + 1))
            m += 1
    arr = _frozen(taus)
    return TimePartition(arr, float(dt), float(T), _assign_cells(times, arr))


def every_breaking_time(times: BreakingTimes, T: float, dt: float) -> TimePartition:
    """One partition point per distinct breaking time in ``(0, T)``."""
    hat = np.asarray(times.distinct, dtype=np.float64)
    inner = hat[(hat > 0.0) & (hat < T)]
    arr = _frozen(np.concatenate([[0.0], inner, [float(T)]]))
    return TimePartition(arr, float(dt), float(T), _assign_cells(times, arr),
                         minimal=False)

# }}}


# {{{ cells and nodes

def evolve_cells(dy, dU, dV, tau, t0: float, h: float, removal=None):
    """Advance per-cell derivatives from ``t0`` to ``t0 + h``.

    *removal* holds, per cell, the fraction of energy removed when the cell
    breaks inside ``(t0, t0 + h]``; entries of other cells are ignored.
    Cells with positive energy and a finite breaking time are evaluated in
    the factorized form ``(y_xi, U_xi) = (v s^2 / 4, v s / 2)``,
    ``s = t - tau``, which is exact and keeps ``y_xi V_xi = U_xi^2`` to
    rounding even next to the breaking time.
    """
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    dy = np.asarray(dy, dtype=np.float64)
    dU = np.asarray(dU, dtype=np.float64)
    dV = np.asarray(dV, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    t = t0 + h

    v = dV
    if removal is not None:
        removal = np.asarray(removal, dtype=np.float64)
        if np.any(removal < 0.0) or np.any(removal >= 1.0):
            raise ValueError("removal fractions must lie in [0, 1)")
        hit = (tau > t0) & (tau <= t)
        if np.any(hit):
            v = np.where(hit, (1.0 - removal) * dV, dV)

    fact = np.isfinite(tau) & (dV > 0.0)
    s = np.where(fact, t - np.where(fact, tau, 0.0), 0.0)
    new_dy = np.where(fact, 0.25 * v * s * s, dy + dU * h + 0.25 * dV * h * h)
    new_dU = np.where(fact, 0.5 * v * s, dU + 0.5 * dV * h)
    return new_dy, new_dU, v


@dataclass(frozen=True, eq=False)
class NodeValues:
    t: float
    zeta: np.ndarray
    y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    zeta_minus: float
    U_minus: float


def _left_asymptotes(t0, t, zeta0, U0, V_inf0, tau=None, beta=None,
                     v_before=None, widths=None, cells=None):
    h = t - t0
    U_minus = U0 - 0.25 * V_inf0 * h
    zeta_minus = zeta0 + U0 * h - 0.125 * V_inf0 * h * h
    if cells is not None and cells.size:
        c = cells[(tau[cells] > t0) & (tau[cells] <= t)]
        if c.size:
            s = t - tau[c]
            lost = beta[c] * v_before[c] * widths[c]
            U_minus += 0.25 * float(np.sum(lost * s))
            zeta_minus += 0.125 * float(np.sum(lost * s * s))
    return zeta_minus, U_minus


def reconstruct_nodes(dy, dU, dV, xi, *, t0: float, t: float,
                      zeta_minus0: float, U_minus0: float, V_inf0: float,
                      tau=None, beta=None, v_before=None, cells=None,
                      need: str = "all") -> NodeValues:
    """Node values at ``t`` from cell derivatives and the left asymptotes.

    The asymptotes at ``t0`` are carried forward; cells in *cells* that
    broke in ``(t0, t]`` with fraction *beta* and pre-breaking energy
    density *v_before* correct them.  With ``need="y"`` only positions are
    summed.
    """
    xi = np.asarray(xi, dtype=np.float64)
    w = np.diff(xi)
    zeta_minus, U_minus = _left_asymptotes(
        t0, t, zeta_minus0, U_minus0, V_inf0, tau, beta, v_before, w, cells)
    zeta = np.empty(xi.size)
    zeta[0] = zeta_minus
    np.cumsum((np.asarray(dy) - 1.0) * w, out=zeta[1:])
    zeta[1:] += zeta_minus
    y = zeta + xi
    if need == "y":
        return NodeValues(t, zeta, y, np.empty(0), np.empty(0), zeta_minus, U_minus)
    U = np.empty(xi.size)
    U[0] = U_minus
    np.cumsum(np.asarray(dU) * w, out=U[1:])
    U[1:] += U_minus
    V = np.empty(xi.size)
    V[0] = 0.0
    np.cumsum(np.asarray(dV) * w, out=V[1:])
    return NodeValues(t, zeta, y, U, V, zeta_minus, U_minus)

# }}}


# {{{ one interval

@dataclass(frozen=True)
class IntervalRecord:
    t0: float
    t1: float
    mode: str  # "free", "exact" or "iterate"
    iterations: int
    reconstructions: int
    diffs: tuple
    epsilon: float
    n_breaking: int
    V_inf: float


@dataclass
class _Anchor:
    t: float
    zeta_minus: float
    U_minus: float
    V_inf: float


class _Evolver:
    """Initial cells plus the removal fractions found so far."""

    def __init__(self, grid: LagrangianGrid, times: BreakingTimes,
                 alpha: AlphaProfile) -> None:
        self.grid = grid
        self.tau = np.asarray(times.tau)
        self.alpha = alpha
        self.widths = np.diff(grid.xi)
        self.beta = np.zeros(grid.ncells)

    def cells_at(self, t: float, beta=None):
        g = self.grid
        return evolve_cells(g.dy, g.dU, g.dV, self.tau, 0.0, t,
                            self.beta if beta is None else beta)

    def nodes_at(self, anchor: _Anchor, t: float, cells, beta=None,
                 need: str = "all") -> NodeValues:
        b = self.beta if beta is None else beta
        dy, dU, dV = self.cells_at(t, b)
        return reconstruct_nodes(
            dy, dU, dV, self.grid.xi, t0=anchor.t, t=t,
            zeta_minus0=anchor.zeta_minus, U_minus0=anchor.U_minus,
            V_inf0=anchor.V_inf, tau=self.tau, beta=b, v_before=self.grid.dV,
            cells=cells, need=need)

    def energy_at(self, t: float) -> float:
        _, _, dV = self.cells_at(t)
        return float(np.cumsum(dV * self.widths)[-1])

    def grid_at(self, anchor: _Anchor, t: float, cells) -> LagrangianGrid:
        g = self.grid
        dy, dU, dV = self.cells_at(t)
        nv = reconstruct_nodes(
            dy, dU, dV, g.xi, t0=anchor.t, t=t, zeta_minus0=anchor.zeta_minus,
            U_minus0=anchor.U_minus, V_inf0=anchor.V_inf, tau=self.tau,
            beta=self.beta, v_before=g.dV, cells=cells)
        return LagrangianGrid(xi=g.xi, y=nv.y, U=nv.U, V=nv.V, H=g.H, dy=dy,
                              dU=dU, dV=dV, dH=g.dH, tau=self.tau)


def iterate_interval(ev: _Evolver, anchor: _Anchor, t1: float, cells,
                     epsilon: float, max_iterations: int = 3
                     ) -> tuple[_Anchor, IntervalRecord]:
    """Advance from ``anchor.t`` to *t1*, fixing removal fractions of *cells*.

    *cells* are the cells breaking in ``(anchor.t, t1]``.  Their fractions
    are set in ``ev.beta`` on return.
    """
    t0 = anchor.t
    tau = ev.tau
    alpha = ev.alpha
    if cells.size == 0:
        mode, iterations = "free", 1
        nv = ev.nodes_at(anchor, t1, cells, need="y")
        diffs: list[float] = []
        recon = 1
    elif not np.any(tau[cells] < t1):
        # every breaking happens at t1: positions there do not depend on beta
        mode, iterations = "exact", 2
        ev.beta[cells] = 0.0
        nv = ev.nodes_at(anchor, t1, cells, need="y")
        ev.beta[cells] = alpha(nv.y[cells])
        diffs = []
        recon = 1
    else:
        mode = "iterate"
        trial = ev.beta.copy()
        trial[cells] = 0.0
        nv = ev.nodes_at(anchor, t1, cells, beta=trial, need="y")
        diffs = []
        iterations = 1
        while iterations < max_iterations:
            trial[cells] = alpha(nv.y[cells])
            nxt = ev.nodes_at(anchor, t1, cells, beta=trial, need="y")
            iterations += 1
            diffs.append(float(np.max(np.abs(nxt.y - nv.y))))
            nv = nxt
            if diffs[-1] <= epsilon:
                break
        # fractions of the last iterate were evaluated at the previous one
        ev.beta[cells] = trial[cells]
        recon = iterations

    V_inf = ev.energy_at(t1)
    new = _Anchor(t1, nv.zeta_minus, nv.U_minus, V_inf)
    rec = IntervalRecord(t0, t1, mode, iterations, recon, tuple(diffs),
                         epsilon, int(cells.size), V_inf)
    return new, rec

# }}}


# {{{ driver

@dataclass(frozen=True)
class InvariantReport:
    t: float
    V_inf: float
    max_rel_invariant_error: float
    min_dy: float
    max_dV_minus_dH: float
    min_dV: float


def _invariant_report(ev: _Evolver, t: float, V_inf: float) -> InvariantReport:
    dy, dU, dV = ev.cells_at(t)
    lhs = dy * dV
    rhs = dU * dU
    big = np.maximum(lhs, rhs)
    mask = big > 1e-28
    rel = np.abs(lhs - rhs)[mask] / big[mask]
    return InvariantReport(
        t=t, V_inf=V_inf,
        max_rel_invariant_error=float(rel.max()) if rel.size else 0.0,
        min_dy=float(dy.min()),
        max_dV_minus_dH=float(np.max(dV - ev.grid.dH)),
        min_dV=float(dV.min()))


@dataclass(eq=False)
class Solution:
    initial: LagrangianGrid
    times: BreakingTimes
    partition: TimePartition
    alpha: AlphaProfile
    dx: float
    dt: float
    config: EvolutionConfig
    records: list
    anchors: list
    invariants: list
    beta: np.ndarray
    _ev: _Evolver = field(repr=False)

    @property
    def T(self) -> float:
        return self.partition.T

    def energy_trace(self) -> tuple[np.ndarray, np.ndarray]:
        """``(t, V_inf)`` at every partition point."""
        return (np.array([a.t for a in self.anchors]),
                np.array([a.V_inf for a in self.anchors]))

    @property
    def total_iterations(self) -> int:
        return int(sum(r.iterations for r in self.records))

    def grid_at(self, t: float) -> LagrangianGrid:
        taus = self.partition.taus
        if not 0.0 <= t <= self.T:
            raise ValueError(f"t = {t} outside [0, {self.T}]")
        if t == 0.0:
            return self.initial
        k = int(np.searchsorted(taus, t, side="left")) - 1
        return self._ev.grid_at(self.anchors[k], t, self.partition.cells[k])

    def eulerian_at(self, t: float) -> EulerianState:
        if t == 0.0:
            return to_eulerian(self.initial)
        return to_eulerian(self.grid_at(t))


def solve_grid(grid0: LagrangianGrid, alpha: AlphaProfile, dx: float, T: float,
               config: EvolutionConfig | None = None) -> Solution:
    """Run the interval loop on Lagrangian initial data."""
    config = config or EvolutionConfig()
    if not T > 0.0:
        raise ConfigurationError("T must be positive")
    if not dx > 0.0:
        raise ConfigurationError("dx must be positive")
    G_inf = grid0.H_inf
    dt = config.dt_cap if config.dt_cap is not None else compute_dt(dx, alpha, G_inf, T)
    gamma = 0.125 * alpha.lipschitz * G_inf * dt * dt
    if gamma > dx * (1.0 + 1e-12):
        raise ConfigurationError(
            f"dt = {dt:.6g} gives contraction factor {gamma:.3e} > dx = {dx:.3e}")

    times = breaking_times(grid0, T)
    if config.minimal_steps:
        part = extract_partition(times, dt, T)
    else:
        part = every_breaking_time(times, T, dt)
    eps = EvolutionConfig.epsilon(G_inf, dt, dx)

    ev = _Evolver(grid0, times, alpha)
    # same summation as every later anchor, so the energy trace is monotone
    anchor = _Anchor(0.0, float(grid0.y[0] - grid0.xi[0]), float(grid0.U[0]),
                     ev.energy_at(0.0))
    anchors = [anchor]
    records = []
    invariants = []
    if config.check_invariants:
        invariants.append(_invariant_report(ev, 0.0, anchor.V_inf))
    for k in range(part.N):
        anchor, rec = iterate_interval(ev, anchor, float(part.taus[k + 1]),
                                       part.cells[k], eps, config.max_iterations)
        anchors.append(anchor)
        records.append(rec)
        if config.check_invariants:
            invariants.append(_invariant_report(ev, anchor.t, anchor.V_inf))
    return Solution(grid0, times, part, alpha, dx, dt, config, records, anchors,
                    invariants, ev.beta, ev)


def solve(state0: EulerianState, alpha: AlphaProfile, dx: float, T: float,
          config: EvolutionConfig | None = None, query_times=(),
          *, project_data: bool = True):
    """Project, lift to Lagrangian coordinates, evolve and sample.

    Returns ``(solution, results)`` where ``results`` maps each query time
    to a ``(LagrangianGrid, EulerianState)`` pair.  Pass
    ``project_data=False`` when *state0* is already on the grid.
    """
    data = project(state0, dx) if project_data else state0
    grid0 = to_lagrangian(data)
    sol = solve_grid(grid0, alpha, dx, T, config)
    results = {}
    for t in query_times:
        g = sol.grid_at(float(t))
        results[float(t)] = (g, to_eulerian(g))
    return sol, results

# }}}
