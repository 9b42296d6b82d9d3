"""Lagrangian grids ``(y, U, V, H)`` and the maps between coordinates.

A grid stores node values at labels ``xi_j`` together with the constant
derivatives on each cell ``[xi_j, xi_{j+1}]``.  Outside the grid the
characteristics continue as ``y = xi + const`` and ``U``, ``V``, ``H`` are
constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from alphahs.eulerian import EulerianState, validate
from alphahs.piecewise import MonotoneStep, PiecewiseLinear, _frozen

__all__ = [
    "BreakingTimes",
    "LagrangianGrid",
    "breaking_times",
    "check_grid",
    "to_eulerian",
    "to_lagrangian",
]

DEDUP_RTOL = 1.0e-12


@dataclass(frozen=True, eq=False)
class LagrangianGrid:
    xi: np.ndarray
    y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    H: np.ndarray
    dy: np.ndarray
    dU: np.ndarray
    dV: np.ndarray
    dH: np.ndarray
    tau: np.ndarray
    V_inf: float = field(init=False)
    H_inf: float = field(init=False)

    def __post_init__(self) -> None:
        n = np.asarray(self.xi).size
        for name in ("xi", "y", "U", "V", "H"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n,):
                raise ValueError(f"{name} must have {n} node values")
            object.__setattr__(self, name, arr)
        for name in ("dy", "dU", "dV", "dH", "tau"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n - 1,):
                raise ValueError(f"{name} must have {n - 1} cell values")
            object.__setattr__(self, name, arr)
        if n < 2:
            raise ValueError("a grid needs at least one cell")
        if np.any(np.diff(self.xi) < 0.0):
            raise ValueError("grid labels must be nondecreasing")
        object.__setattr__(self, "V_inf", float(self.V[-1]))
        object.__setattr__(self, "H_inf", float(self.H[-1]))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.xi)

    @property
    def ncells(self) -> int:
        return self.xi.size - 1

    def functions(self) -> dict[str, PiecewiseLinear]:
        """Node values as piecewise-linear functions of the label."""
        xi, keep = _strict_nodes(self.xi)
        return {
            "y": PiecewiseLinear(xi, self.y[keep], tail_slope=1.0),
            "U": PiecewiseLinear(xi, self.U[keep]),
            "V": PiecewiseLinear(xi, self.V[keep]),
            "H": PiecewiseLinear(xi, self.H[keep]),
        }


def _strict_nodes(xi: np.ndarray):
    keep = np.concatenate([[True], np.diff(xi) > 0.0])
    return xi[keep], keep


def cell_breaking_times(dy, dU) -> np.ndarray:
    """Per-cell breaking time: ``0`` on plateaus, ``-2 y_xi / U_xi`` when
    ``U_xi < 0`` and ``inf`` otherwise."""
    dy = np.asarray(dy, dtype=np.float64)
    dU = np.asarray(dU, dtype=np.float64)
    tau = np.full(dy.shape, np.inf)
    neg = dU < 0.0
    tau[neg] = -2.0 * dy[neg] / dU[neg]
    tau[(dy == 0.0) & (dU == 0.0)] = 0.0
    return tau


def check_grid(grid: LagrangianGrid, *, rtol: float = 1.0e-9,
               initial: bool = False) -> list[str]:
    """Membership conditions for Lagrangian grids; empty list if all hold."""
    out: list[str] = []
    w = grid.widths
    live = w > 0.0
    scale = max(1.0, grid.H_inf)
    atol = 1.0e-12 * scale
    if np.any(grid.dy < -atol):
        out.append(f"y_xi negative (min {grid.dy.min():.3e})")
    if np.any(grid.dH < -atol):
        out.append("H_xi negative")
    if np.any(grid.dV < -atol):
        out.append("V_xi negative")
    if np.any(grid.dV - grid.dH > atol * (1.0 + grid.dH)):
        out.append("V_xi exceeds H_xi")
    if np.any(live & (grid.dy + grid.dH <= 0.0)):
        out.append("y_xi + H_xi vanishes on a cell")
    lhs = grid.dy * grid.dV
    rhs = grid.dU**2
    bad = np.abs(lhs - rhs) > rtol * np.maximum(np.maximum(lhs, rhs), 1e-300)
    # cells where both sides are below rounding of O(1) quantities are fine
    bad &= np.maximum(lhs, rhs) > 1e-28
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        out.append(
            f"y_xi V_xi != U_xi^2 on cell {i}: {lhs[i]:.17g} vs {rhs[i]:.17g}")
    for name, dname in (("y", "dy"), ("U", "dU"), ("V", "dV"), ("H", "dH")):
        vals = getattr(grid, name)
        d = getattr(grid, dname)
        ref = max(1.0, float(np.max(np.abs(vals))))
        err = np.abs(np.diff(vals) - d * w)
        if np.any(err > 1.0e-9 * ref):
            out.append(f"node values of {name} are not prefix-consistent "
                       f"(max error {err.max():.3e})")
    if initial and np.any(np.abs(grid.y + grid.H - grid.xi)
                          > 1e-12 * np.maximum(1.0, np.abs(grid.xi))):
        out.append("y + H != id on initial data")
    return out


def to_lagrangian(state: EulerianState) -> LagrangianGrid:
    """Map initial data with ``F = G`` to Lagrangian coordinates.

    Every Eulerian node ``x`` yields the label ``x + G(x)``; a jump of ``G``
    at ``x`` adds ``x + G(x+)`` and a plateau cell in between.  Cells of
    zero width are never emitted.
    """
    problems = validate(state, initial=True)
    if problems:
        raise ValueError("invalid initial data: " + "; ".join(problems))

    x = state.all_nodes()
    Gl, Gr = state.G.limits(x)
    ux = np.atleast_1d(state.u(x))
    jump = Gr > Gl
    count = 1 + jump.astype(np.intp)
    idx = np.repeat(np.arange(x.size), count)
    second = np.zeros(idx.size, dtype=bool)
    second[1:] = idx[1:] == idx[:-1]

    Hn = np.where(second, Gr[idx], Gl[idx])
    y = x[idx]
    xi = y + Hn
    U = ux[idx]

    seg_slope = np.diff(ux) / np.diff(x) if x.size > 1 else np.zeros(0)
    plateau = second[1:]
    s = np.zeros(plateau.size)
    s[~plateau] = seg_slope[idx[:-1][~plateau]]
    denom = 1.0 + s * s
    dy = np.where(plateau, 0.0, 1.0 / denom)
    dU = np.where(plateau, 0.0, s / denom)
    dH = np.where(plateau, 1.0, s * s / denom)
    if xi.size < 2:
        # zero-energy data on a single node: add one unit cell of free flow
        xi = np.array([xi[0], xi[0] + 1.0])
        y = np.array([y[0], y[0] + 1.0])
        U = np.array([U[0], U[0]])
        Hn = np.array([Hn[0], Hn[0]])
        dy, dU, dH = np.ones(1), np.zeros(1), np.zeros(1)
    return LagrangianGrid(xi=xi, y=y, U=U, V=Hn.copy(), H=Hn, dy=dy, dU=dU,
                          dV=dH.copy(), dH=dH, tau=cell_breaking_times(dy, dU))


@dataclass(frozen=True, eq=False)
class BreakingTimes:
    """Per-cell breaking times and their sorted, deduplicated values.

    ``label[c]`` is the index into ``distinct`` of the time of cell ``c``
    (``-1`` for cells that never break).  ``distinct[0] == 0``.
    """

    tau: np.ndarray
    distinct: np.ndarray
    label: np.ndarray

    def bucket(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.label == k)

    def cells_in(self, t0: float, t1: float) -> np.ndarray:
        """Cells breaking in the half-open window ``(t0, t1]``."""
        return np.flatnonzero((self.tau > t0) & (self.tau <= t1))


def breaking_times(grid: LagrangianGrid, T: float | None = None,
                   rtol: float = DEDUP_RTOL) -> BreakingTimes:
    """Collect breaking times, merging values closer than ``rtol * max(1, T)``.

    Merged cells are snapped to the smallest time of their cluster.
    """
    tau = cell_breaking_times(grid.dy, grid.dU)
    finite = np.isfinite(tau)
    vals = tau[finite]
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    if T is None:
        T = float(sv[-1]) if sv.size else 1.0
    tol = rtol * max(1.0, T)

    rep = np.empty_like(sv)
    cluster = np.empty(sv.size, dtype=np.intp)
    distinct = [0.0]
    for i, t in enumerate(sv):
        if t - distinct[-1] > tol:
            distinct.append(float(t))
        rep[i] = distinct[-1]
        cluster[i] = len(distinct) - 1
    snapped = np.empty_like(sv)
    snapped[order] = rep
    lab_f = np.empty(sv.size, dtype=np.intp)
    lab_f[order] = cluster

    tau_out = tau.copy()
    tau_out[finite] = snapped
    label = np.full(tau.size, -1, dtype=np.intp)
    label[finite] = lab_f
    return BreakingTimes(_frozen(tau_out), _frozen(np.array(distinct)),
                         _frozen(label, dtype=np.intp))


def to_eulerian(grid: LagrangianGrid, *, merge_rtol: float = 1.0e-13) -> EulerianState:
    """Pushforward of ``(U, V_xi dxi, H_xi dxi)`` under ``y``.

    Nodes whose positions agree up to *merge_rtol* (relative to the extent
    of the grid) are treated as one point; cells between them carry their
    energy as a jump.  ``u`` takes the value at the leftmost label.
    """
    y = np.maximum.accumulate(np.asarray(grid.y, dtype=np.float64))
    scale = max(1.0, float(np.max(np.abs(y))))
    new = np.concatenate([[True], np.diff(y) > merge_rtol * scale])
    start = np.flatnonzero(new)
    stop = np.concatenate([start[1:] - 1, [y.size - 1]])

    x = y[start]
    u = grid.U[start]
    V, H = grid.V, grid.H
    Fl, Fr = V[start], V[stop]
    Gl, Gr = H[start], H[stop]

    jumps_F = Fr - Fl
    Fs_right = np.cumsum(jumps_F)
    Fs_left = Fs_right - jumps_F
    Fac = Fl - Fs_left
    Fac = np.maximum.accumulate(np.maximum(Fac, 0.0))
    Fs_right = np.maximum(Fs_right, Fs_left)
    Gr = np.maximum(Gr, Gl)

    F_sing = MonotoneStep(x, Fs_left, Fs_right)
    F_ac = MonotoneStep.continuous(x, Fac)
    G = MonotoneStep(x, Gl, Gr)
    return EulerianState(PiecewiseLinear(x, u), F_ac, F_sing, G)
