"""Distances between Lagrangian grids and the constants of the stability
estimates.

Grids are compared as functions of the label on a common refinement: the
union of both node sets, the labels where either ``y`` reaches a node of
``alpha`` (so ``alpha(y)`` is linear on every piece) and, for the
simplified distance, the labels where ``y - y_hat`` or ``U - U_hat``
change sign.  Every integrand is then linear on each piece and all norms
are evaluated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from alphahs.eulerian import AlphaProfile
from alphahs.lagrangian import LagrangianGrid
from alphahs.piecewise import _int_sq_linear

__all__ = [
    "MetricBreakdown",
    "MetricDomainError",
    "cs_constant",
    "cs_tilde",
    "g1",
    "g2",
    "g3",
    "lambda_constant",
    "metric_d",
    "metric_ds",
    "stability_constants",
]

D_TERMS = ("sup_y", "sup_U", "L1_Hxi", "L2_UHxi", "L2_yxi", "L2_Uxi",
           "L2_g1_yxi", "L2_Hxi", "L2_g2", "L2_g3")
DS_TERMS = ("sup_y", "sup_U", "L2_yxi", "L2_Uxi", "L2_g")


class MetricDomainError(ValueError):
    """The simplified distance needs grids with equal breaking times."""


@dataclass(frozen=True)
class MetricBreakdown:
    names: tuple
    parts: tuple

    @property
    def total(self) -> float:
        return float(math.fsum(self.parts))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.parts))

    def __getitem__(self, name: str) -> float:
        return self.parts[self.names.index(name)]


# {{{ per-cell auxiliary functions

def g1(grid: LagrangianGrid, alpha: AlphaProfile) -> np.ndarray:
    """Energy density with the removal applied in advance on breaking cells.

    ``alpha`` is evaluated at the midpoint position of each cell.
    """
    y_mid = 0.5 * (grid.y[:-1] + grid.y[1:])
    d = grid.dU < 0.0
    return np.where(d, (1.0 - alpha(y_mid)) * grid.dV, grid.dV)


def g2(grid: LagrangianGrid, alpha: AlphaProfile) -> np.ndarray:
    return np.where(grid.dU < 0.0, alpha.lipschitz * grid.H_inf * grid.dU, 0.0)


def g3(grid: LagrangianGrid, alpha: AlphaProfile) -> np.ndarray:
    """Per-cell value with ``U`` taken at the cell midpoint."""
    U_mid = 0.5 * (grid.U[:-1] + grid.U[1:])
    return np.where(grid.dU < 0.0, alpha.lipschitz * U_mid * grid.dU, 0.0)

# }}}


# {{{ sampling on a refinement

class _Sampled:
    """Node values at refinement points and derivatives on the pieces."""

    def __init__(self, grid: LagrangianGrid, z: np.ndarray) -> None:
        xi = grid.xi
        keep = np.concatenate([[True], np.diff(xi) > 0.0])
        xs = xi[keep]
        self.y = self._interp(z, xs, grid.y[keep], 1.0)
        self.U = self._interp(z, xs, grid.U[keep], 0.0)
        mid = 0.5 * (z[:-1] + z[1:])
        c = np.searchsorted(xi, mid, side="right") - 1
        inside = (c >= 0) & (c < grid.ncells)
        cc = np.clip(c, 0, grid.ncells - 1)
        self.dy = np.where(inside, grid.dy[cc], 1.0)
        self.dU = np.where(inside, grid.dU[cc], 0.0)
        self.dV = np.where(inside, grid.dV[cc], 0.0)
        self.dH = np.where(inside, grid.dH[cc], 0.0)
        self.H_inf = grid.H_inf

    @staticmethod
    def _interp(z, xs, vals, tail):
        out = np.interp(z, xs, vals)
        if tail:
            out = out + tail * (np.minimum(z - xs[0], 0.0)
                                + np.maximum(z - xs[-1], 0.0))
        return out


def _preimages(grid: LagrangianGrid, levels: np.ndarray) -> np.ndarray:
    if levels.size == 0:
        return levels
    keep = np.concatenate([[True], np.diff(grid.xi) > 0.0])
    xs = grid.xi[keep]
    ys = np.maximum.accumulate(grid.y[keep])
    out = np.interp(levels, ys, xs)
    out = np.where(levels < ys[0], xs[0] + (levels - ys[0]), out)
    out = np.where(levels > ys[-1], xs[-1] + (levels - ys[-1]), out)
    return out


def _refinement(a: LagrangianGrid, b: LagrangianGrid,
                alpha: AlphaProfile) -> np.ndarray:
    levels = np.asarray(alpha.profile.nodes, dtype=np.float64)
    pts = [a.xi, b.xi, _preimages(a, levels), _preimages(b, levels)]
    return np.unique(np.concatenate(pts))


def _add_roots(z: np.ndarray, *diffs: np.ndarray) -> np.ndarray:
    extra = []
    h = np.diff(z)
    for d in diffs:
        l, r = d[:-1], d[1:]
        cross = (l * r) < 0.0
        if np.any(cross):
            extra.append(z[:-1][cross] + h[cross] * l[cross] / (l[cross] - r[cross]))
    if not extra:
        return z
    return np.unique(np.concatenate([z] + extra))


def _l2_linear(left, right, h) -> float:
    return math.sqrt(max(float(np.sum(_int_sq_linear(left, right, h))), 0.0))


def _l2_const(c, h) -> float:
    return math.sqrt(float(np.sum(c * c * h)))

# }}}


def metric_d(a: LagrangianGrid, b: LagrangianGrid,
             alpha: AlphaProfile) -> MetricBreakdown:
    """Ten-term distance between two grids."""
    z = _refinement(a, b, alpha)
    A, B = _Sampled(a, z), _Sampled(b, z)
    h = np.diff(z)
    lip = alpha.lipschitz

    def g1_ends(S):
        al = alpha(S.y)
        d = S.dU < 0.0
        left = np.where(d, (1.0 - al[:-1]) * S.dV, S.dV)
        right = np.where(d, (1.0 - al[1:]) * S.dV, S.dV)
        return left, right

    def g3_ends(S):
        d = S.dU < 0.0
        return (np.where(d, lip * S.U[:-1] * S.dU, 0.0),
                np.where(d, lip * S.U[1:] * S.dU, 0.0))

    ga_l, ga_r = g1_ends(A)
    gb_l, gb_r = g1_ends(B)
    g3a_l, g3a_r = g3_ends(A)
    g3b_l, g3b_r = g3_ends(B)
    g2a = np.where(A.dU < 0.0, lip * A.H_inf * A.dU, 0.0)
    g2b = np.where(B.dU < 0.0, lip * B.H_inf * B.dU, 0.0)

    parts = (
        float(np.max(np.abs(A.y - B.y))),
        float(np.max(np.abs(A.U - B.U))),
        float(np.sum(np.abs(A.dH - B.dH) * h)),
        lip * _l2_linear(A.U[:-1] * A.dH - B.U[:-1] * B.dH,
                         A.U[1:] * A.dH - B.U[1:] * B.dH, h),
        _l2_const(A.dy - B.dy, h),
        _l2_const(A.dU - B.dU, h),
        _l2_linear((ga_l - gb_l) + (A.dy - B.dy), (ga_r - gb_r) + (A.dy - B.dy), h),
        _l2_const(A.dH - B.dH, h),
        _l2_const(g2a - g2b, h),
        _l2_linear(g3a_l - g3b_l, g3a_r - g3b_r, h),
    )
    return MetricBreakdown(D_TERMS, parts)


def metric_ds(a: LagrangianGrid, b: LagrangianGrid, alpha: AlphaProfile,
              *, tau_rtol: float = 1e-12) -> MetricBreakdown:
    """Five-term distance for grids that share their breaking times."""
    if a.xi.shape != b.xi.shape or not np.array_equal(a.xi, b.xi):
        raise MetricDomainError("grids must share their labels")
    ta, tb = a.tau, b.tau
    fin = np.isfinite(ta) & np.isfinite(tb)
    fa, fb = np.where(fin, ta, 0.0), np.where(fin, tb, 0.0)
    close = np.abs(fa - fb) <= tau_rtol * np.maximum(1.0, np.abs(fa))
    same = (ta == tb) | (fin & close)
    if not np.all(same):
        raise MetricDomainError("grids have different breaking times")

    z = _refinement(a, b, alpha)
    A, B = _Sampled(a, z), _Sampled(b, z)
    z = _add_roots(z, A.y - B.y, A.U - B.U)
    A, B = _Sampled(a, z), _Sampled(b, z)
    h = np.diff(z)
    lip = alpha.lipschitz

    dv = np.abs(A.dV - B.dV)
    d = A.dU < 0.0
    m = np.minimum(A.dV, B.dV)
    ey = np.abs(A.y - B.y)
    eU = np.abs(A.U - B.U)
    gl = np.where(d, dv + lip * m * (ey[:-1] + eU[:-1]), dv)
    gr = np.where(d, dv + lip * m * (ey[1:] + eU[1:]), dv)
    parts = (
        float(np.max(ey)),
        float(np.max(eU)),
        _l2_const(A.dy - B.dy, h),
        _l2_const(A.dU - B.dU, h),
        _l2_linear(gl, gr, h),
    )
    return MetricBreakdown(DS_TERMS, parts)


# {{{ constants

def stability_constants(t: float, M: float, alpha_lip: float) -> tuple[float, float]:
    """``(C(t), D(t))`` of the Lipschitz estimate for the exact flow."""
    r = math.sqrt(M)
    a = alpha_lip
    C = (3.0 + 1.5 * t + 0.5 * t**2 + 3.0 / 16.0 * t**3
         + r * (1.0 + 0.25 * t + 0.25 * t**2 + t**3 / 16.0)
         + a * r * (5.0 + 2.0 * t + t**2 + 0.375 * t**3)
         + a * M * (3.0 + 1.25 * t + 0.5 * t**2 + 0.125 * t**3))
    D = (2.0 + a * r + r * (0.5 + 0.125 * t + t**2 / 16.0)
         + a * M * (1.0 + 0.25 * t + 0.125 * t**2))
    return C, D


def cs_constant(u_inf: float, G_inf: float, T: float, alpha_lip: float) -> float:
    """Factor bounding the full distance by the simplified one."""
    g = math.sqrt(G_inf)
    return 2.0 + alpha_lip * (u_inf + (2.0 + math.sqrt(2.0) + math.exp(0.25 * T)) * g
                              + (1.0 + 0.25 * T) * G_inf)


def lambda_constant(G_inf: float, T: float, alpha_lip: float) -> float:
    g = math.sqrt(G_inf)
    return (1.0 + (1.0 + alpha_lip + 0.5 * T) * g
            + alpha_lip * (1.0 + 0.5 * T) * G_inf)


def cs_tilde(u_inf: float, G_inf: float, T: float, alpha_lip: float) -> float:
    return alpha_lip * (u_inf + (1.0 + math.sqrt(2.0)) * math.sqrt(G_inf)
                        + 0.25 * G_inf * T)

# }}}
