"""Eulerian data ``(u, F, G)``, the dissipation profile and the projection.

The projection maps admissible data onto a uniform grid ``x_j = j * dx``.
On every pair-cell ``[x_{2j}, x_{2j+2}]`` the projected profile interpolates
``u`` at the even gridpoints and uses two slopes ``Du +- q`` whose squares
reproduce the exact energy of the pair-cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from alphahs.piecewise import MonotoneStep, PiecewiseLinear

__all__ = [
    "AlphaProfile",
    "EulerianState",
    "ProjectionError",
    "project",
    "project_function",
    "project_samples",
    "select_sign",
    "validate",
]

VALIDATION_RTOL = 1.0e-12
RADICAND_RTOL = 1.0e-12


class ProjectionError(ValueError):
    """Input data is inconsistent with ``dmu_ac = u_x^2 dx``."""


@dataclass(frozen=True, eq=False)
class AlphaProfile:
    """Spatially varying dissipation coefficient with values in ``[0, 1)``."""

    profile: PiecewiseLinear
    lipschitz: float = -1.0

    def __post_init__(self) -> None:
        p = self.profile
        if p.tail_slope != 0.0:
            raise ValueError("alpha must have constant tails")
        if np.any(p.values < 0.0) or np.any(p.values >= 1.0):
            raise ValueError("alpha must take values in [0, 1)")
        lip = p.lipschitz()
        if self.lipschitz < 0.0:
            object.__setattr__(self, "lipschitz", lip)
        elif not math.isclose(self.lipschitz, lip, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(
                f"recorded Lipschitz bound {self.lipschitz} != max slope {lip}")

    @classmethod
    def constant(cls, value: float = 0.0) -> AlphaProfile:
        return cls(PiecewiseLinear.constant(value))

    @classmethod
    def from_nodes(cls, nodes, values) -> AlphaProfile:
        return cls(PiecewiseLinear(nodes, values))

    def __call__(self, x):
        return self.profile(x)


@dataclass(frozen=True, eq=False)
class EulerianState:
    """Triplet ``(u, mu, nu)`` through the primitives of its measures.

    ``F = F_ac + F_sing`` is the primitive of ``mu`` and ``G`` that of
    ``nu``; all primitives are left-continuous and vanish at ``-inf``.
    """

    u: PiecewiseLinear
    F_ac: MonotoneStep
    F_sing: MonotoneStep
    G: MonotoneStep

    @classmethod
    def from_profile(cls, u: PiecewiseLinear) -> EulerianState:
        """Data in ``D_0``: ``mu = nu = u_x^2 dx`` with no singular part."""
        if u.tail_slope != 0.0:
            raise ValueError("u must have constant tails")
        inc = u.slopes**2 * np.diff(u.nodes)
        F = np.concatenate([[0.0], np.cumsum(inc)])
        F_ac = MonotoneStep.continuous(u.nodes, F)
        return cls(u, F_ac, MonotoneStep.zero(u.nodes[0]), F_ac)

    @property
    def F(self) -> MonotoneStep:
        return self.F_ac + self.F_sing

    @property
    def F_inf(self) -> float:
        return self.F_ac.total + self.F_sing.total

    @property
    def G_inf(self) -> float:
        return self.G.total

    def all_nodes(self) -> np.ndarray:
        return np.union1d(
            np.union1d(self.u.nodes, self.F_ac.nodes),
            np.union1d(self.F_sing.nodes, self.G.nodes))


def validate(state: EulerianState, *, initial: bool = True,
             rtol: float = VALIDATION_RTOL) -> list[str]:
    """Check membership conditions on piecewise-linear data.

    Returns a list of human-readable violations; the list is empty iff the
    data passes.  With *initial* the stronger condition ``F = G`` is
    enforced as well.
    """
    out: list[str] = []
    scale = max(1.0, state.F_inf, state.G_inf)
    tol = rtol * scale

    if state.u.tail_slope != 0.0:
        out.append("u must have constant tails")
    if np.any(np.abs(state.F_ac.jumps) > tol):
        out.append("absolutely continuous part F_ac has jumps")
    if state.F_sing.nodes.size > 1 and np.any(np.abs(state.F_sing.slopes) > tol):
        out.append("singular part F_sing has nonzero slopes")

    z = state.all_nodes()
    if z.size > 1:
        h = np.diff(z)
        du = np.diff(state.u(z))
        _, fr = state.F_ac.limits(z)
        fl, _ = state.F_ac.limits(z)
        dF = fl[1:] - fr[:-1]
        bad = np.abs(dF - du**2 / h) > tol + rtol * du**2 / h
        for i in np.flatnonzero(bad)[:5]:
            out.append(
                f"dmu_ac != u_x^2 dx on ({z[i]:.6g}, {z[i + 1]:.6g}): "
                f"F_ac increment {dF[i]:.6g} vs {du[i] ** 2 / h[i]:.6g}")

    F = state.F
    Fl, Fr = F.limits(z)
    Gl, Gr = state.G.limits(z)
    if np.any(Fl - Gl > tol) or np.any(Fr - Gr > tol):
        i = int(np.argmax(np.maximum(Fl - Gl, Fr - Gr)))
        out.append(f"F exceeds G near x = {z[i]:.6g}")
    if z.size > 1:
        # mu <= nu as measures: increments of G dominate those of F
        dF = np.diff(Fl)
        dG = np.diff(Gl)
        if np.any(dF - dG > tol):
            i = int(np.argmax(dF - dG))
            out.append(f"mu exceeds nu on ({z[i]:.6g}, {z[i + 1]:.6g})")
    if initial and (np.any(np.abs(Fl - Gl) > tol) or np.any(np.abs(Fr - Gr) > tol)):
        out.append("initial data must satisfy F = G")
    return out


def select_sign(Du, Dplus_u, q):
    """Sign of ``q`` on the first subcell of each pair-cell.

    The first subcell gets slope ``Du + sign * q``, the second
    ``Du - sign * q``.  The sign minimizes the interpolation mismatch at the
    odd gridpoint; ties resolve to ``+1``.
    """
    Du = np.asarray(Du, dtype=np.float64)
    r_plus = np.abs(Dplus_u - Du - q)
    r_minus = np.abs(Dplus_u - Du + q)
    sign = np.where(r_plus <= r_minus, 1.0, -1.0)
    return sign if sign.ndim else float(sign)


def project_samples(j0: int, dx: float, u, F_ac, F_sing) -> EulerianState:
    """Project data given by its samples at ``x_j = j * dx``.

    *u*, *F_ac* and *F_sing* hold values at ``j = j0, ..., j0 + 2P`` with
    *j0* even; ``F_sing`` must be sampled left-continuously.  Beyond the
    sampled range the data is assumed constant.
    """
    if j0 % 2:
        raise ValueError("grid must start at an even index")
    u = np.asarray(u, dtype=np.float64)
    F_ac = np.asarray(F_ac, dtype=np.float64)
    F_sing = np.asarray(F_sing, dtype=np.float64)
    n = u.size
    if n < 3 or n % 2 == 0 or F_ac.size != n or F_sing.size != n:
        raise ValueError("need an odd number (>= 3) of samples per field")
    x = (j0 + np.arange(n)) * dx

    u2, u1 = u[0::2], u[1::2]
    Fa2 = F_ac[0::2]
    Du = (u2[1:] - u2[:-1]) / (2.0 * dx)
    Dp = (u1 - u2[:-1]) / dx
    DF = (Fa2[1:] - Fa2[:-1]) / (2.0 * dx)

    rad = DF - Du**2
    # Differences of O(1) samples over 2 dx carry rounding of size eps / dx,
    # which dominates a purely relative floor once dx is small.
    eps = np.finfo(np.float64).eps
    F_abs = np.maximum(np.abs(Fa2[1:]), np.abs(Fa2[:-1]))
    u_abs = np.maximum(np.abs(u2[1:]), np.abs(u2[:-1]))
    rounding = 8.0 * eps * (F_abs + 2.0 * np.abs(Du) * u_abs) / dx
    floor = -(RADICAND_RTOL * np.maximum(DF, Du**2) + rounding)
    if np.any(rad < floor):
        i = int(np.argmin(rad - floor))
        raise ProjectionError(
            f"negative radicand {rad[i]:.3e} on pair-cell starting at x = "
            f"{x[2 * i]:.6g}; F_ac is not consistent with u")
    # inside the rounding band the radicand is indistinguishable from 0, and
    # its square root would turn noise of size eps into slopes of size sqrt(eps)
    q = np.sqrt(np.where(rad <= -floor, 0.0, rad))
    sign = select_sign(Du, Dp, q)
    s1 = Du + sign * q
    s2 = Du - sign * q

    u_out = np.empty(n)
    u_out[0::2] = u2
    u_out[1::2] = u2[:-1] + s1 * dx
    Fa_out = np.empty(n)
    Fa_out[0::2] = Fa2
    Fa_out[1::2] = Fa2[:-1] + s1**2 * dx
    # rounding must not break monotonicity
    Fa_out = np.maximum.accumulate(Fa_out)
    Fa_out -= Fa_out[0]

    Fs2 = F_sing[0::2]
    if Fs2[0] != 0.0:
        raise ValueError("grid must start left of the support of mu")
    x2 = x[0::2]
    Fs_right = np.concatenate([Fs2[1:], Fs2[-1:]])
    Fs_left = Fs2.copy()
    F_sing_out = MonotoneStep(x2, Fs_left, np.maximum(Fs_right, Fs_left))

    uu = PiecewiseLinear(x, u_out)
    Fac = MonotoneStep.continuous(x, Fa_out)
    return EulerianState(uu, Fac, F_sing_out, Fac + F_sing_out)


def _grid_range(lo: float, hi: float, dx: float) -> tuple[int, int]:
    j0 = 2 * math.floor(lo / (2.0 * dx)) - 2
    j1 = 2 * math.ceil(hi / (2.0 * dx)) + 2
    return j0, j1


def project(state: EulerianState, dx: float) -> EulerianState:
    """Projection of piecewise-linear data onto the grid ``x_j = j * dx``.

    The grid covers all nodes of the input plus one pair-cell on each side.
    """
    if not dx > 0.0:
        raise ValueError("dx must be positive")
    z = state.all_nodes()
    j0, j1 = _grid_range(float(z[0]), float(z[-1]), dx)
    x = np.arange(j0, j1 + 1) * dx
    return project_samples(j0, dx, state.u(x), state.F_ac(x), state.F_sing(x))


def project_function(u: Callable, F_ac: Callable, dx: float,
                     support: tuple[float, float],
                     F_sing: Callable | None = None) -> EulerianState:
    """Projection of data given by callables, sampled exactly at gridpoints.

    *support* must contain the support of ``u_x`` and of ``mu``.
    """
    if not dx > 0.0:
        raise ValueError("dx must be positive")
    j0, j1 = _grid_range(support[0], support[1], dx)
    x = np.arange(j0, j1 + 1) * dx
    Fs = np.zeros_like(x) if F_sing is None else np.asarray(F_sing(x), dtype=float)
    return project_samples(j0, dx, u(x), F_ac(x), Fs)
