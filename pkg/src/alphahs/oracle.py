"""Reference solutions.

:class:`ExactPiecewiseSolution` evolves piecewise-linear initial data in
exact rational arithmetic, stopping at every breaking time.  For such data
every cell collapses to a point at its breaking time, so the removed
fraction is known exactly and the evolution has no discretization error.
The multipeakon data below is the standard instance; its closed form is
cross-checked against independently transcribed formulas in the tests.

:func:`fine_reference` runs the numerical solver on a fine grid and caches
the result on disk.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from alphahs.eulerian import AlphaProfile, EulerianState
from alphahs.piecewise import MonotoneStep, PiecewiseLinear

__all__ = [
    "CACHE_VERSION",
    "ExactPiecewiseSolution",
    "MULTIPEAKON_ALPHA",
    "MULTIPEAKON_U",
    "cusp_alpha",
    "cusp_data",
    "exact_breaking_locations",
    "exact_multipeakon",
    "fine_reference",
    "multipeakon",
    "multipeakon_alpha",
    "multipeakon_state",
]

F = Fraction

MULTIPEAKON_U = (
    (F(0), F(1), F(400, 361), F(800, 361), F(200, 81), F(100, 27)),
    (F(3), F(2), F(2), F(18, 19), F(18, 19), F(-28, 171)),
)
MULTIPEAKON_ALPHA = (
    (F(1434, 361), F(6879, 1444), F(5)),
    (F(0), F(3, 4), F(4, 5)),
)


def _pl_eval(nodes: Sequence[Fraction], values: Sequence[Fraction],
             x: Fraction) -> Fraction:
    """Exact evaluation of a piecewise-linear function with constant tails."""
    if x <= nodes[0]:
        return values[0]
    if x >= nodes[-1]:
        return values[-1]
    for i in range(len(nodes) - 1):
        if nodes[i] <= x <= nodes[i + 1]:
            h = nodes[i + 1] - nodes[i]
            return values[i] + (values[i + 1] - values[i]) * (x - nodes[i]) / h
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class _Regime:
    start: Fraction
    zeta_minus: Fraction
    U_minus: Fraction
    V_inf: Fraction
    v: tuple  # current energy density per cell


class ExactPiecewiseSolution:
    """Exact dissipative evolution of piecewise-linear data with ``F = G``.

    *u_nodes*/*u_values* describe ``u0`` (constant tails), *alpha_nodes*/
    *alpha_values* the dissipation profile.  All inputs are converted to
    :class:`fractions.Fraction`.
    """

    def __init__(self, u_nodes, u_values, alpha_nodes, alpha_values) -> None:
        x = [F(v) for v in u_nodes]
        u = [F(v) for v in u_values]
        self.alpha_nodes = tuple(F(v) for v in alpha_nodes)
        self.alpha_values = tuple(F(v) for v in alpha_values)

        xi = [x[0]]
        Fcum = F(0)
        dy, dU, dV = [], [], []
        for i in range(len(x) - 1):
            h = x[i + 1] - x[i]
            s = (u[i + 1] - u[i]) / h
            d = 1 + s * s
            Fcum += s * s * h
            xi.append(x[i + 1] + Fcum)
            dy.append(1 / d)
            dU.append(s / d)
            dV.append(s * s / d)
        self.xi = tuple(xi)
        self.y0 = tuple(x)
        self.U0 = tuple(u)
        self.dy0, self.dU0, self.v0 = tuple(dy), tuple(dU), tuple(dV)
        self.widths = tuple(xi[i + 1] - xi[i] for i in range(len(xi) - 1))
        self.H_nodes = tuple(xi[j] - x[j] for j in range(len(x)))
        self.tau = tuple(-2 * a / b if b < 0 else None
                         for a, b in zip(self.dy0, self.dU0))
        self.events = tuple(sorted({t for t in self.tau if t is not None}))
        self._build_regimes()

    # {{{ construction

    def alpha(self, x: Fraction) -> Fraction:
        return _pl_eval(self.alpha_nodes, self.alpha_values, x)

    def _cell(self, c: int, v: Fraction, t: Fraction) -> tuple[Fraction, Fraction]:
        tau = self.tau[c]
        if tau is not None and self.v0[c] > 0:
            s = t - tau
            return v * s * s / 4, v * s / 2
        h = t
        return (self.dy0[c] + self.dU0[c] * h + self.v0[c] * h * h / 4,
                self.dU0[c] + self.v0[c] * h / 2)

    def _build_regimes(self) -> None:
        V0 = sum(v * w for v, w in zip(self.v0, self.widths))
        reg = _Regime(F(0), self.y0[0] - self.xi[0], self.U0[0], V0, self.v0)
        regimes = [reg]
        self.breaking = []
        for tb in self.events:
            zeta, U, _ = self._asymptotes(reg, tb)
            ys = self._nodes(reg, tb, zeta, U)[0]
            v = list(reg.v)
            for c, tau in enumerate(self.tau):
                if tau == tb:
                    beta = self.alpha(ys[c])
                    v[c] = (1 - beta) * self.v0[c]
                    self.breaking.append((tb, ys[c], beta))
            V_inf = sum(a * w for a, w in zip(v, self.widths))
            reg = _Regime(tb, zeta, U, V_inf, tuple(v))
            regimes.append(reg)
        self.regimes = tuple(regimes)
        # several cells may break at the same place; keep one entry per event
        seen = {}
        for tb, loc, beta in self.breaking:
            seen.setdefault((tb, loc), beta)
        self.breaking = tuple((tb, loc, beta) for (tb, loc), beta in seen.items())

    def _asymptotes(self, reg: _Regime, t: Fraction):
        h = t - reg.start
        U = reg.U_minus - reg.V_inf * h / 4
        zeta = reg.zeta_minus + reg.U_minus * h - reg.V_inf * h * h / 8
        return zeta, U, reg.V_inf

    def _nodes(self, reg: _Regime, t: Fraction, zeta: Fraction, U: Fraction):
        ys, Us, Vs = [zeta + self.xi[0]], [U], [F(0)]
        z = zeta
        for c, w in enumerate(self.widths):
            dy, dU = self._cell(c, reg.v[c], t)
            z += (dy - 1) * w
            U += dU * w
            ys.append(z + self.xi[c + 1])
            Us.append(U)
            Vs.append(Vs[-1] + reg.v[c] * w)
        return ys, Us, Vs

    # }}}

    def regime_index(self, t: Fraction) -> int:
        """Regime holding ``t``; breaking times belong to the later regime."""
        k = 0
        for i, r in enumerate(self.regimes):
            if r.start <= t:
                k = i
        return k

    def nodes_at(self, t) -> dict[str, tuple]:
        """Exact node values ``y, U, V, H`` at the labels ``xi``."""
        t = F(t)
        if t < 0:
            raise ValueError("t must be nonnegative")
        reg = self.regimes[self.regime_index(t)]
        zeta, U, _ = self._asymptotes(reg, t)
        ys, Us, Vs = self._nodes(reg, t, zeta, U)
        return {"xi": self.xi, "y": tuple(ys), "U": tuple(Us), "V": tuple(Vs),
                "H": self.H_nodes}

    def lagrangian(self, t, xi) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """``(y, U, V, H)(t, xi)`` exactly."""
        t, xi = F(t), F(xi)
        nv = self.nodes_at(t)
        k = self.regime_index(t)
        nodes = self.xi
        if xi <= nodes[0]:
            return xi + nv["y"][0] - nodes[0], nv["U"][0], F(0), F(0)
        if xi >= nodes[-1]:
            return (xi + nv["y"][-1] - nodes[-1], nv["U"][-1], nv["V"][-1],
                    self.H_nodes[-1])
        for c in range(len(nodes) - 1):
            if nodes[c] <= xi <= nodes[c + 1]:
                dy, dU = self._cell(c, self.regimes[k].v[c], t)
                d = xi - nodes[c]
                dH = (self.H_nodes[c + 1] - self.H_nodes[c]) / self.widths[c]
                return (nv["y"][c] + dy * d, nv["U"][c] + dU * d,
                        nv["V"][c] + self.regimes[k].v[c] * d,
                        self.H_nodes[c] + dH * d)
        raise AssertionError("unreachable")

    def energy(self, t) -> Fraction:
        return self.regimes[self.regime_index(F(t))].V_inf

    def eulerian(self, t) -> EulerianState:
        """``(u, F)(t)`` as piecewise-linear data (``G`` is the pushforward
        of ``H``)."""
        nv = self.nodes_at(t)
        y = [float(v) for v in nv["y"]]
        groups: list[list[int]] = []
        # group on the rounded positions: distinct exact nodes may round alike
        for j, yj in enumerate(y):
            if groups and y[groups[-1][0]] == yj:
                groups[-1].append(j)
            else:
                groups.append([j])
        x = np.array([y[g[0]] for g in groups])
        u = np.array([float(nv["U"][g[0]]) for g in groups])
        Fl = np.array([float(nv["V"][g[0]]) for g in groups])
        Fr = np.array([float(nv["V"][g[-1]]) for g in groups])
        Gl = np.array([float(nv["H"][g[0]]) for g in groups])
        Gr = np.array([float(nv["H"][g[-1]]) for g in groups])
        jumps = Fr - Fl
        Fs_r = np.cumsum(jumps)
        Fs_l = Fs_r - jumps
        Fac = np.maximum.accumulate(Fl - Fs_l)
        return EulerianState(
            PiecewiseLinear(x, u), MonotoneStep.continuous(x, Fac),
            MonotoneStep(x, Fs_l, Fs_r), MonotoneStep(x, Gl, Gr))

    def u_F(self, t, x) -> tuple[float, float]:
        """Pointwise ``(u, F)(t, x)``, ``F`` left-continuous in ``x``."""
        st = self.eulerian(t)
        return float(st.u(x)), float(st.F(x))


# {{{ multipeakon

_MULTIPEAKON: ExactPiecewiseSolution | None = None


def multipeakon() -> ExactPiecewiseSolution:
    global _MULTIPEAKON
    if _MULTIPEAKON is None:
        _MULTIPEAKON = ExactPiecewiseSolution(*MULTIPEAKON_U, *MULTIPEAKON_ALPHA)
    return _MULTIPEAKON


def multipeakon_state() -> EulerianState:
    nodes, values = MULTIPEAKON_U
    u = PiecewiseLinear([float(v) for v in nodes], [float(v) for v in values])
    return EulerianState.from_profile(u)


def multipeakon_alpha() -> AlphaProfile:
    nodes, values = MULTIPEAKON_ALPHA
    return AlphaProfile.from_nodes([float(v) for v in nodes],
                                   [float(v) for v in values])


def exact_multipeakon(t: float, x: float) -> tuple[float, float]:
    return multipeakon().u_F(t, x)


def exact_breaking_locations() -> list[tuple[Fraction, Fraction, Fraction]]:
    """``(time, position, removed fraction)`` for every breaking event."""
    return list(multipeakon().breaking)

# }}}


# {{{ cusp

def cusp_alpha(beta: float = 0.95) -> AlphaProfile:
    return AlphaProfile.from_nodes([-1.0, 0.0], [beta, 0.0])


def cusp_u(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) <= 1.0, np.abs(np.clip(x, -1.0, 1.0)) ** (2.0 / 3.0), 1.0)


def cusp_F(x):
    x = np.asarray(x, dtype=np.float64)
    xc = np.clip(x, -1.0, 1.0)
    inner = (4.0 / 3.0) * (1.0 + np.sign(xc) * np.abs(xc) ** (1.0 / 3.0))
    return np.where(x < -1.0, 0.0, np.where(x > 1.0, 8.0 / 3.0, inner))


def cusp_data(dx: float) -> EulerianState:
    """Cusp data projected onto the grid of spacing *dx*."""
    from alphahs.eulerian import project_function
    return project_function(cusp_u, cusp_F, dx, (-1.0, 1.0))

# }}}


# {{{ fine reference with disk cache

CACHE_VERSION = 1


def _state_hash(state: EulerianState, alpha: AlphaProfile, dx_ref: float,
                T: float, query_times) -> str:
    h = hashlib.sha256()
    for arr in (state.u.nodes, state.u.values, state.F_ac.nodes,
                state.F_ac.left_values, state.F_sing.nodes,
                state.F_sing.left_values, state.F_sing.right_values,
                alpha.profile.nodes, alpha.profile.values,
                np.asarray(sorted(float(t) for t in query_times))):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    h.update(np.array([dx_ref, T], dtype=np.float64).tobytes())
    h.update(str(CACHE_VERSION).encode())
    return h.hexdigest()


def _pack(state: EulerianState, prefix: str, out: dict) -> None:
    out[prefix + "x"] = state.u.nodes
    out[prefix + "u"] = state.u.values
    out[prefix + "Fac"] = state.F_ac.left_values
    out[prefix + "Fs_x"] = state.F_sing.nodes
    out[prefix + "Fs_l"] = state.F_sing.left_values
    out[prefix + "Fs_r"] = state.F_sing.right_values
    out[prefix + "G_x"] = state.G.nodes
    out[prefix + "G_l"] = state.G.left_values
    out[prefix + "G_r"] = state.G.right_values


def _unpack(data, prefix: str) -> EulerianState:
    x = data[prefix + "x"]
    return EulerianState(
        PiecewiseLinear(x, data[prefix + "u"]),
        MonotoneStep.continuous(x, data[prefix + "Fac"]),
        MonotoneStep(data[prefix + "Fs_x"], data[prefix + "Fs_l"], data[prefix + "Fs_r"]),
        MonotoneStep(data[prefix + "G_x"], data[prefix + "G_l"], data[prefix + "G_r"]))


def default_cache_dir() -> Path:
    return Path(os.environ.get("ALPHAHS_CACHE", Path.home() / ".cache" / "alphahs"))


def fine_reference(state0: EulerianState, alpha: AlphaProfile, dx_ref: float,
                   T: float, query_times, *, projected: bool = False,
                   cache_dir: str | Path | None = None) -> dict[float, EulerianState]:
    """Numerical solution on a fine grid, keyed by query time.

    Results are cached under *cache_dir* (default ``$ALPHAHS_CACHE`` or
    ``~/.cache/alphahs``); pass ``cache_dir=False`` to disable caching.
    Files are written to a temporary name and renamed into place.
    """
    from alphahs.evolution import EvolutionConfig, solve

    times = [float(t) for t in query_times]
    key = _state_hash(state0, alpha, dx_ref, T, times)
    path = None
    if cache_dir is not False:
        root = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        path = root / f"ref-{key[:32]}.npz"
        if path.exists():
            with np.load(path, allow_pickle=False) as data:
                header = json.loads(str(data["header"]))
                if (header.get("version") == CACHE_VERSION
                        and header.get("hash") == key):
                    return {t: _unpack(data, f"t{i}_") for i, t in enumerate(header["times"])}

    _, res = solve(state0, alpha, dx_ref, T,
                   EvolutionConfig(check_invariants=False), times,
                   project_data=not projected)
    out = {t: res[t][1] for t in times}

    if path is not None:
        arrays: dict = {}
        for i, t in enumerate(times):
            _pack(out[t], f"t{i}_", arrays)
        header = {"version": CACHE_VERSION, "hash": key, "dx_ref": dx_ref,
                  "T": T, "times": times}
        arrays["header"] = np.array(json.dumps(header))
        path.parent.mkdir(parents=True, exist_ok=True)
        buf = io.BytesIO()
        np.savez(buf, **arrays)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(buf.getvalue())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    return out

# }}}
