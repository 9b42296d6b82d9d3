from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alphahs.eulerian import EulerianState, project
from alphahs.lagrangian import (
    LagrangianGrid,
    breaking_times,
    cell_breaking_times,
    check_grid,
    to_eulerian,
    to_lagrangian,
)
from alphahs.piecewise import MonotoneStep, PiecewiseLinear

from conftest import random_profile


@st.composite
def projected_states(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    dx = draw(st.sampled_from([0.1, 0.05, 0.01]))
    rng = np.random.default_rng(seed)
    s = EulerianState.from_profile(random_profile(rng))
    if draw(st.booleans()):
        # add a point mass to both measures
        x0 = float(rng.uniform(-1.0, 1.0))
        m = float(rng.uniform(0.1, 1.0))
        Fs = MonotoneStep([x0], [0.0], [m])
        s = EulerianState(s.u, s.F_ac, Fs, s.F_ac + Fs)
    return project(s, dx)


def _state_close(a: EulerianState, b: EulerianState, rtol=1e-12):
    z = np.union1d(a.all_nodes(), b.all_nodes())
    scale = max(1.0, a.G_inf, float(np.max(np.abs(a.u.values))))
    tol = rtol * scale
    np.testing.assert_allclose(a.u(z), b.u(z), atol=tol)
    for f, g in ((a.F, b.F), (a.G, b.G)):
        fl, fr = f.limits(z)
        gl, gr = g.limits(z)
        np.testing.assert_allclose(fl, gl, atol=tol)
        np.testing.assert_allclose(fr, gr, atol=tol)


def test_zero_energy_data():
    s = EulerianState.from_profile(PiecewiseLinear.constant(0.7))
    g = to_lagrangian(s)
    np.testing.assert_array_equal(g.y, g.xi)
    np.testing.assert_array_equal(g.U, 0.7)
    np.testing.assert_array_equal(g.V, 0.0)
    np.testing.assert_array_equal(g.H, 0.0)
    bt = breaking_times(g)
    np.testing.assert_array_equal(bt.distinct, [0.0])


def test_multipeakon_initial_grid(mp_state, mp_exact):
    g = to_lagrangian(mp_state)
    xi_exact = np.array([float(v) for v in mp_exact.xi])
    np.testing.assert_allclose(g.xi, xi_exact, rtol=1e-15)
    f = g.functions()
    for xi in (2.05, 2.1):
        assert f["y"](xi) == pytest.approx(xi - 1.0, abs=1e-14)
    assert f["y"](1.0) == pytest.approx(0.5, abs=1e-15)
    assert f["U"](1.0) == pytest.approx(2.5, abs=1e-15)
    assert f["V"](3.0) == pytest.approx(361 / 761 * 3.0, rel=1e-14)
    assert check_grid(g, initial=True) == []


def test_multipeakon_breaking_times(mp_state):
    bt = breaking_times(to_lagrangian(mp_state))
    np.testing.assert_allclose(bt.distinct, [0.0, 2.0, 40 / 19, 20 / 9], rtol=1e-14)


def test_jump_in_G_becomes_plateau():
    u = PiecewiseLinear([0.0, 1.0], [0.0, 0.0])
    F0 = MonotoneStep.continuous([0.0, 1.0], [0.0, 0.0])
    Fs = MonotoneStep([0.5], [0.0], [2.0])
    g = to_lagrangian(EulerianState(u, F0, Fs, F0 + Fs))
    c = int(np.flatnonzero(g.dH == 1.0)[0])
    assert g.xi[c] < g.xi[c + 1]
    assert g.y[c] == g.y[c + 1] == 0.5
    assert g.dy[c] == 0.0 and g.dU[c] == 0.0
    assert g.tau[c] == 0.0
    assert np.all(np.diff(g.xi) > 0.0)


def test_cell_breaking_time_formula():
    np.testing.assert_array_equal(
        cell_breaking_times([0.5, 0.5, 0.0, 1.0], [-0.5, 0.5, 0.0, 0.0]),
        [2.0, np.inf, 0.0, np.inf])


def test_breaking_times_deduplicate_to_smallest():
    dy = np.array([1.0, 1.0, 1.0])
    dU = -2.0 / np.array([2.0, 2.0 + 1e-14, 3.0])
    xi = np.array([0.0, 1.0, 2.0, 3.0])
    V = np.concatenate([[0.0], np.cumsum(dU**2 / dy)])
    g = LagrangianGrid(xi, xi.copy(), np.zeros(4), V, V, dy, dU, dU**2 / dy,
                       dU**2 / dy, cell_breaking_times(dy, dU))
    bt = breaking_times(g, T=5.0)
    np.testing.assert_array_equal(bt.distinct, [0.0, 2.0, 3.0])
    assert bt.tau[0] == bt.tau[1] == 2.0
    np.testing.assert_array_equal(bt.label, [1, 1, 2])
    np.testing.assert_array_equal(bt.bucket(1), [0, 1])


@given(projected_states())
def test_lagrangian_grid_properties(s):
    g = to_lagrangian(s)
    assert check_grid(g, initial=True) == []
    assert np.all((g.dy >= 0) & (g.dy <= 1) & (g.dH >= 0) & (g.dH <= 1))
    np.testing.assert_allclose(g.dy + g.dH, 1.0, rtol=1e-15)
    assert g.V_inf == pytest.approx(s.F_inf, rel=1e-12)
    assert g.V_inf == pytest.approx(float(np.sum(g.dV * g.widths)), rel=1e-12)


@given(projected_states())
def test_round_trip(s):
    _state_close(to_eulerian(to_lagrangian(s)), s)


def test_round_trip_multipeakon(mp_state):
    _state_close(to_eulerian(to_lagrangian(mp_state)), mp_state)


def test_plateau_pushes_forward_to_jump():
    xi = np.array([0.0, 1.0, 3.0, 4.0])
    y = np.array([0.0, 1.0, 1.0, 2.0])
    dy = np.array([1.0, 0.0, 1.0])
    dV = np.array([0.0, 0.5, 0.0])
    V = np.array([0.0, 0.0, 1.0, 1.0])
    g = LagrangianGrid(xi, y, np.zeros(4), V, V, dy, np.zeros(3), dV, dV,
                       cell_breaking_times(dy, np.zeros(3)))
    e = to_eulerian(g)
    assert e.F(1.0) == 0.0
    assert e.F.right_limit(1.0) == 1.0
    assert e.F_sing.total == 1.0


@pytest.mark.parametrize("dx", [0.1, 0.01, 0.001])
def test_projected_labels_close_to_exact(mp_state, dx):
    """Positions and energies of projected data differ by at most 2 dx."""
    g = to_lagrangian(mp_state)
    gd = to_lagrangian(project(mp_state, dx))
    f, fd = g.functions(), gd.functions()
    z = np.union1d(g.xi, gd.xi)
    assert np.max(np.abs(f["y"](z) - fd["y"](z))) <= 2 * dx + 1e-12
    assert np.max(np.abs(f["H"](z) - fd["H"](z))) <= 2 * dx + 1e-12


def test_exact_lagrangian_pushes_forward_to_exact_eulerian(mp_exact):
    t = Fraction(3)
    nv = mp_exact.nodes_at(t)
    xi = np.array([float(v) for v in nv["xi"]])
    y = np.array([float(v) for v in nv["y"]])
    U = np.array([float(v) for v in nv["U"]])
    V = np.array([float(v) for v in nv["V"]])
    H = np.array([float(v) for v in nv["H"]])
    w = np.diff(xi)
    dy, dU, dV, dH = (np.diff(a) / w for a in (y, U, V, H))
    g = LagrangianGrid(xi, y, U, V, H, dy, dU, dV, dH, cell_breaking_times(dy, dU))
    e = to_eulerian(g)
    for x in np.linspace(4.0, 10.0, 25):
        u_ref, F_ref = mp_exact.u_F(3.0, float(x))
        assert e.u(x) == pytest.approx(u_ref, abs=1e-12)
        assert e.F(x) == pytest.approx(F_ref, abs=1e-12)
