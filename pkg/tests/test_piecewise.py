from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from alphahs.oracle import MULTIPEAKON_U
from alphahs.piecewise import (
    InfiniteNormError,
    MonotoneStep,
    PiecewiseLinear,
    generalized_inverse,
    l1_norm_diff,
    l2_norm_diff,
    sup_norm_diff,
)


def _u0():
    nodes, values = MULTIPEAKON_U
    return PiecewiseLinear([float(v) for v in nodes], [float(v) for v in values])


# {{{ strategies

@st.composite
def pl_functions(draw, min_nodes=2, max_nodes=7):
    n = draw(st.integers(min_nodes, max_nodes))
    gaps = draw(st.lists(st.floats(0.05, 2.0), min_size=n - 1, max_size=n - 1))
    x0 = draw(st.floats(-3.0, 0.0))
    nodes = x0 + np.concatenate([[0.0], np.cumsum(gaps)])
    values = draw(st.lists(st.floats(-2.0, 2.0), min_size=n, max_size=n))
    return PiecewiseLinear(nodes, values)


@st.composite
def monotone_steps(draw):
    n = draw(st.integers(1, 6))
    gaps = draw(st.lists(st.floats(0.05, 2.0), min_size=n - 1, max_size=n - 1))
    nodes = np.concatenate([[0.0], np.cumsum(gaps)]) - 1.0
    incs = draw(st.lists(st.floats(0.0, 2.0), min_size=n - 1, max_size=n - 1))
    jumps = draw(st.lists(st.sampled_from([0.0, 0.0, 0.5, 1.5]), min_size=n, max_size=n))
    left = np.zeros(n)
    right = np.zeros(n)
    acc = 0.0
    for i in range(n):
        left[i] = acc
        acc += jumps[i]
        right[i] = acc
        if i < n - 1:
            acc += incs[i]
    return MonotoneStep(nodes, left, right)

# }}}


def test_eval_interpolates():
    f = PiecewiseLinear([0.0, 1.0], [0.0, 1.0])
    assert f(0.5) == 0.5
    assert f(-5.0) == f.left_tail == 0.0
    assert f(7.0) == f.right_tail == 1.0


def test_eval_initial_multipeakon_profile():
    assert _u0()(0.5) == pytest.approx(2.5, abs=1e-15)


def test_rejects_repeated_nodes():
    with pytest.raises(ValueError):
        PiecewiseLinear([0.0, 0.0, 1.0], [0.0, 1.0, 2.0])


def test_monotone_step_is_left_continuous():
    g = MonotoneStep([0.0, 1.0], [0.0, 1.0], [0.5, 2.0])
    assert g(0.0) == 0.0
    assert g.right_limit(0.0) == 0.5
    assert g(1.0) == 1.0
    assert g(0.5) == pytest.approx(0.75)
    assert g(5.0) == g.total == 2.0
    assert g(-1.0) == 0.0


def test_monotone_step_rejects_decrease():
    with pytest.raises(ValueError):
        MonotoneStep([0.0, 1.0], [0.0, 0.5], [1.0, 0.5])


@given(pl_functions())
def test_eval_is_affine_between_nodes(f):
    for a, b in zip(f.nodes[:-1], f.nodes[1:]):
        z = np.linspace(a, b, 9)
        v = f(z)
        second = v[2:] - 2.0 * v[1:-1] + v[:-2]
        assert np.max(np.abs(second)) <= 1e-12 * max(1.0, np.max(np.abs(v)))


def test_generalized_inverse_of_zero_is_identity():
    y = generalized_inverse(MonotoneStep.zero())
    z = np.linspace(-3.0, 3.0, 13)
    np.testing.assert_allclose(y(z), z, atol=1e-15)


def test_generalized_inverse_single_jump_gives_plateau():
    h = 1.5
    g = MonotoneStep([0.0], [0.0], [h])
    y = generalized_inverse(g)
    np.testing.assert_array_equal(y(np.linspace(0.0, h, 7)), 0.0)
    assert y(h + 1.0) == pytest.approx(1.0)
    assert y(-1.0) == pytest.approx(-1.0)


def test_generalized_inverse_of_initial_energy():
    u0 = _u0()
    inc = u0.slopes**2 * np.diff(u0.nodes)
    G = MonotoneStep.continuous(u0.nodes, np.concatenate([[0.0], np.cumsum(inc)]))
    y = generalized_inverse(G)
    for xi in (0.25, 1.0, 1.75):
        assert y(xi) == pytest.approx(xi / 2, abs=1e-14)
    assert y(2.05) == pytest.approx(2.05 - 1.0, abs=1e-14)
    assert y(10.0) == pytest.approx(7.0, abs=1e-14)


@given(monotone_steps(), st.floats(-4.0, 12.0))
def test_generalized_inverse_brackets_label(g, xi):
    y = generalized_inverse(g)(xi)
    tol = 1e-12 * max(1.0, abs(xi))
    assert y + g(y) <= xi + tol
    assert xi <= y + g.right_limit(y) + tol


def test_norms_of_tent():
    f = PiecewiseLinear([-1.0, 0.0, 1.0], [0.0, 1.0, 0.0])
    g = PiecewiseLinear.constant(0.0)
    assert sup_norm_diff(f, g) == 1.0
    assert l1_norm_diff(f, g) == pytest.approx(1.0, rel=1e-15)
    assert l2_norm_diff(f, g) == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-15)


@given(pl_functions())
def test_norms_vanish_on_identical(f):
    assert sup_norm_diff(f, f) == 0.0
    assert l1_norm_diff(f, f) == 0.0
    assert l2_norm_diff(f, f) == 0.0


def test_infinite_norm_for_different_tails():
    with pytest.raises(InfiniteNormError):
        l2_norm_diff(PiecewiseLinear.constant(1.0), PiecewiseLinear.constant(0.0))


@given(pl_functions(), pl_functions())
def test_norms_match_quadrature(f, g):
    # tails must agree for the integral norms to be finite
    g = PiecewiseLinear(np.concatenate([g.nodes, [10.0]]),
                        np.concatenate([g.values, [f.right_tail]]))
    f = PiecewiseLinear(np.concatenate([[-10.0], f.nodes]),
                        np.concatenate([[g.left_tail], f.values]))
    pts = np.union1d(f.nodes, g.nodes)
    l1 = sum(integrate.quad(lambda x: abs(f(x) - g(x)), a, b, epsabs=1e-14, epsrel=1e-12)[0]
             for a, b in zip(pts[:-1], pts[1:]))
    l2 = math.sqrt(sum(integrate.quad(lambda x: (f(x) - g(x))**2, a, b,
                                      epsabs=1e-14, epsrel=1e-12)[0]
                       for a, b in zip(pts[:-1], pts[1:])))
    assert l1_norm_diff(f, g) == pytest.approx(l1, rel=1e-10, abs=1e-12)
    assert l2_norm_diff(f, g) == pytest.approx(l2, rel=1e-10, abs=1e-12)
    z = np.linspace(-11.0, 11.0, 4001)
    assert sup_norm_diff(f, g) >= np.max(np.abs(f(z) - g(z))) - 1e-14


def test_projection_sup_bound_at_coarse_grid(mp_state):
    from alphahs.eulerian import project
    p = project(mp_state, 0.1)
    assert sup_norm_diff(mp_state.u, p.u) <= (1 + math.sqrt(2)) * math.sqrt(3) * math.sqrt(0.1)
