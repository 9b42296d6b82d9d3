"""Piecewise-linear carriers on the real line.

Two value types live here:

* :class:`PiecewiseLinear` -- a continuous function, linear between nodes and
  affine beyond the outermost nodes (constant by default).
* :class:`MonotoneStep` -- a nondecreasing, left-continuous function that is
  linear between nodes but may jump at them.  Primitives of measures
  (``F(x) = mu((-inf, x))``) are stored this way.

Norms of differences are computed segment-wise in closed form on the common
refinement of both node sets, so no quadrature tolerance enters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "InfiniteNormError",
    "MonotoneStep",
    "PiecewiseLinear",
    "generalized_inverse",
    "l1_norm_diff",
    "l2_norm_diff",
    "sup_norm_diff",
]


class InfiniteNormError(ValueError):
    """Raised when the requested norm of a difference is not finite."""


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function.

    Between consecutive *nodes* the function interpolates *values*
    linearly.  Outside ``[nodes[0], nodes[-1]]`` it continues with slope
    *tail_slope*; the default ``0`` gives constant tails equal to the first
    and last value.  A tail slope of ``1`` is used for characteristics
    ``y`` that behave like the identity at infinity.
    """

    nodes: np.ndarray
    values: np.ndarray
    tail_slope: float = 0.0

    def __post_init__(self) -> None:
        nodes = _frozen(self.nodes)
        values = _frozen(self.values)
        if nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("nodes must be a nonempty 1d array")
        if values.shape != nodes.shape:
            raise ValueError(
                f"values shape {values.shape} does not match nodes {nodes.shape}")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))):
            raise ValueError("nodes and values must be finite")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tail_slope", float(self.tail_slope))

    @classmethod
    def constant(cls, c: float, at: float = 0.0) -> PiecewiseLinear:
        return cls(np.array([at]), np.array([c]))

    @classmethod
    def identity(cls) -> PiecewiseLinear:
        return cls(np.array([0.0]), np.array([0.0]), tail_slope=1.0)

    @property
    def left_tail(self) -> float:
        return float(self.values[0])

    @property
    def right_tail(self) -> float:
        return float(self.values[-1])

    @property
    def slopes(self) -> np.ndarray:
        """Slopes on the ``len(nodes) - 1`` interior segments."""
        return np.diff(self.values) / np.diff(self.nodes)

    def lipschitz(self) -> float:
        s = self.slopes
        interior = float(np.max(np.abs(s))) if s.size else 0.0
        return max(interior, abs(self.tail_slope))

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.interp(x, self.nodes, self.values)
        if self.tail_slope != 0.0:
            out = out + self.tail_slope * (
                np.minimum(x - self.nodes[0], 0.0)
                + np.maximum(x - self.nodes[-1], 0.0))
        return out if out.ndim else float(out)

    def limits(self, x):
        v = self(x)
        return v, v

    def shifted(self, c: float) -> PiecewiseLinear:
        return PiecewiseLinear(self.nodes, self.values + c, self.tail_slope)

    def __repr__(self) -> str:
        return (f"PiecewiseLinear(n={self.nodes.size}, "
                f"[{self.nodes[0]:.6g}, {self.nodes[-1]:.6g}], "
                f"tail_slope={self.tail_slope:g})")


@dataclass(frozen=True, eq=False)
class MonotoneStep:
    """Nondecreasing left-continuous piecewise-linear function with jumps.

    At ``nodes[i]`` the function takes ``left_values[i]`` (the limit from
    below) and jumps to ``right_values[i]``.  On ``(nodes[i], nodes[i+1])``
    it is linear from ``right_values[i]`` to ``left_values[i+1]``.  Below the
    first node it is ``0``; above the last node it stays at
    ``right_values[-1]``.
    """

    nodes: np.ndarray
    left_values: np.ndarray
    right_values: np.ndarray

    def __post_init__(self) -> None:
        nodes = _frozen(self.nodes)
        left = _frozen(self.left_values)
        right = _frozen(self.right_values)
        if nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("nodes must be a nonempty 1d array")
        if left.shape != nodes.shape or right.shape != nodes.shape:
            raise ValueError("left/right values must match nodes")
        if nodes.size > 1 and not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if left[0] != 0.0:
            raise ValueError("a primitive of a measure must vanish at -inf")
        scale = max(1.0, float(np.max(np.abs(right))))
        tol = 1.0e-12 * scale
        if np.any(right - left < -tol):
            raise ValueError("jumps must be nonnegative")
        if nodes.size > 1 and np.any(left[1:] - right[:-1] < -tol):
            raise ValueError("function must be nondecreasing between nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "left_values", left)
        object.__setattr__(self, "right_values", right)

    @classmethod
    def zero(cls, at: float = 0.0) -> MonotoneStep:
        return cls(np.array([at]), np.array([0.0]), np.array([0.0]))

    @classmethod
    def continuous(cls, nodes, values) -> MonotoneStep:
        """Continuous nondecreasing function; ``values[0]`` must be 0."""
        return cls(nodes, values, values)

    @property
    def total(self) -> float:
        """Limit at ``+inf`` (total mass of the measure)."""
        return float(self.right_values[-1])

    @property
    def jumps(self) -> np.ndarray:
        return self.right_values - self.left_values

    @property
    def slopes(self) -> np.ndarray:
        return (self.left_values[1:] - self.right_values[:-1]) / np.diff(self.nodes)

    def _eval(self, x, side: str):
        x = np.asarray(x, dtype=np.float64)
        xs = np.atleast_1d(x)
        nodes = self.nodes
        n = nodes.size
        # nodes[i] <= x < nodes[i+1]
        i = np.searchsorted(nodes, xs, side="right") - 1
        out = np.empty_like(xs)
        below = i < 0
        above = i >= n - 1
        mid = ~(below | above)
        out[below] = 0.0
        out[above] = self.right_values[-1]
        ii = i[mid]
        if ii.size:
            x0 = nodes[ii]
            a = self.right_values[ii]
            b = self.left_values[ii + 1]
            out[mid] = a + (b - a) * (xs[mid] - x0) / (nodes[ii + 1] - x0)
        hit = ~below
        hit[hit] = nodes[i[hit]] == xs[hit]
        if side == "left":
            out[hit] = self.left_values[i[hit]]
        else:
            out[hit] = self.right_values[i[hit]]
        return out if x.ndim else float(out[0])

    def __call__(self, x):
        """Left-continuous evaluation ``F(x) = mu((-inf, x))``."""
        return self._eval(x, "left")

    def right_limit(self, x):
        """``F(x+) = mu((-inf, x])``."""
        return self._eval(x, "right")

    def limits(self, x):
        return self._eval(x, "left"), self._eval(x, "right")

    def __add__(self, other: MonotoneStep) -> MonotoneStep:
        nodes = np.union1d(self.nodes, other.nodes)
        left = self(nodes) + other(nodes)
        right = self.right_limit(nodes) + other.right_limit(nodes)
        return MonotoneStep(nodes, left, right)

    def __repr__(self) -> str:
        return (f"MonotoneStep(n={self.nodes.size}, "
                f"[{self.nodes[0]:.6g}, {self.nodes[-1]:.6g}], "
                f"total={self.total:.6g})")


Function = Union[PiecewiseLinear, MonotoneStep]


def generalized_inverse(g: MonotoneStep, shift: bool = False) -> PiecewiseLinear:
    """Pseudo-inverse ``xi -> sup{x : x + g(x) < xi}``.

    Jumps of *g* turn into plateaus of the result and a slope ``s`` of *g*
    into a slope ``1 / (1 + s)``.  With *shift* the returned function is
    ``y - id``, which has constant tails; otherwise ``y`` itself with unit
    tail slope.
    """
    x = g.nodes
    xi_left = x + g.left_values
    xi_right = x + g.right_values
    has_jump = g.jumps > 0.0
    idx = np.repeat(np.arange(x.size), 1 + has_jump.astype(np.intp))
    second = np.zeros(idx.size, dtype=bool)
    second[1:] = idx[1:] == idx[:-1]
    xi = np.where(second, xi_right[idx], xi_left[idx])
    y = x[idx]
    if shift:
        return PiecewiseLinear(xi, y - xi, tail_slope=0.0)
    return PiecewiseLinear(xi, y, tail_slope=1.0)


# {{{ norms of differences

def _refinement(f: Function, g: Function) -> np.ndarray:
    return np.union1d(f.nodes, g.nodes)


def _tail_slope(f: Function) -> float:
    return getattr(f, "tail_slope", 0.0)


def _segment_values(f: Function, g: Function):
    """Difference ``f - g`` as linear pieces on the common refinement.

    Returns ``(z, a, b, left_tail, right_tail)`` where ``a[i]`` and ``b[i]``
    are the one-sided limits of the difference at the ends of
    ``(z[i], z[i+1])``.
    """
    if _tail_slope(f) != _tail_slope(g):
        raise InfiniteNormError("tail slopes differ; difference is unbounded")
    z = _refinement(f, g)
    fl, fr = f.limits(z)
    gl, gr = g.limits(z)
    dl = np.atleast_1d(fl - gl)
    dr = np.atleast_1d(fr - gr)
    return z, dr[:-1], dl[1:], float(dl[0]), float(dr[-1])


def _int_abs_linear(a, b, h):
    """Exact integral of ``|a + (b - a) s|`` over a segment of length h."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    same = a * b >= 0.0
    denom = np.abs(a) + np.abs(b)
    safe = np.where(denom > 0.0, denom, 1.0)
    return h * np.where(same, 0.5 * denom, 0.5 * (a * a + b * b) / safe)


def _int_sq_linear(a, b, h):
    """Exact integral of ``(a + (b - a) s)**2`` over a segment of length h."""
    return h * (a * a + a * b + b * b) / 3.0


def sup_norm_diff(f: Function, g: Function) -> float:
    z, a, b, lt, rt = _segment_values(f, g)
    # point values of left-continuous functions are left limits, already in b
    parts = [abs(lt), abs(rt)]
    if a.size:
        parts.append(float(np.max(np.abs(a))))
        parts.append(float(np.max(np.abs(b))))
    return max(parts)


def l1_norm_diff(f: Function, g: Function) -> float:
    z, a, b, lt, rt = _segment_values(f, g)
    if lt != 0.0 or rt != 0.0:
        raise InfiniteNormError("difference has nonzero tails; L1 norm is infinite")
    return float(np.sum(_int_abs_linear(a, b, np.diff(z))))


def l2_norm_diff(f: Function, g: Function) -> float:
    z, a, b, lt, rt = _segment_values(f, g)
    if lt != 0.0 or rt != 0.0:
        raise InfiniteNormError("difference has nonzero tails; L2 norm is infinite")
    return float(np.sqrt(np.sum(_int_sq_linear(a, b, np.diff(z)))))

# }}}
