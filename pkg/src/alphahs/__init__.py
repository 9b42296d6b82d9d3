"""Alpha-dissipative Hunter-Saxton solutions on piecewise-linear data."""

from __future__ import annotations

from alphahs.eulerian import AlphaProfile, EulerianState, project
from alphahs.evolution import EvolutionConfig, Solution, solve
from alphahs.lagrangian import LagrangianGrid, to_eulerian, to_lagrangian
from alphahs.piecewise import MonotoneStep, PiecewiseLinear

__all__ = [
    "AlphaProfile",
    "EulerianState",
    "EvolutionConfig",
    "LagrangianGrid",
    "MonotoneStep",
    "PiecewiseLinear",
    "Solution",
    "project",
    "solve",
    "to_eulerian",
    "to_lagrangian",
]
