"""Experiment harness: projection, single runs, dx ladders and timings.

Subcommands ``project``, ``solve``, ``ladder`` and ``bench`` share one
configuration (:class:`ExperimentConfig`), read from a JSON file with
``--config`` and overridden by flags.  Exit codes: 0 on success, 2 for
configuration errors, 3 when a run violates a structural invariant.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from alphahs.eulerian import AlphaProfile, EulerianState, ProjectionError, project
from alphahs.evolution import ConfigurationError, EvolutionConfig, Solution, solve
from alphahs.lagrangian import to_eulerian
from alphahs.oracle import (
    cusp_alpha,
    cusp_data,
    fine_reference,
    multipeakon,
    multipeakon_alpha,
    multipeakon_state,
)
from alphahs.piecewise import MonotoneStep, PiecewiseLinear, sup_norm_diff

__all__ = [
    "CONFIG_VERSION",
    "CSV_HEADER",
    "ConfigError",
    "Dataset",
    "ErrorReport",
    "ErrorRow",
    "ExperimentConfig",
    "emit_csv",
    "emit_energy_csv",
    "invariant_violations",
    "load_config",
    "main",
    "run",
]

CONFIG_VERSION = 1
CSV_HEADER = ("dx", "sup_u_err", "F_inf_err", "N", "iterations",
              "time_minimal_s", "time_full_s")

EXIT_CONFIG = 2
EXIT_INVARIANT = 3


class ConfigError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


# {{{ datasets

@dataclass(frozen=True)
class Dataset:
    """Initial data together with the way it is put on a grid."""

    name: str
    alpha: AlphaProfile
    projected: Callable[[float], EulerianState]
    exact: bool = False


def builtin_dataset(name: str, beta: float = 0.95) -> Dataset:
    if name == "multipeakon":
        state = multipeakon_state()
        return Dataset(name, multipeakon_alpha(), lambda dx: project(state, dx),
                       exact=True)
    if name == "cusp":
        return Dataset(name, cusp_alpha(beta), cusp_data)
    raise ConfigError(f"unknown builtin dataset {name!r}")


def user_dataset(spec: dict) -> Dataset:
    allowed = {"u_nodes", "u_values", "alpha_nodes", "alpha_values", "point_masses"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown data keys: {sorted(unknown)}")
    try:
        u = PiecewiseLinear(spec["u_nodes"], spec["u_values"])
        alpha = AlphaProfile.from_nodes(spec["alpha_nodes"], spec["alpha_values"])
    except KeyError as exc:
        raise ConfigError(f"data is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    state = EulerianState.from_profile(u)
    masses = spec.get("point_masses") or []
    if masses:
        # point masses sit in both mu and nu, so initial data keeps F = G
        xs = np.array([float(m[0]) for m in masses])
        ms = np.array([float(m[1]) for m in masses])
        if np.any(ms < 0.0):
            raise ConfigError("point masses must be nonnegative")
        order = np.argsort(xs)
        xs, ms = xs[order], ms[order]
        right = np.cumsum(ms)
        Fs = MonotoneStep(xs, right - ms, right)
        state = EulerianState(state.u, state.F_ac, Fs, state.F_ac + Fs)
    return Dataset("user", alpha, lambda dx: project(state, dx))

# }}}


# {{{ configuration

@dataclass(frozen=True)
class ExperimentConfig:
    data: object = "multipeakon"
    dx_list: tuple = (0.1, 0.01, 0.001)
    T: float = 3.0
    query_times: tuple = ()
    minimal_steps: bool = True
    out: str = "out"
    reference: str = "exact"
    beta: float = 0.95
    deterministic: bool = False

    def __post_init__(self) -> None:
        if not self.dx_list or any(not (float(d) > 0.0) for d in self.dx_list):
            raise ConfigError("dx_list must contain positive values")
        if len(set(self.dx_list)) != len(self.dx_list):
            raise ConfigError("dx_list entries must be distinct")
        if not float(self.T) > 0.0:
            raise ConfigError("T must be positive")
        if any(not (0.0 <= float(t) <= float(self.T)) for t in self.query_times):
            raise ConfigError("query times must lie in [0, T]")
        if not (0.0 <= self.beta < 1.0):
            raise ConfigError("beta must lie in [0, 1)")
        self.reference_mode()
        if not isinstance(self.data, (str, dict)):
            raise ConfigError("data must be a builtin name or a mapping")

    def reference_mode(self) -> tuple[str, float | None]:
        ref = self.reference
        if ref in ("exact", "none"):
            return ref, None
        if ref.startswith("fine:"):
            try:
                dx_ref = float(ref[5:])
            except ValueError:
                raise ConfigError(f"bad reference spec {ref!r}") from None
            if not dx_ref > 0.0:
                raise ConfigError("reference dx must be positive")
            return "fine", dx_ref
        raise ConfigError(f"reference must be exact, fine:<dx> or none, not {ref!r}")

    def dataset(self) -> Dataset:
        if isinstance(self.data, str):
            return builtin_dataset(self.data, self.beta)
        return user_dataset(self.data)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - names - {"version"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = {k: v for k, v in raw.items() if k != "version"}
    for key in ("dx_list", "query_times"):
        if key in kw:
            kw[key] = tuple(float(v) for v in kw[key])
    return ExperimentConfig(**kw)

# }}}


# {{{ reports

@dataclass(frozen=True)
class ErrorRow:
    dx: float
    sup_u_err: float
    F_inf_err: float
    N: int
    iterations: int
    time_minimal_s: float
    time_full_s: float


@dataclass
class ErrorReport:
    rows: list = field(default_factory=list)
    energy: dict = field(default_factory=dict)  # dx -> (t, F_inf)

    def add(self, row: ErrorRow) -> None:
        if any(r.dx == row.dx for r in self.rows):
            raise ValueError(f"duplicate row for dx = {row.dx}")
        self.rows.append(row)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def emit_csv(report: ErrorReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    return path


def emit_energy_csv(report: ErrorReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("dx", "t", "F_inf"))
        for dx, (ts, es) in report.energy.items():
            for t, e in zip(ts, es):
                w.writerow((_fmt(dx), _fmt(t), _fmt(e)))
    return path


def dump_state(state: EulerianState, path: str | Path) -> Path:
    """Node values of a piecewise-linear state, one row per node."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x = state.all_nodes()
    Fl, Fr = state.F.limits(x)
    Gl, Gr = state.G.limits(x)
    u = np.atleast_1d(state.u(x))
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x", "u", "F_left", "F_right", "G_left", "G_right"))
        for row in zip(x, u, Fl, Fr, Gl, Gr):
            w.writerow([_fmt(v) for v in row])
    return path

# }}}


# {{{ runs

def invariant_violations(sol: Solution, rtol: float = 1e-9) -> list[str]:
    out = []
    scale = max(1.0, sol.initial.H_inf)
    for rep in sol.invariants:
        if rep.max_rel_invariant_error > rtol:
            out.append(f"t={rep.t:.6g}: y_xi V_xi != U_xi^2 "
                       f"(rel {rep.max_rel_invariant_error:.3e})")
        if rep.min_dV < -1e-12 * scale or rep.max_dV_minus_dH > 1e-12 * scale:
            out.append(f"t={rep.t:.6g}: 0 <= V_xi <= H_xi fails")
    _, energy = sol.energy_trace()
    if np.any(np.diff(energy) > 0.0):
        out.append("total energy increases")
    return out


def _timed_solve(data: EulerianState, alpha: AlphaProfile, dx: float, T: float,
                 minimal: bool) -> tuple[Solution, float]:
    cfg = EvolutionConfig(minimal_steps=minimal)
    t0 = time.perf_counter()
    sol, _ = solve(data, alpha, dx, T, cfg, project_data=False)
    return sol, time.perf_counter() - t0


def _query_times(cfg: ExperimentConfig, sol: Solution) -> list[float]:
    ts = set(float(t) for t in sol.partition.taus) | set(cfg.query_times)
    return sorted(t for t in ts if 0.0 <= t <= cfg.T)


def run(cfg: ExperimentConfig, *, both: bool = False, write: bool = True,
        log=None) -> ErrorReport:
    """Solve at every dx of the ladder and compare with the reference.

    With *both* every dx is solved with and without minimal steps and both
    wall times are recorded; otherwise only the configured mode is timed.
    """
    ds = cfg.dataset()
    mode, dx_ref = cfg.reference_mode()
    if mode == "exact" and not ds.exact:
        raise ConfigError(f"no exact solution is available for {ds.name!r}")
    report = ErrorReport()
    out = Path(cfg.out)
    ref_states = None
    if mode == "fine":
        if any(dx < dx_ref for dx in cfg.dx_list):
            raise ConfigError("reference dx must not exceed the compared dx")
        times = sorted(set(cfg.query_times) | {0.0, cfg.T})
        ref_states = fine_reference(ds.projected(dx_ref), ds.alpha, dx_ref, cfg.T,
                                    times, projected=True)
    exact = multipeakon() if mode == "exact" else None

    for dx in cfg.dx_list:
        data = ds.projected(dx)
        sol, t_main = _timed_solve(data, ds.alpha, dx, cfg.T, cfg.minimal_steps)
        bad = invariant_violations(sol)
        if bad:
            raise InvariantViolation(f"dx={dx}: " + "; ".join(bad))
        t_min = t_main if cfg.minimal_steps else math.nan
        t_full = math.nan if cfg.minimal_steps else t_main
        if both:
            _, t_other = _timed_solve(data, ds.alpha, dx, cfg.T, not cfg.minimal_steps)
            if cfg.minimal_steps:
                t_full = t_other
            else:
                t_min = t_other
        if cfg.deterministic:
            t_min = 0.0 if not math.isnan(t_min) else t_min
            t_full = 0.0 if not math.isnan(t_full) else t_full

        ts, energy = sol.energy_trace()
        report.energy[dx] = (ts, energy)
        F_T = float(energy[-1])
        sup_err, F_err = math.nan, math.nan
        if exact is not None:
            qt = _query_times(cfg, sol)
            sup_err = max(sup_norm_diff(exact.eulerian(t).u, sol.eulerian_at(t).u)
                          for t in qt)
            F_err = abs(F_T - float(exact.energy(cfg.T)))
        elif ref_states is not None:
            sup_err = max(sup_norm_diff(ref_states[t].u, sol.eulerian_at(t).u)
                          for t in ref_states)
            F_err = abs(F_T - ref_states[cfg.T].F_inf)
        row = ErrorRow(dx, sup_err, F_err, sol.partition.N, sol.total_iterations,
                       t_min, t_full)
        report.add(row)
        if log:
            log(f"dx={dx:g}: N={row.N} iterations={row.iterations} "
                f"F_inf(T)={F_T:.12g} sup_u_err={sup_err:.3e} F_inf_err={F_err:.3e}")
    if write:
        emit_csv(report, out / "errors.csv")
        emit_energy_csv(report, out / "energy.csv")
        summary = {"data": cfg.data if isinstance(cfg.data, str) else "user",
                   "T": cfg.T, "reference": cfg.reference,
                   "minimal_steps": cfg.minimal_steps,
                   "rows": [r.__dict__ for r in report.rows]}
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, default=float) + "\n", encoding="utf-8")
    return report

# }}}


# {{{ command line

def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--data", help="builtin dataset: multipeakon or cusp")
    common.add_argument("--beta", type=float, help="cusp removal fraction at x <= -1")
    common.add_argument("--dx", type=float, help="single grid spacing")
    common.add_argument("--dx-list", type=_floats, help="comma-separated spacings")
    common.add_argument("--T", type=float, help="final time")
    common.add_argument("--query-times", type=_floats, help="extra output times")
    common.add_argument("--minimal", dest="minimal_steps", action="store_true",
                        default=None, help="group breaking times (default)")
    common.add_argument("--no-minimal", dest="minimal_steps", action="store_false",
                        help="stop at every breaking time")
    common.add_argument("--reference", help="exact, fine:<dx> or none")
    common.add_argument("--out", help="output directory")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="write zero wall times so reruns are byte-identical")

    p = argparse.ArgumentParser(prog="alphahs", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("project", parents=[common], help="write projected initial data")
    sub.add_parser("solve", parents=[common], help="single run with node dumps")
    sub.add_parser("ladder", parents=[common], help="error report across dx_list")
    sub.add_parser("bench", parents=[common], help="timings with and without minimal steps")
    return p


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    upd = {}
    if args.data is not None:
        upd["data"] = args.data
    if args.beta is not None:
        upd["beta"] = args.beta
    if args.dx_list is not None:
        upd["dx_list"] = args.dx_list
    if args.dx is not None:
        upd["dx_list"] = (args.dx,)
    if args.T is not None:
        upd["T"] = args.T
    if args.query_times is not None:
        upd["query_times"] = args.query_times
    if args.minimal_steps is not None:
        upd["minimal_steps"] = args.minimal_steps
    if args.reference is not None:
        upd["reference"] = args.reference
    if args.out is not None:
        upd["out"] = args.out
    if args.deterministic is not None:
        upd["deterministic"] = args.deterministic
    if args.command in ("project", "solve") and "reference" not in upd:
        upd["reference"] = "none"
    return replace(cfg, **upd)


def _cmd_project(cfg: ExperimentConfig) -> None:
    ds = cfg.dataset()
    for dx in cfg.dx_list:
        path = dump_state(ds.projected(dx), Path(cfg.out) / f"projected_dx{dx:g}.csv")
        print(f"wrote {path}")


def _cmd_solve(cfg: ExperimentConfig) -> None:
    ds = cfg.dataset()
    out = Path(cfg.out)
    report = ErrorReport()
    for dx in cfg.dx_list:
        data = ds.projected(dx)
        sol, elapsed = _timed_solve(data, ds.alpha, dx, cfg.T, cfg.minimal_steps)
        bad = invariant_violations(sol)
        if bad:
            raise InvariantViolation(f"dx={dx}: " + "; ".join(bad))
        times = sorted(set(cfg.query_times) | {0.0, cfg.T})
        for t in times:
            dump_state(sol.eulerian_at(t), out / f"nodes_dx{dx:g}_t{t:.6g}.csv")
        report.energy[dx] = sol.energy_trace()
        print(f"dx={dx:g}: dt={sol.dt:.6g} N={sol.partition.N} "
              f"iterations={sol.total_iterations} F_inf(T)={report.energy[dx][1][-1]:.12g} "
              f"time={elapsed:.3f}s")
    emit_energy_csv(report, out / "energy.csv")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "project":
            _cmd_project(cfg)
        elif args.command == "solve":
            _cmd_solve(cfg)
        elif args.command == "ladder":
            rep = run(cfg, log=print)
            print(f"wrote {Path(cfg.out) / 'errors.csv'} ({len(rep.rows)} rows)")
        else:
            cfg = replace(cfg, reference="none") if args.reference is None else cfg
            rep = run(cfg, both=True, write=True)
            for r in rep.rows:
                ratio = r.time_full_s / r.time_minimal_s if r.time_minimal_s > 0 else math.nan
                print(f"dx={r.dx:g}: minimal {r.time_minimal_s:.4f}s, "
                      f"every breaking time {r.time_full_s:.4f}s, ratio {ratio:.1f}")
    except (ConfigError, ConfigurationError, ProjectionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return 0


if __name__ == "__main__":
    sys.exit(main())

# }}}
