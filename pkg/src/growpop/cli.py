"""Command-line front end and file formats.

Subcommands: simulate (one trajectory to CSV), ensemble (aggregate statistics
to CSV), conditions (condition-sum table plus classification), envelope
(decayed-recursion bound table), check (built-in oracle suite). Configs are
JSON; command-line flags override file fields. Exit codes: 0 success, 1 usage
error, 2 runtime error.

CSV output is deterministic: UTF-8, LF newlines, floats in shortest
round-trip form (repr), and the seed surfaced in a leading "# seed=" comment,
so identical (config, seed) pairs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from .analysis import (
    EnvelopeSpec,
    ExplicitJumps,
    HarmonicScaled,
    asymptotic_injection_times,
    classify_schedule,
    condition_sum,
    envelope_bound,
)
from .dynamics import (
    SimConfig,
    geometric_record_grid,
    run_simulation,
    uniform_record_grid,
    _end_time,
)
from .kernels import kernel_from_config, rational_kernel, constant_kernel
from .montecarlo import EnsembleStats, run_ensemble
from .observables import MomentSeries, predict_jumps
from .schedules import (
    ExplicitSchedule,
    PowerExponentialSchedule,
    injection_time,
    schedule_from_config,
)
from .sources import gaussian_source, source_from_config

__all__ = ["ConfigError", "ExperimentConfig", "load_config",
           "emit_series_csv", "cmd_dispatch", "main"]

_WORKERS_ENV = "GROWPOP_WORKERS"


class ConfigError(ValueError):
    """A config file failed to parse or validate; message names the field."""


class _UsageError(Exception):
    pass


@dataclass(eq=False)
class ConditionsBlock:
    n_max: int = 100_000
    lambdas: tuple[float, ...] | None = None  # None: use the kernel bounds


@dataclass(eq=False)
class EnvelopeBlock:
    y0: float
    decay_rate: float | None  # None: use the kernel's lower bound
    jump: HarmonicScaled | ExplicitJumps
    n_values: tuple[int, ...] | None = None


@dataclass(eq=False)
class ExperimentConfig:
    sim: SimConfig
    runs: int = 100
    master_seed: int = 0
    output_path: str | None = None
    workers: int | None = None
    conditions: ConditionsBlock | None = None
    envelope: EnvelopeBlock | None = None


def _expect_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _get_num(obj: dict, key: str, path: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    val = obj[key]
    if not isinstance(val, (int, float)) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected a number, got {val!r}")
    return float(val)


def _get_int(obj: dict, key: str, path: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    val = obj[key]
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected an integer, got {val!r}")
    return val


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Every validation failure names the offending field (e.g. schedule.alpha);
    parse failures carry the line and column.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config parse error at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from None
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    top = _expect_object(raw, "config")

    dim = _get_int(top, "dim", "config", default=1)
    if dim is None or dim < 1:
        raise ConfigError(f"dim: must be an integer >= 1, got {dim!r}")

    if "kernel" not in top:
        raise ConfigError("missing required field kernel")
    if "schedule" not in top:
        raise ConfigError("missing required field schedule")
    if "source" not in top:
        raise ConfigError("missing required field source")
    try:
        kernel = kernel_from_config(top["kernel"], "kernel")
        schedule = schedule_from_config(top["schedule"], "schedule")
        source = source_from_config(top["source"], "source")
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if source.sigma2 == 0.0:
        warnings.warn("source.sigma2 = 0: incoming opinions are a point mass at the mean",
                      UserWarning, stacklevel=2)
    if source.dim != dim:
        raise ConfigError(f"source.mean: dimension {source.dim} does not match dim = {dim}")

    n0 = schedule.n0
    init = top.get("initial_opinions", "at_mean")
    if isinstance(init, str):
        if init != "at_mean":
            raise ConfigError(f"initial_opinions: unknown preset {init!r}")
        x0 = np.tile(source.mean_vector, (n0, 1))
    elif isinstance(init, list):
        try:
            x0 = np.asarray(init, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError("initial_opinions: expected numbers") from None
        if x0.ndim == 1:
            x0 = x0[:, None]
        if x0.ndim != 2 or x0.shape != (n0, dim):
            raise ConfigError(
                f"initial_opinions: shape {tuple(x0.shape)} does not match (n0, dim) = ({n0}, {dim})"
            )
    else:
        raise ConfigError(f"initial_opinions: expected a list or \"at_mean\", got {init!r}")

    step_max = _get_num(top, "step_max", "config", default=1e-2)
    horizon = _get_num(top, "horizon", "config")
    max_agents = _get_int(top, "max_agents", "config")
    if horizon is None and max_agents is None:
        raise ConfigError("horizon: one of horizon / max_agents must be set")

    try:
        sim = SimConfig(dim=dim, kernel=kernel, schedule=schedule, source=source,
                        initial_opinions=x0, step_max=step_max, horizon=horizon,
                        max_agents=max_agents, record_grid=(),
                        track_dissipation_integral=bool(top.get("track_dissipation_integral",
                                                                False)))
    except ValueError as err:
        raise ConfigError(str(err)) from None

    t_end = _end_time(sim)
    sim.record_grid = _parse_record_grid(top.get("record_grid"), t_end, step_max)

    runs = _get_int(top, "runs", "config", default=100)
    if runs < 2:
        raise ConfigError(f"runs: must be an integer >= 2, got {runs}")
    master_seed = _get_int(top, "master_seed", "config", default=0)
    if master_seed < 0:
        raise ConfigError(f"master_seed: must be >= 0, got {master_seed}")
    workers = _get_int(top, "workers", "config")
    if workers is not None and workers < 1:
        raise ConfigError(f"workers: must be an integer >= 1, got {workers}")
    output_path = top.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError(f"output_path: expected a string, got {output_path!r}")

    conditions = None
    if "conditions" in top:
        block = _expect_object(top["conditions"], "conditions")
        n_max = _get_int(block, "n_max", "conditions", default=100_000)
        if n_max < 10:
            raise ConfigError(f"conditions.n_max: must be >= 10, got {n_max}")
        lambdas = None
        if "lambdas" in block:
            vals = block["lambdas"]
            if not isinstance(vals, list) or not vals:
                raise ConfigError("conditions.lambdas: expected a nonempty list of numbers")
            lam_out = []
            for i, lam in enumerate(vals):
                if not isinstance(lam, (int, float)) or isinstance(lam, bool) or lam <= 0:
                    raise ConfigError(f"conditions.lambdas[{i}]: must be a number > 0, got {lam!r}")
                lam_out.append(float(lam))
            lambdas = tuple(lam_out)
        conditions = ConditionsBlock(n_max=n_max, lambdas=lambdas)

    envelope = None
    if "envelope" in top:
        block = _expect_object(top["envelope"], "envelope")
        y0 = _get_num(block, "y0", "envelope", required=True)
        decay = _get_num(block, "lambda", "envelope")
        if decay is not None and decay <= 0:
            raise ConfigError(f"envelope.lambda: must be > 0, got {decay}")
        jump_spec = _expect_object(block.get("jump", {"type": "harmonic", "c": 1.0}),
                                   "envelope.jump")
        jkind = jump_spec.get("type")
        if jkind == "harmonic":
            jump = HarmonicScaled(c=_get_num(jump_spec, "c", "envelope.jump", required=True))
        elif jkind == "explicit":
            vals = jump_spec.get("values")
            if not isinstance(vals, list) or not vals:
                raise ConfigError("envelope.jump.values: expected a nonempty list")
            jump = ExplicitJumps(values=tuple(float(v) for v in vals))
        else:
            raise ConfigError(f"envelope.jump.type: unknown jump bound type {jkind!r}")
        n_values = None
        if "n" in block:
            vals = block["n"]
            if not isinstance(vals, list) or not vals:
                raise ConfigError("envelope.n: expected a nonempty list of integers")
            for i, v in enumerate(vals):
                if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                    raise ConfigError(f"envelope.n[{i}]: must be an integer >= 1, got {v!r}")
            n_values = tuple(vals)
        envelope = EnvelopeBlock(y0=y0, decay_rate=decay, jump=jump, n_values=n_values)

    return ExperimentConfig(sim=sim, runs=runs, master_seed=master_seed,
                            output_path=output_path, workers=workers,
                            conditions=conditions, envelope=envelope)


def _parse_record_grid(spec, t_end: float, step_max: float) -> tuple[float, ...]:
    if spec is None:
        if t_end <= 0.0:
            return ()
        return geometric_record_grid(max(t_end / 100.0, step_max / 10.0), t_end, 64)
    grid_spec = _expect_object(spec, "record_grid")
    kind = grid_spec.get("type")
    if kind == "uniform":
        dt = _get_num(grid_spec, "dt", "record_grid", required=True)
        if dt <= 0:
            raise ConfigError(f"record_grid.dt: must be > 0, got {dt}")
        return uniform_record_grid(t_end, dt)
    if kind == "geometric":
        points = _get_int(grid_spec, "points", "record_grid", default=64)
        t_first = _get_num(grid_spec, "t_first", "record_grid",
                           default=max(t_end / 100.0, step_max / 10.0))
        if points < 2:
            raise ConfigError(f"record_grid.points: must be >= 2, got {points}")
        if not 0.0 < t_first <= t_end:
            raise ConfigError(f"record_grid.t_first: must lie in (0, horizon], got {t_first}")
        return geometric_record_grid(t_first, t_end, points)
    if kind == "explicit":
        times = grid_spec.get("times")
        if not isinstance(times, list):
            raise ConfigError("record_grid.times: expected a list of times")
        out = []
        for i, t in enumerate(times):
            if not isinstance(t, (int, float)) or isinstance(t, bool) or t < 0:
                raise ConfigError(f"record_grid.times[{i}]: must be a number >= 0, got {t!r}")
            out.append(float(t))
        return tuple(out)
    raise ConfigError(f"record_grid.type: unknown grid type {kind!r}")


# ---------------------------------------------------------------------------
# CSV output


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_series(series: MomentSeries, fh) -> None:
    d = series.dim
    cols = ["t", "n"] + [f"m1_{i}" for i in range(d)] + ["m2", "v", "w", "dissipation", "event"]
    fh.write(f"# seed={series.seed}\n")
    fh.write(",".join(cols) + "\n")
    for row in series.rows:
        rec = row.record
        vals = [_fmt(rec.t), str(rec.n)]
        vals += [_fmt(c) for c in rec.m1]
        vals += [_fmt(rec.m2), _fmt(rec.v), _fmt(rec.w), _fmt(rec.dissipation), row.event]
        fh.write(",".join(vals) + "\n")


def _write_ensemble(stats: EnsembleStats, fh) -> None:
    fh.write(f"# seed={stats.master_seed}\n")
    fh.write("t,mean_w,stderr_w,mean_v,stderr_v,mean_m1_dev,stderr_m1_dev\n")
    for i in range(stats.grid.size):
        vals = [stats.grid[i], stats.mean_w[i], stats.stderr_w[i], stats.mean_v[i],
                stats.stderr_v[i], stats.mean_m1_dev[i], stats.stderr_m1_dev[i]]
        fh.write(",".join(_fmt(v) for v in vals) + "\n")


def emit_series_csv(obj, path: str) -> None:
    """Write a MomentSeries or EnsembleStats to CSV (see module docstring)."""
    if isinstance(obj, MomentSeries):
        writer = _write_series
    elif isinstance(obj, EnsembleStats):
        writer = _write_ensemble
    else:
        raise ValueError(f"cannot emit {type(obj).__name__} as CSV")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer(obj, fh)


# ---------------------------------------------------------------------------
# Subcommands


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract wants 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="growpop",
                     description="Growing-population averaging dynamics toolkit")
    sub = parser.add_subparsers(dest="command")

    sim = sub.add_parser("simulate", help="run one trajectory and write its moment CSV")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default=None)

    ens = sub.add_parser("ensemble", help="run replicas and write aggregate statistics CSV")
    ens.add_argument("--config", required=True)
    ens.add_argument("--seed", type=int, default=None)
    ens.add_argument("--runs", type=int, default=None)
    ens.add_argument("--workers", type=int, default=None)
    ens.add_argument("--out", default=None)

    cond = sub.add_parser("conditions", help="condition-sum table and classification")
    cond.add_argument("--config", default=None)
    cond.add_argument("--alpha", type=float, default=None)
    cond.add_argument("--lambda", dest="lam", type=float, default=None)
    cond.add_argument("--n-max", dest="n_max", type=int, default=None)
    cond.add_argument("--out", default=None)

    env = sub.add_parser("envelope", help="decayed-recursion bound table")
    env.add_argument("--config", required=True)
    env.add_argument("--out", default=None)

    sub.add_parser("check", help="run the built-in oracle suite")
    return parser


def _resolve_workers(flag: int | None, from_file: int | None) -> int:
    if flag is not None:
        return flag
    if from_file is not None:
        return from_file
    env = os.environ.get(_WORKERS_ENV)
    if env:
        try:
            val = int(env)
        except ValueError:
            raise ConfigError(f"{_WORKERS_ENV}: expected an integer, got {env!r}") from None
        if val < 1:
            raise ConfigError(f"{_WORKERS_ENV}: must be >= 1, got {val}")
        return val
    return 1


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.master_seed
    series = run_simulation(cfg.sim, seed)
    out = args.out or cfg.output_path
    if out is None:
        _write_series(series, sys.stdout)
    else:
        emit_series_csv(series, out)
    return 0


def _cmd_ensemble(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.master_seed
    runs = args.runs if args.runs is not None else cfg.runs
    workers = _resolve_workers(args.workers, cfg.workers)
    stats = run_ensemble(cfg.sim, runs, seed, workers=workers)
    out = args.out or cfg.output_path
    if out is None:
        _write_ensemble(stats, sys.stdout)
    else:
        emit_series_csv(stats, out)
    return 0


def _cmd_conditions(args) -> int:
    alpha = args.alpha
    lambdas = (args.lam,) if args.lam is not None else None
    n_max = args.n_max
    if args.config is not None:
        cfg = load_config(args.config)
        if alpha is None:
            sched = cfg.sim.schedule
            if not isinstance(sched, PowerExponentialSchedule):
                raise ConfigError(
                    "schedule.type: conditions needs a power_exp schedule (or pass --alpha)"
                )
            alpha = sched.alpha
        block = cfg.conditions or ConditionsBlock()
        if lambdas is None:
            lambdas = block.lambdas or (cfg.sim.kernel.psi_star, cfg.sim.kernel.psi_max)
        if n_max is None:
            n_max = block.n_max
    if alpha is None or lambdas is None:
        raise _UsageError("conditions needs either --config or both --alpha and --lambda")
    if n_max is None:
        n_max = 100_000
    if n_max < 10:
        raise ConfigError(f"conditions.n_max: must be >= 10, got {n_max}")

    lambdas = tuple(dict.fromkeys(lambdas))  # drop duplicates, keep order
    times = asymptotic_injection_times(alpha)
    grid = np.unique(np.geomspace(10, n_max, 12).astype(int))
    rows = [(int(n), [condition_sum(lam, times, int(n)) for lam in lambdas]) for n in grid]
    verdict = classify_schedule(alpha, min(lambdas), max(lambdas),
                                n_max=max(int(n_max), 10_000))

    head = ["n"] + [f"S(lambda={lam:g})" for lam in lambdas]
    widths = [max(len(head[0]), len(str(rows[-1][0])))] + [max(18, len(h)) for h in head[1:]]
    print("  ".join(h.rjust(w) for h, w in zip(head, widths)))
    for n, vals in rows:
        cells = [str(n).rjust(widths[0])]
        cells += [("%.12g" % v).rjust(w) for v, w in zip(vals, widths[1:])]
        print("  ".join(cells))
    print(f"classification: {verdict.value}")

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(f"# classification={verdict.value}\n")
            fh.write(",".join(["n"] + [f"s_lambda_{i}" for i in range(len(lambdas))]) + "\n")
            for n, vals in rows:
                fh.write(",".join([str(n)] + [_fmt(v) for v in vals]) + "\n")
    return 0


def _cmd_envelope(args) -> int:
    cfg = load_config(args.config)
    if cfg.envelope is None:
        raise ConfigError("envelope: config has no envelope block")
    block = cfg.envelope
    lam = block.decay_rate if block.decay_rate is not None else cfg.sim.kernel.psi_star
    spec = EnvelopeSpec(decay_rate=lam, y0=block.y0, jump_bound=block.jump)
    schedule = cfg.sim.schedule
    ns = block.n_values
    if ns is None:
        ns = tuple(int(n) for n in np.unique(np.geomspace(10, 1000, 10).astype(int)))

    rows = []
    for n in ns:
        t_n = injection_time(schedule, int(n))
        rows.append((int(n), t_n, envelope_bound(spec, schedule, int(n))))
    print("%8s  %18s  %18s" % ("n", "t_n", "bound"))
    for n, t_n, b in rows:
        print("%8d  %18.12g  %18.12g" % (n, t_n, b))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("n,t_n,bound\n")
            for n, t_n, b in rows:
                fh.write(f"{n},{_fmt(t_n)},{_fmt(b)}\n")
    return 0


# ---------------------------------------------------------------------------
# Built-in oracle checks


def _check_constant_decay() -> str | None:
    kernel = constant_kernel(1.0)
    config = SimConfig(
        dim=1,
        kernel=kernel,
        schedule=ExplicitSchedule(n0=6, times=(50.0,)),
        source=gaussian_source(0.0, 1.0),
        initial_opinions=np.linspace(-1.0, 2.0, 6)[:, None],
        step_max=1e-3,
        horizon=1.0,
        record_grid=uniform_record_grid(1.0, 0.25),
    )
    series = run_simulation(config, seed=1)
    v0 = series.rows[0].record.v
    worst = 0.0
    for rec in series.records:
        expected = v0 * math.exp(-2.0 * rec.t)
        worst = max(worst, abs(rec.v - expected) / expected)
    if worst > 1e-6:
        return f"variance decay off by relative {worst:.3e} (tolerance 1e-6)"
    return None


def _check_jump_identities() -> str | None:
    config = SimConfig(
        dim=2,
        kernel=rational_kernel(0.5, 0.5),
        schedule=PowerExponentialSchedule(alpha=0.5, n0=2),
        source=gaussian_source((0.25, -0.5), 1.0),
        initial_opinions=np.array([[0.5, 0.0], [-0.5, 0.3]]),
        step_max=0.05,
        max_agents=42,
    )
    series = run_simulation(config, seed=7)
    worst = 0.0
    for pair in series.injection_pairs:
        pred = predict_jumps(pair.pre, pair.x_new, pair.k, series.n0)
        scale = max(1.0, abs(pair.pre.m2), float(pair.x_new @ pair.x_new))
        worst = max(
            worst,
            float(np.max(np.abs((pair.post.m1 - pair.pre.m1) - pred.dm1))) / scale,
            abs((pair.post.m2 - pair.pre.m2) - pred.dm2) / scale,
            abs((pair.post.v - pair.pre.v) - pred.dv) / scale,
        )
    if worst > 1e-12:
        return f"arrival jumps off by {worst:.3e} at scale (tolerance 1e-12)"
    return None


def _check_boundary_sum() -> str | None:
    s = condition_sum(1.0, asymptotic_injection_times(1.0), 2000)
    if abs(s - 1.0) > 1e-12:
        return f"boundary condition sum = {s!r}, expected 1.0 within 1e-12"
    return None


def _cmd_check(args) -> int:
    checks = [
        ("constant-kernel variance decay", _check_constant_decay),
        ("arrival jump identities", _check_jump_identities),
        ("boundary condition sum", _check_boundary_sum),
    ]
    failed = False
    for name, fn in checks:
        detail = fn()
        if detail is None:
            print(f"ok: {name}")
        else:
            failed = True
            print(f"FAIL: {name}: {detail}")
    return 2 if failed else 0


def cmd_dispatch(argv: list[str]) -> int:
    """Parse argv (no program name) and run the subcommand; returns exit code."""
    parser = _build_parser()
    handlers = {
        "simulate": _cmd_simulate,
        "ensemble": _cmd_ensemble,
        "conditions": _cmd_conditions,
        "envelope": _cmd_envelope,
        "check": _cmd_check,
    }
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a subcommand is required")
        return handlers[args.command](args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except Exception as err:  # runtime/config errors: contractually exit 2
        print(f"error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cmd_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
