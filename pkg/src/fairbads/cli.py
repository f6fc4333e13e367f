"""Command-line interface: ``run``, ``barycenter`` and ``check``.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime abort or failed checks,
3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .central import (BarycenterConfig, KdeConfig, barycenter_objective, barycenter_update,
                      initial_center)
from .config import ConfigError, load_config
from .data import DataError
from .particles import ParticleSet, format_particles, read_particles
from .runner import RunAbort, bound_summary, build_context, init_run, train_epoch
from .theory import run_bound_suite, run_padding_suite

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temp file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _record_line(rec: dict) -> str:
    return json.dumps(rec, sort_keys=False, separators=(",", ":"))


def cmd_run(args) -> int:
    overrides = {
        "divergence": args.divergence,
        "bias_amount": args.bias_amount,
        "particles": args.particles,
        "beta": args.beta,
        "epochs": args.epochs,
        "seed": args.seed,
        "lambda_fair": args.lambda_fair,
        "baseline": True if args.baseline else None,
    }
    if args.divergence is not None and args.divergence not in ("w2", "mmd", "fdiv"):
        raise ConfigError(f"--divergence: must be one of w2, mmd, fdiv, got {args.divergence!r}")
    cfg = load_config(args.config, **overrides)
    out = Path(args.out)
    try:
        (out / "particles_final").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    ctx = build_context(cfg)
    state = init_run(ctx)
    for _ in range(cfg.epochs):
        state = train_epoch(ctx, state)

    atomic_write(out / "metrics.jsonl", "".join(_record_line(r) + "\n" for r in state.history))
    for s, ps in enumerate(state.groups):
        atomic_write(out / "particles_final" / f"{s}.csv", format_particles(ps))
    atomic_write(out / "particles_final" / "central.csv", format_particles(state.central))
    atomic_write(out / "config_echo", cfg.dumps())
    report = {
        "final": state.history[-1],
        "initial": state.history[0],
        "bounds": bound_summary(ctx, state),
        "group_sizes": ctx.data.train.group_sizes,
        "config": {k: v for k, v in (line.split("=", 1) for line in cfg.dumps().splitlines())},
    }
    atomic_write(out / "report.json", json.dumps(report, indent=2) + "\n")
    print(f"wrote {out}: epochs={cfg.epochs} acc={state.history[-1]['acc']:.4f} "
          f"dp={state.history[-1]['dp']:.4f}")
    return EXIT_OK


def _pad_to(ps: ParticleSet, dim: int) -> ParticleSet:
    return ParticleSet(np.hstack([ps.z, np.zeros((ps.M, dim - ps.dim))]))


def cmd_barycenter(args) -> int:
    paths = [p for p in args.inputs.split(",") if p]
    if not paths:
        raise UsageError("--inputs: no files given")
    try:
        sets = [read_particles(p) for p in paths]
    except FileNotFoundError as exc:
        raise OSError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if len({s.M for s in sets}) != 1:
        raise ConfigError("--inputs: particle sets must all have the same number of particles")
    dim = max(s.dim for s in sets)
    sets = [_pad_to(s, dim) for s in sets]
    div = {"w2": "wasserstein", "mmd": "mmd", "fdiv": "fdiv"}.get(args.divergence)
    if div is None:
        raise ConfigError(f"--divergence: must be one of w2, mmd, fdiv, got {args.divergence!r}")
    if args.iters < 0:
        raise ConfigError("--iters: must be nonnegative")
    cfg = BarycenterConfig(div, inner_iters=args.iters, gd_step=args.step, f_choice=args.f)
    kde = KdeConfig(args.bandwidth, args.eps)
    central = barycenter_update(sets, initial_center(sets, cfg), cfg, kde)
    objective = barycenter_objective(sets, central, cfg, kde)
    atomic_write(args.out, format_particles(central))
    print(f"objective {objective:.12g}")
    return EXIT_OK


def cmd_check(args) -> int:
    if args.trials <= 0:
        raise ConfigError("--trials: no trials")
    fails = 0
    if args.suite in ("bounds", "all"):
        res = run_bound_suite(args.trials, args.seed)
        for name, (ok, bad) in res["cases"].items():
            print(f"bounds/{name}: PASS {ok} FAIL {bad}")
        print(f"bounds: PASS {res['pass']} FAIL {res['fail']}")
        fails += res["fail"]
    if args.suite in ("padding", "all"):
        res = run_padding_suite(args.trials, args.seed)
        print(f"padding: PASS {res['pass']} FAIL {res['fail']}")
        fails += res["fail"]
    return EXIT_OK if fails == 0 else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fairbads", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="train Fair-BADS and write metrics")
    r.add_argument("--config", default="")
    r.add_argument("--out", required=True)
    r.add_argument("--divergence")
    r.add_argument("--bias-amount", type=float)
    r.add_argument("--particles", type=int)
    r.add_argument("--beta", type=float)
    r.add_argument("--epochs", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--lambda-fair", type=float)
    r.add_argument("--baseline", action="store_true", help="disable alignment (lambda_fair = 0)")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("barycenter", help="central distribution of particle CSV files")
    b.add_argument("--inputs", required=True, help="comma-separated CSV paths")
    b.add_argument("--divergence", default="w2")
    b.add_argument("--out", required=True)
    b.add_argument("--iters", type=int, default=10)
    b.add_argument("--step", type=float, default=0.1)
    b.add_argument("--bandwidth", type=float, default=0.1)
    b.add_argument("--eps", type=float, default=1e-3)
    b.add_argument("--f", default="js", choices=["kl", "reverse_kl", "js"])
    b.set_defaults(func=cmd_barycenter)

    c = sub.add_parser("check", help="randomized theorem and padding checks")
    c.add_argument("--suite", choices=["bounds", "padding", "all"], default="all")
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunAbort, FloatingPointError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
