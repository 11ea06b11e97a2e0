"""Command line: ``gmcpinn run|compare|estimate``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .runner import ENV_SEED, POLYNOMIALS, ALIASES, ConfigError, EstimateSpec, compare, load_config, run
from .solver import TrainingAborted

EXIT_CONFIG = 2
EXIT_ABORTED = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gmcpinn",
        description="Sampling-based fractional derivatives and PINN training.",
        epilog=f"Environment: {ENV_SEED} overrides the seed, GMCPINN_WORKERS the worker count.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config", type=Path)
    r.add_argument("-o", "--output", type=Path, help="run directory (default: [run] output)")
    r.add_argument("-q", "--quiet", action="store_true", help="no progress lines")

    c = sub.add_parser("compare", help="tabulate run directories, sorted by N")
    c.add_argument("dirs", nargs="+", type=Path)
    c.add_argument("-o", "--output", type=Path, help="CSV path (default: stdout)")

    e = sub.add_parser("estimate", help="estimator sweep on a 99-point grid of (0, 1)")
    e.add_argument("function", help=f"one of {sorted(POLYNOMIALS)} (aliases {sorted(ALIASES)})")
    e.add_argument("alpha", type=float)
    e.add_argument("side", choices=["left", "right"])
    e.add_argument("N", type=int)
    e.add_argument("K", type=int)
    e.add_argument("stream", choices=["pseudo", "sobol", "halton"])
    e.add_argument("--seeds", type=int, default=10)
    e.add_argument("--grid", type=int, default=99)
    e.add_argument("-o", "--output", type=Path, help="also write a run directory here")
    return p


def _progress(it, br, val):
    msg = f"iter {it + 1:>7d}  total {br.total:.4e}  mse_E {br.mse_E:.3e}  mse_B {br.mse_B:.3e}"
    if val == val:
        msg += f"  L2 {val:.4f}"
    print(msg, file=sys.stderr, flush=True)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    summary = run(cfg, args.output, progress=None if args.quiet else _progress)
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return 0


def _cmd_compare(args) -> int:
    compare(args.dirs, args.output if args.output is not None else sys.stdout)
    return 0


def _cmd_estimate(args) -> int:
    from .runner import ExperimentConfig, run_estimate, validate
    spec = EstimateSpec(ALIASES.get(args.function, args.function), args.alpha, args.side,
                        args.N, args.K, args.stream, args.seeds, args.grid)
    seed = int(os.environ.get(ENV_SEED, 0))
    cfg = ExperimentConfig(mode="estimate", seed=seed, estimate=spec)
    validate(cfg)
    if args.output is not None:
        summary = run(cfg, args.output)
    else:
        _, _, _, errs = run_estimate(spec, seed)
        summary = {"function": spec.function, "alpha": spec.alpha, "side": spec.side,
                   "N": spec.N, "K": spec.K, "stream": spec.stream,
                   "l2_relative": float(np.median(errs)), "l2_per_seed": errs.tolist()}
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": _cmd_run, "compare": _cmd_compare, "estimate": _cmd_estimate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"gmcpinn: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingAborted as exc:
        where = f" (checkpoint: {exc.checkpoint})" if exc.checkpoint else ""
        print(f"gmcpinn: training aborted: {exc}{where}", file=sys.stderr)
        return EXIT_ABORTED
    except FileNotFoundError as exc:
        print(f"gmcpinn: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
