"""Config-driven experiments: training runs, estimator sweeps, run comparison.

A config is an INI file. Training runs use the sections ``[run]``,
``[problem]``, ``[domain]``, ``[sampling]``, ``[network]``, ``[optimizer]``
and ``[loss]``; estimator sweeps use ``[run]`` and ``[estimate]``. Every key
has a default, so a config only lists what it changes. The environment
variables ``GMCPINN_SEED`` and ``GMCPINN_WORKERS`` override ``[run] seed`` and
``[run] workers``.

A run directory holds::

    config.ini            resolved config (re-loadable with load_config)
    history.csv           per-iteration losses, timing, validation error
    error_report.csv      final ErrorReport
    validation_grid.csv   coordinates, exact, predicted, pointwise error
    nodes.csv             per-term node diagnostics of the last draw
    network.csv           trained parameters (see autodiff.save_checkpoint)
    summary.json          machine-readable summary
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gamma, rgamma

from .autodiff import save_checkpoint
from .estimators import EstimatorConfig, Extension, estimate_grid
from .geometry import DomainError, make_domain
from .problems import error_report, fuzzy_boundary_setup, get_problem, l2_relative_error
from .solver import (
    DataSampler,
    LossWeights,
    TrainConfig,
    build_terms,
    train,
)
from .streams import StreamKind, make_stream

__all__ = [
    "ConfigError",
    "EstimateSpec",
    "ExperimentConfig",
    "compare",
    "exact_derivative",
    "load_config",
    "read_csv",
    "run",
    "run_estimate",
    "save_config",
]

ENV_SEED = "GMCPINN_SEED"
ENV_WORKERS = "GMCPINN_WORKERS"

# wall-clock fields differ between otherwise identical runs
WALL_FIELDS = ("wall_seconds", "median_ms_per_10_iter")

POLYNOMIALS = {
    "x^2": (0.0, 0.0, 1.0),
    "(1-x)^2": (1.0, -2.0, 1.0),
    "x^3": (0.0, 0.0, 0.0, 1.0),
    "(1-x)^3": (1.0, -3.0, 3.0, -1.0),
}
ALIASES = {"x2": "x^2", "1mx2": "(1-x)^2", "x3": "x^3", "1mx3": "(1-x)^3"}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass
class EstimateSpec:
    function: str = "(1-x)^2"
    alpha: float = 1.2
    side: str = "right"
    N: int = 100
    K: int = 100
    stream: str = "pseudo"
    seeds: int = 10
    grid: int = 99
    halton_base: int = 2


@dataclass
class ExperimentConfig:
    """Everything a run needs, flattened from the INI sections."""

    mode: str = "train"
    output: str = "runs/default"
    seed: int = 0
    workers: int = 1
    problem: dict = field(default_factory=lambda: {"name": "poisson2d_frac"})
    domain: dict = field(default_factory=dict)
    train: TrainConfig = field(default_factory=TrainConfig)
    estimate: EstimateSpec = field(default_factory=EstimateSpec)
    raw: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------- parsing

_PROBLEM_FLOATS = ("alpha", "beta", "beta1", "beta2", "k1", "k2", "k_alpha", "k_beta", "T",
                   "r", "true_r", "measured_r")


def _num(section: str, key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {value!r} is not a valid {kind.__name__}") from None


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_section(parser, name: str, spec: dict) -> dict:
    """Read typed keys from one section; unknown keys are errors."""
    if not parser.has_section(name):
        return {}
    out = {}
    for key, value in parser.items(name):
        if key not in spec:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        out[key] = _num(name, key, value, spec[key])
    return out


def _optional_int(v: str):
    return None if v.strip().lower() in ("", "none") else int(v)


SECTIONS = {
    "run": {"mode": str, "output": str, "seed": int, "workers": int},
    "problem": {"name": str, **{k.lower(): float for k in _PROBLEM_FLOATS}},
    "domain": {"name": str, "radius": float, "center": _floats, "coeffs": _floats},
    "sampling": {"n": int, "k": int, "n_t": _optional_int, "k_t": _optional_int,
                 "stream": str, "stream_seed": int, "halton_base": int, "extension": str,
                 "node_every": int, "points_every": int, "n_equ": int, "n_bnd": int,
                 "n_ini": int, "margin": float},
    "network": {"hidden_layers": int, "width": int},
    "optimizer": {"iterations": int, "lbfgs_fraction": float, "lbfgs_iterations": int,
                  "lr": float, "validate_every": int, "log_every": int},
    "loss": {"w_e": float, "w_i": float, "w_b": float},
    "estimate": {"function": str, "alpha": float, "side": str, "n": int, "k": int,
                 "stream": str, "seeds": int, "grid": int, "halton_base": int},
}


def _build(raw: dict, env=None) -> ExperimentConfig:
    env = os.environ if env is None else env
    run_s = raw.get("run", {})
    cfg = ExperimentConfig(raw=raw)
    cfg.mode = run_s.get("mode", "train")
    if cfg.mode not in ("train", "estimate"):
        raise ConfigError(f"[run] mode must be 'train' or 'estimate', got {cfg.mode!r}")
    cfg.output = run_s.get("output", cfg.output)
    cfg.seed = int(env.get(ENV_SEED, run_s.get("seed", 0)))
    cfg.workers = int(env.get(ENV_WORKERS, run_s.get("workers", 1)))
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")

    prob = dict(raw.get("problem", {}))
    # section keys are lower-cased by configparser; T is the one upper-case name
    if "t" in prob:
        prob["T"] = prob.pop("t")
    cfg.problem = {"name": "poisson2d_frac", **prob}
    cfg.domain = dict(raw.get("domain", {}))

    s, n, o, loss = (raw.get(k, {}) for k in ("sampling", "network", "optimizer", "loss"))
    budget = o.get("iterations", 50_000)
    if "lbfgs_iterations" in o:
        lb = o["lbfgs_iterations"]
    else:
        frac = o.get("lbfgs_fraction", 0.2)
        if not 0 <= frac <= 1:
            raise ConfigError("lbfgs_fraction must lie in [0, 1]")
        lb = int(round(frac * budget))
    if lb < 0 or lb > budget:
        raise ConfigError("lbfgs_iterations must lie in [0, iterations]")
    try:
        weights = LossWeights(loss.get("w_e", 1.0), loss.get("w_i", 1.0), loss.get("w_b", 1.0))
        ext = s.get("extension", "zero")
        Extension(ext)
        StreamKind(s.get("stream", "halton"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.train = TrainConfig(
        iterations=budget - lb, lbfgs_iterations=lb, lr=o.get("lr", 1e-3),
        hidden_layers=n.get("hidden_layers", 5), width=n.get("width", 20),
        N=s.get("n", 32), K=s.get("k", 32), N_t=s.get("n_t"), K_t=s.get("k_t"),
        extension=ext, stream=s.get("stream", "halton"),
        stream_seed=s.get("stream_seed", cfg.seed), halton_base=s.get("halton_base", 2),
        node_every=s.get("node_every", 1), points_every=s.get("points_every", 0),
        n_equ=s.get("n_equ", 1000), n_bnd=s.get("n_bnd", 400), n_ini=s.get("n_ini", 400),
        margin=s.get("margin", 0.0), weights=weights, seed=cfg.seed,
        validate_every=o.get("validate_every", 500),
        workers=cfg.workers, log_every=o.get("log_every", 0))
    e = raw.get("estimate", {})
    cfg.estimate = EstimateSpec(
        function=ALIASES.get(e.get("function", "(1-x)^2"), e.get("function", "(1-x)^2")),
        alpha=e.get("alpha", 1.2), side=e.get("side", "right"), N=e.get("n", 100),
        K=e.get("k", 100), stream=e.get("stream", "pseudo"), seeds=e.get("seeds", 10),
        grid=e.get("grid", 99), halton_base=e.get("halton_base", 2))
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    """Check orders, domains and sizes before anything runs."""
    if cfg.mode == "estimate":
        e = cfg.estimate
        if e.function not in POLYNOMIALS:
            raise ConfigError(f"unknown function {e.function!r}; choose from {sorted(POLYNOMIALS)}")
        if e.side not in ("left", "right"):
            raise ConfigError("side must be 'left' or 'right'")
        if e.seeds < 1 or e.grid < 1:
            raise ConfigError("seeds and grid must be >= 1")
        try:
            EstimatorConfig(e.N, e.K, e.alpha)
            StreamKind(e.stream)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return
    t = cfg.train
    if min(t.N, t.K, t.n_equ, t.n_bnd, t.width, t.hidden_layers) < 1:
        raise ConfigError("N, K, point counts and network sizes must be >= 1")
    if not t.margin >= 0:
        raise ConfigError("margin must be >= 0")
    try:
        problem, _, _ = build_problem(cfg)
        build_terms(problem, t.N, t.K, N_t=t.N_t, K_t=t.K_t, extension=Extension(t.extension))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, env=None) -> ExperimentConfig:
    """Parse an INI config file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    raw = {name: _parse_section(parser, name, spec) for name, spec in SECTIONS.items()}
    return _build(raw, env)


def save_config(cfg: ExperimentConfig, path) -> None:
    """Write the resolved config so that ``load_config`` reproduces it."""
    t = cfg.train
    p = configparser.ConfigParser()
    p["run"] = {"mode": cfg.mode, "output": cfg.output, "seed": str(cfg.seed),
                "workers": str(cfg.workers)}
    if cfg.mode == "estimate":
        e = cfg.estimate
        p["estimate"] = {"function": e.function, "alpha": repr(e.alpha), "side": e.side,
                         "n": str(e.N), "k": str(e.K), "stream": e.stream,
                         "seeds": str(e.seeds), "grid": str(e.grid),
                         "halton_base": str(e.halton_base)}
    else:
        p["problem"] = {k: (v if isinstance(v, str) else repr(float(v)))
                        for k, v in cfg.problem.items()}
        if cfg.domain:
            p["domain"] = {k: (" ".join(map(repr, v)) if isinstance(v, tuple) else str(v))
                           for k, v in cfg.domain.items()}
        none = lambda v: "none" if v is None else str(v)  # noqa: E731
        p["sampling"] = {"n": str(t.N), "k": str(t.K), "n_t": none(t.N_t), "k_t": none(t.K_t),
                         "stream": t.stream, "stream_seed": str(t.stream_seed),
                         "halton_base": str(t.halton_base), "extension": t.extension,
                         "node_every": str(t.node_every), "points_every": str(t.points_every),
                         "n_equ": str(t.n_equ), "n_bnd": str(t.n_bnd), "n_ini": str(t.n_ini),
                         "margin": repr(t.margin)}
        p["network"] = {"hidden_layers": str(t.hidden_layers), "width": str(t.width)}
        p["optimizer"] = {"iterations": str(t.iterations + t.lbfgs_iterations),
                          "lbfgs_iterations": str(t.lbfgs_iterations), "lr": repr(t.lr),
                          "validate_every": str(t.validate_every), "log_every": str(t.log_every)}
        p["loss"] = {"w_e": repr(t.weights.w_E), "w_i": repr(t.weights.w_I),
                     "w_b": repr(t.weights.w_B)}
    with open(path, "w") as fh:
        p.write(fh)


# ---------------------------------------------------------------- problems

def build_problem(cfg: ExperimentConfig):
    """Problem, data sampler and validation pair for a training config."""
    params = dict(cfg.problem)
    name = params.pop("name")
    t = cfg.train
    if name == "fuzzy_boundary":
        setup = fuzzy_boundary_setup(
            params.pop("true_r", 0.5), params.pop("measured_r", 0.6),
            n_equ=t.n_equ, n_bound=t.n_bnd, n_ini=t.n_ini,
            alpha=params.pop("alpha", 0.9), beta=params.pop("beta", 0.95),
            T=params.pop("T", 1.0), rng=cfg.seed)
        sampler = DataSampler(setup.problem, t.n_equ, t.n_bnd, t.n_ini,
                              interior=setup.true_domain, boundary=setup.measured_domain,
                              margin=t.margin)
        return setup.problem, sampler, (setup.x_val, setup.t_val)
    if cfg.domain:
        d = dict(cfg.domain)
        try:
            params["domain"] = make_domain(d.pop("name", "disk"), **d)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
    problem = get_problem(name, **params)
    return problem, DataSampler(problem, t.n_equ, t.n_bnd, t.n_ini, margin=t.margin), None


# ---------------------------------------------------------------- estimator mode

def exact_derivative(function: str, alpha: float, side: str, xs, bound: float) -> np.ndarray:
    """Riemann-Liouville derivative of a listed polynomial, anchored at ``bound``.

    The polynomial is re-expanded in powers of the distance to the anchor and
    each power is differentiated with ``Gamma(p+1)/Gamma(p+1-alpha) d^(p-alpha)``;
    constant and linear terms are kept, as the Grunwald sums converge to
    their (singular) Riemann-Liouville derivatives too.
    """
    poly = np.polynomial.Polynomial(POLYNOMIALS[function])
    sign = 1.0 if side == "left" else -1.0
    # x = bound + sign * d
    shifted = poly(np.polynomial.Polynomial([bound, sign])).coef
    d = sign * (np.asarray(xs, dtype=float) - bound)
    out = np.zeros_like(d)
    for p, c in enumerate(shifted):
        if c != 0.0:
            out += c * gamma(p + 1) * rgamma(p + 1 - alpha) * d ** (p - alpha)
    return out


def run_estimate(spec: EstimateSpec, seed: int = 0):
    """Estimate on ``grid`` interior points of (0, 1) for several seeds.

    Pseudo-random streams use seed ``seed + s``; quasi-random streams, which
    have no seed, use disjoint index windows of the sequence instead.
    Returns ``(xs, exact, estimates, l2_per_seed)``.
    """
    cfg = EstimatorConfig(spec.N, spec.K, spec.alpha)
    xs = np.linspace(0.0, 1.0, spec.grid + 2)[1:-1]
    bound = 0.0 if spec.side == "left" else 1.0
    exact = exact_derivative(spec.function, spec.alpha, spec.side, xs, bound)
    coeffs = POLYNOMIALS[spec.function]
    f = lambda x: np.polynomial.polynomial.polyval(x, coeffs)  # noqa: E731
    window = spec.grid * cfg.draws
    ests, errs = [], []
    for s in range(spec.seeds):
        if spec.stream == "pseudo":
            stream = make_stream("pseudo", seed=seed + s)
        else:
            stream = make_stream(spec.stream, base=spec.halton_base,
                                 start_index=1 + (seed + s) * window)
        est = estimate_grid(f, xs, bound, spec.side, cfg, stream)
        ests.append(est)
        errs.append(l2_relative_error(exact, est))
    return xs, exact, np.array(ests), np.array(errs)


# ---------------------------------------------------------------- output

def _write_csv(path, header, rows) -> None:
    """Write to a path, or to an open text stream."""
    if hasattr(path, "write"):
        _csv_rows(path, header, rows)
        return
    with open(path, "w", newline="") as fh:
        _csv_rows(fh, header, rows)


def _csv_rows(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def read_csv(path) -> tuple[list[str], list[list]]:
    """Read one of our CSVs back: header and rows with numbers parsed."""
    def conv(v):
        try:
            return float(v)
        except ValueError:
            return v
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[conv(v) for v in r] for r in rows[1:]]


def _write_json(path, obj) -> None:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, (np.floating, np.integer)):
            return clean(v.item())
        return v
    with open(path, "w") as fh:
        json.dump({k: clean(v) for k, v in obj.items()}, fh, indent=2, sort_keys=True)


def _run_estimate_mode(cfg: ExperimentConfig, out: Path) -> dict:
    e = cfg.estimate
    t0 = time.perf_counter()
    xs, exact, ests, errs = run_estimate(e, cfg.seed)
    rows = [[x, ex] + list(ests[:, i]) for i, (x, ex) in enumerate(zip(xs, exact))]
    _write_csv(out / "estimates.csv", ["x", "exact"] + [f"seed_{s}" for s in range(e.seeds)],
               rows)
    _write_csv(out / "error_report.csv", ["seed", "l2_relative"], enumerate(errs))
    summary = {"mode": "estimate", "function": e.function, "alpha": e.alpha, "side": e.side,
               "N": e.N, "K": e.K, "stream": e.stream, "seeds": e.seeds,
               "l2_relative": float(np.median(errs)), "l2_per_seed": [float(v) for v in errs],
               "wall_seconds": time.perf_counter() - t0}
    _write_json(out / "summary.json", summary)
    return summary


def _run_train_mode(cfg: ExperimentConfig, out: Path, progress=None) -> dict:
    problem, sampler, validation = build_problem(cfg)
    t0 = time.perf_counter()
    res = train(problem, cfg.train, sampler=sampler, validation=validation,
                checkpoint_dir=out, progress=progress)
    wall = time.perf_counter() - t0
    h = res.history
    _write_csv(out / "history.csv", h.COLUMNS, h.rows())
    rep = error_report(res.u_val, res.u_pred, grid=f"{len(res.u_val)} points")
    row = rep.as_row()
    _write_csv(out / "error_report.csv", list(row), [row.values()])
    coords = ["x", "y", "z"][:problem.dim]
    cols = [res.x_val[:, i] for i in range(problem.dim)]
    if res.t_val is not None:
        coords.append("t")
        cols.append(res.t_val)
    _write_csv(out / "validation_grid.csv", coords + ["exact", "predicted", "pointwise"],
               zip(*cols, res.u_val, res.u_pred, rep.pointwise))
    _write_csv(out / "nodes.csv", ["term", "axis", "side", "order", "N", "K", "raw", "unique",
                                   "clamped"], res.node_terms)
    save_checkpoint(res.net, out / "network.csv")
    t = cfg.train
    summary = {
        "mode": "train", "problem": problem.name, "N": t.N, "K": t.K, "stream": t.stream,
        "seed": cfg.seed, "adam_iterations": t.iterations, "lbfgs_iterations": t.lbfgs_iterations,
        "iterations_run": len(h), "l2_relative": res.validation_l2,
        "initial_l2_relative": res.initial_l2, "max_pointwise": row["max_pointwise"],
        "final_loss": h.total[-1] if len(h) else None,
        "median_ms_per_10_iter": h.median_ms_per_10(), "wall_seconds": wall,
        "redraws": res.redraws, "lbfgs_failed": res.lbfgs_failed,
        "unique_per_draw": res.node_stats.get("unique_per_draw"),
        "raw_per_draw": res.node_stats.get("raw_per_draw"),
    }
    _write_json(out / "summary.json", summary)
    return summary


def run(cfg: ExperimentConfig, output=None, progress=None) -> dict:
    """Execute a config and write its run directory; returns the summary.

    Raises :class:`ConfigError` for invalid configs and
    :class:`~gmcpinn.solver.TrainingAborted` when training hits a NaN (a
    checkpoint is left in the run directory).
    """
    out = Path(output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.ini")
    if cfg.mode == "estimate":
        return _run_estimate_mode(cfg, out)
    return _run_train_mode(cfg, out, progress)


def compare(run_dirs, out=None) -> list[dict]:
    """One row per run (N, K, accuracy, median ms per 10 iterations), sorted by N.

    ``out`` is an optional CSV path or text stream.
    """
    rows = []
    for d in run_dirs:
        path = Path(d) / "summary.json"
        if not path.exists():
            raise FileNotFoundError(f"missing summary file {path}")
        s = json.loads(path.read_text())
        rows.append({"run": str(d), "problem": s.get("problem", s.get("function")),
                     "N": s["N"], "K": s["K"], "l2_relative": s["l2_relative"],
                     "median_ms_per_10_iter": s.get("median_ms_per_10_iter")})
    rows.sort(key=lambda r: (r["N"], r["K"], r["run"]))
    if out is not None:
        cols = ["run", "problem", "N", "K", "l2_relative", "median_ms_per_10_iter"]
        _write_csv(out, cols, ([r[c] if r[c] is not None else "nan" for c in cols] for r in rows))
    return rows


def summary_without_wall(summary: dict) -> dict:
    return {k: v for k, v in summary.items() if k not in WALL_FIELDS}

