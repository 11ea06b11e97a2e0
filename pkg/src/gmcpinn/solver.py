"""Discrete residual assembly, loss, and the training loop.

For every collocation point the discrete operator is a weighted sum of network
values on a few axis lattices through the point. Drawn jumps are histogrammed
onto the lattice offsets ``0..N``, so each distinct offset is evaluated once
(the deduplication). The whole residual vector is then ``W @ u - f`` with a
sparse ``W`` over one batched network evaluation, and the reverse pass only
needs ``W.T``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .autodiff import Mlp, Tape, grad_params, save_checkpoint, xavier_init
from .estimators import (
    EstimatorConfig,
    Extension,
    caputo_time,
    gl_left,
    gl_right,
    lattice_counts,
    lattice_weights_batch,
)
from .geometry import Domain
from .optim import AdamState, LbfgsState, NonFiniteGradient, adam_step, lbfgs_step
from .problems import ProblemSpec, l2_relative_error
from .sampler import default_k_cap, jump_distribution
from .streams import UniformStream, make_stream

__all__ = [
    "DataSampler",
    "Dataset",
    "EvalBatch",
    "History",
    "LossBreakdown",
    "LossWeights",
    "NodeDraw",
    "NodePolicy",
    "Term",
    "TrainConfig",
    "TrainResult",
    "TrainingAborted",
    "assemble_residual",
    "build_eval_batch",
    "build_terms",
    "draw_term_nodes",
    "evaluate_loss",
    "loss_and_grad",
    "naive_residuals",
    "resample_nodes",
    "train",
]


class TrainingAborted(RuntimeError):
    def __init__(self, message: str, checkpoint: Path | None = None):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class LossWeights:
    w_E: float = 1.0
    w_I: float = 1.0
    w_B: float = 1.0

    def __post_init__(self) -> None:
        ws = (self.w_E, self.w_I, self.w_B)
        if min(ws) < 0:
            raise ValueError("loss weights must be nonnegative")
        if not any(ws):
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    mse_E: float
    mse_I: float
    mse_B: float
    total: float


@dataclass(frozen=True)
class Term:
    """One derivative term of the discrete operator.

    ``side`` is ``+1`` for a left-sided derivative (lattice towards ``lb``)
    and ``-1`` for a right-sided one. The time term has ``axis = -1``.
    ``coeff`` multiplies the estimate (before the ``1/h**order`` scaling).
    """

    axis: int
    side: int
    cfg: EstimatorConfig
    coeff: float

    @property
    def is_time(self) -> bool:
        return self.axis < 0


def build_terms(problem: ProblemSpec, N: int, K: int, *, N_t: int | None = None,
                K_t: int | None = None, extension=Extension.ZERO) -> list[Term]:
    """Terms in draw order: time (if any), then left/right per spatial axis."""
    terms = []
    if problem.time_dependent:
        cfg = EstimatorConfig(N_t or N, K_t or K, problem.time_order, Extension.ZERO)
        terms.append(Term(-1, +1, cfg, problem.time_coeff))
    for a, (g, k) in enumerate(zip(problem.space_orders, problem.space_coeffs)):
        factor = k / (2.0 * math.cos(math.pi * g / 2.0))
        for side in (+1, -1):
            terms.append(Term(a, side, EstimatorConfig(N, K, g, extension), factor))
    return terms


@dataclass
class Dataset:
    """Collocation, boundary and initial points with their data.

    ``bounds`` are the per-axis lattice anchors of each collocation point; ``f``
    is the forcing there. Time arrays are ``None`` for steady problems.
    """

    x_equ: np.ndarray
    bounds: np.ndarray
    f: np.ndarray
    x_bnd: np.ndarray
    g_bnd: np.ndarray
    t_equ: np.ndarray | None = None
    t_bnd: np.ndarray | None = None
    x_ini: np.ndarray | None = None
    g_ini: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.x_equ) == 0:
            raise ValueError("collocation set D_equ is empty")
        if self.t_equ is not None:
            if self.x_ini is None or len(self.x_ini) == 0:
                raise ValueError("time-dependent problems need initial points D_ini")
            if np.any(self.t_equ <= 0):
                raise ValueError("collocation times must be > 0")

    @property
    def time_dependent(self) -> bool:
        return self.t_equ is not None

    def inputs(self, x, t=None) -> np.ndarray:
        return x if t is None else np.column_stack([x, t])

    def permuted(self, perm_equ, perm_bnd, perm_ini=None) -> Dataset:
        pick = lambda a, p: None if a is None else a[p]  # noqa: E731
        pi = perm_ini if perm_ini is not None else slice(None)
        return Dataset(self.x_equ[perm_equ], self.bounds[perm_equ], self.f[perm_equ],
                       self.x_bnd[perm_bnd], self.g_bnd[perm_bnd],
                       pick(self.t_equ, perm_equ), pick(self.t_bnd, perm_bnd),
                       pick(self.x_ini, pi), pick(self.g_ini, pi))


@dataclass
class DataSampler:
    """Draws datasets for a problem.

    ``interior`` supplies collocation points (defaults to the problem domain),
    ``boundary`` supplies boundary points. Operator bounds always come from the
    problem's own domain. ``margin`` keeps collocation points that far from
    the boundary: near it the lattice step shrinks and ``h^-order`` amplifies
    any network error there.
    """

    problem: ProblemSpec
    n_equ: int = 1000
    n_bnd: int = 400
    n_ini: int = 400
    interior: Domain | None = None
    boundary: Domain | None = None
    margin: float = 0.0

    def __call__(self, rng) -> Dataset:
        rng = np.random.default_rng(rng)
        pb = self.problem
        inner = self.interior or pb.domain
        outer = self.boundary or pb.domain
        x = inner.sample_interior(self.n_equ, rng, self.margin)
        t = pb.T * (1.0 - rng.random(self.n_equ)) if pb.time_dependent else None
        bounds = pb.domain.axis_bounds_many(x)
        f = pb.forcing(x, t, bounds)
        xb = outer.sample_boundary(self.n_bnd, rng)
        tb = rng.uniform(0.0, pb.T, self.n_bnd) if pb.time_dependent else None
        gb = pb.boundary(xb, tb)
        xi = gi = None
        if pb.time_dependent:
            xi = pb.domain.sample_interior(self.n_ini, rng)
            gi = pb.initial(xi)
        return Dataset(x, bounds, f, xb, gb, t, tb, xi, gi)


@dataclass
class NodeDraw:
    """Lattice histograms for every term: ``counts[j]`` is ``(n_pts, N_j + 2)``."""

    counts: list
    clamped: list
    raw: list | None = None

    def per_term(self, terms: list[Term]) -> list[list]:
        """Rows ``[term, axis, side, order, N, K, raw, unique, clamped]``."""
        out = []
        for j, (term, c, cl) in enumerate(zip(terms, self.counts, self.clamped)):
            side = "left" if term.side > 0 else "right"
            out.append([j, "t" if term.is_time else term.axis, side, term.cfg.order.value,
                        term.cfg.N, term.cfg.K, int(c.sum()), int(np.count_nonzero(c[:, 1:])),
                        int(cl)])
        return out

    def diagnostics(self) -> dict:
        unique = [int(np.count_nonzero(c[:, 1:])) for c in self.counts]
        raw = [int(c.sum()) for c in self.counts]
        return {"raw": sum(raw), "unique": sum(unique), "clamped": int(sum(self.clamped))}


def draw_term_nodes(terms: list[Term], n_pts: int, stream: UniformStream, *,
                    workers: int = 1, keep_raw: bool = False) -> NodeDraw:
    """Draw jumps for every (term, point).

    Term ``j`` consumes one contiguous chunk of the stream; inside it point
    ``i`` owns the block ``[i * N K, (i + 1) * N K)``. The chunks are laid out
    before any work starts, so the result does not depend on ``workers``.
    """
    offsets, pos = [], stream.cursor
    for term in terms:
        offsets.append(pos)
        pos += n_pts * term.cfg.draws

    def one(j):
        cfg = terms[j].cfg
        s = stream.copy()
        s.cursor = offsets[j]
        u = s.take(n_pts * cfg.draws)
        dist = jump_distribution(cfg.order.value, default_k_cap(cfg.N))
        jumps = dist.sample(u).reshape(n_pts, cfg.draws)
        return lattice_counts(jumps, cfg.N), int(dist.clamped(u).sum()), jumps if keep_raw else None

    if workers > 1 and len(terms) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, range(len(terms))))
    else:
        out = [one(j) for j in range(len(terms))]
    stream.cursor = pos
    return NodeDraw([o[0] for o in out], [o[1] for o in out],
                    [o[2] for o in out] if keep_raw else None)


@dataclass
class EvalBatch:
    """Unique network inputs plus the sparse map from them to residual rows.

    Columns ``[0, n_equ_coords)`` of ``X`` are collocation lattices, followed
    by boundary inputs (``bnd`` slice) and initial inputs (``ini`` slice).
    """

    X: np.ndarray
    W: sp.csr_matrix
    f: np.ndarray
    bnd: slice
    g_bnd: np.ndarray
    ini: slice
    g_ini: np.ndarray
    n_equ_coords: int
    raw_nodes: int

    @property
    def unique(self) -> int:
        return self.n_equ_coords


def _term_scale(term: Term, data: Dataset) -> np.ndarray:
    """Lattice step ``h`` for every collocation point."""
    if term.is_time:
        return data.t_equ / term.cfg.N
    lo, hi = data.bounds[:, term.axis, 0], data.bounds[:, term.axis, 1]
    x = data.x_equ[:, term.axis]
    span = x - lo if term.side > 0 else hi - x
    if np.any(span <= 0):
        raise ValueError("collocation point on or outside its axis bounds")
    return span / term.cfg.N


def build_eval_batch(data: Dataset, terms: list[Term], nodes: NodeDraw) -> EvalBatch:
    n, dim = data.x_equ.shape
    timed = data.time_dependent
    rows, cols, vals = [], [], []
    xs, ts = [data.x_equ], [data.t_equ] if timed else []
    ncoord = n
    centers = np.arange(n)

    def add_coords(x, t=None):
        nonlocal ncoord
        xs.append(x)
        if timed:
            ts.append(t)
        idx = np.arange(ncoord, ncoord + len(x))
        ncoord += len(x)
        return idx

    raw = 0
    for term, counts in zip(terms, nodes.counts):
        cfg = term.cfg
        raw += n * cfg.draws
        w = lattice_weights_batch(counts, cfg, caputo=term.is_time)
        h = _term_scale(term, data)
        scale = term.coeff / h**cfg.order.value
        w *= scale[:, None]
        rows.append(centers)
        cols.append(centers)
        vals.append(w[:, 0])
        pi, k = np.nonzero(w[:, 1:])
        k = k + 1
        if term.is_time:
            tt = data.t_equ[pi] - k * h[pi]
            idx = add_coords(data.x_equ[pi], tt)
            rows.append(pi)
            cols.append(idx)
            vals.append(w[pi, k])
            # Caputo shift: -sum_{k<N} w_k * u(x, 0)
            idx0 = add_coords(data.x_equ, np.zeros(n))
            rows.append(centers)
            cols.append(idx0)
            vals.append(-w.sum(axis=1))
        else:
            x = data.x_equ[pi].copy()
            x[:, term.axis] -= term.side * k * h[pi]
            at_bound = k == cfg.N
            bound_col = 0 if term.side > 0 else 1
            x[at_bound, term.axis] = data.bounds[pi[at_bound], term.axis, bound_col]
            idx = add_coords(x, data.t_equ[pi] if timed else None)
            rows.append(pi)
            cols.append(idx)
            vals.append(w[pi, k])

    n_equ_coords = ncoord
    xb = data.inputs(data.x_bnd, data.t_bnd)
    parts = [data.inputs(np.concatenate(xs), np.concatenate(ts) if timed else None), xb]
    bnd = slice(n_equ_coords, n_equ_coords + len(xb))
    ini = slice(bnd.stop, bnd.stop)
    g_ini = np.zeros(0)
    if timed:
        xi = data.inputs(data.x_ini, np.zeros(len(data.x_ini)))
        parts.append(xi)
        ini = slice(bnd.stop, bnd.stop + len(xi))
        g_ini = data.g_ini
    X = np.concatenate(parts)
    W = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, len(X)))
    W.sum_duplicates()
    return EvalBatch(X, W, data.f, bnd, data.g_bnd, ini, g_ini, n_equ_coords, raw)


def loss_and_grad(net: Mlp, batch: EvalBatch, weights: LossWeights,
                  need_grad: bool = True):
    """Loss breakdown and (optionally) its flat parameter gradient."""
    tape = Tape()
    out, leaves = net.forward(tape, batch.X)
    u = tape.getitem(out, (slice(None), 0))
    r = tape.spmv(batch.W, u) - batch.f
    mse_e = tape.mean(tape.square(r))
    total = tape.mul(mse_e, weights.w_E)
    mse_b = mse_i = None
    if batch.bnd.stop > batch.bnd.start:
        mse_b = tape.mean(tape.square(tape.getitem(u, batch.bnd) - batch.g_bnd))
        total = total + tape.mul(mse_b, weights.w_B)
    if batch.ini.stop > batch.ini.start:
        mse_i = tape.mean(tape.square(tape.getitem(u, batch.ini) - batch.g_ini))
        total = total + tape.mul(mse_i, weights.w_I)
    val = lambda v: 0.0 if v is None else float(v.value)  # noqa: E731
    br = LossBreakdown(val(mse_e), val(mse_i), val(mse_b), float(total.value))
    if not need_grad:
        tape.release()
        return br, None
    return br, grad_params(tape, total, leaves)


def evaluate_loss(net: Mlp, batch: EvalBatch, weights: LossWeights) -> LossBreakdown:
    return loss_and_grad(net, batch, weights, need_grad=False)[0]


def assemble_residual(batch: EvalBatch, u_values) -> np.ndarray:
    """``L* u - f`` at every collocation point given values on ``batch.X``.

    ``u_values`` is either an array over ``batch.X`` or a callable on inputs.
    """
    u = u_values(batch.X) if callable(u_values) else np.asarray(u_values)
    return batch.W @ np.asarray(u, dtype=float).reshape(-1) - batch.f


def naive_residuals(fn, data: Dataset, terms: list[Term], stream: UniformStream) -> np.ndarray:
    """Reference residuals through the single-point estimators.

    Replays exactly the stream blocks :func:`draw_term_nodes` would assign, so
    it agrees with the batched path up to rounding. ``fn`` maps inputs to
    values. Slow; meant for checks.
    """
    n = len(data.x_equ)
    res = -np.asarray(data.f, dtype=float).copy()
    pos = stream.cursor
    for term in terms:
        cfg = term.cfg
        for i in range(n):
            s = stream.copy()
            s.cursor = pos + i * cfg.draws
            x = data.x_equ[i]
            if term.is_time:
                def line(tt, x=x):
                    tt = np.atleast_1d(tt)
                    return fn(data.inputs(np.tile(x, (len(tt), 1)), tt)).reshape(-1)
                u0 = float(line(0.0)[0])
                est = caputo_time(line, float(data.t_equ[i]), u0, cfg, s)
            else:
                t = None if data.t_equ is None else data.t_equ[i]

                def line(v, x=x, t=t, a=term.axis):
                    v = np.atleast_1d(v)
                    pts = np.tile(x, (len(v), 1))
                    pts[:, a] = v
                    tt = None if t is None else np.full(len(v), t)
                    return fn(data.inputs(pts, tt)).reshape(-1)
                lo, hi = data.bounds[i, term.axis]
                if term.side > 0:
                    est = gl_left(line, float(x[term.axis]), float(lo), cfg, s)
                else:
                    est = gl_right(line, float(x[term.axis]), float(hi), cfg, s)
            res[i] += term.coeff * est
        pos += n * cfg.draws
    return res


@dataclass(frozen=True)
class NodePolicy:
    """``every = 0`` keeps the first draw forever (Fixed); ``every = k`` redraws
    on iterations ``0, k, 2k, ...``."""

    every: int = 1

    def __post_init__(self) -> None:
        if self.every < 0:
            raise ValueError("node policy period must be >= 0")

    @classmethod
    def fixed(cls) -> NodePolicy:
        return cls(0)

    def redraw(self, iteration: int) -> bool:
        if iteration == 0:
            return True
        return self.every > 0 and iteration % self.every == 0


def resample_nodes(terms, n_pts, stream, policy: NodePolicy, iteration: int,
                   current: NodeDraw | None, *, workers: int = 1) -> tuple[NodeDraw, bool]:
    """Return the node draw to use at ``iteration`` and whether it is new."""
    if current is not None and not policy.redraw(iteration):
        return current, False
    return draw_term_nodes(terms, n_pts, stream, workers=workers), True


@dataclass
class TrainConfig:
    iterations: int = 50_000
    lbfgs_iterations: int = 0
    lr: float = 1e-3
    hidden_layers: int = 5
    width: int = 20
    N: int = 32
    K: int = 32
    N_t: int | None = None
    K_t: int | None = None
    extension: str = "zero"
    stream: str = "halton"
    stream_seed: int = 0
    halton_base: int = 2
    node_every: int = 1
    points_every: int = 0
    n_equ: int = 1000
    n_bnd: int = 400
    n_ini: int = 400
    margin: float = 0.0
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    validate_every: int = 500
    workers: int = 1
    log_every: int = 0


@dataclass
class History:
    iteration: list = field(default_factory=list)
    mse_E: list = field(default_factory=list)
    mse_I: list = field(default_factory=list)
    mse_B: list = field(default_factory=list)
    total: list = field(default_factory=list)
    wall_ms_per_10_iter: list = field(default_factory=list)
    validation_L2: list = field(default_factory=list)

    COLUMNS = ("iteration", "mse_E", "mse_I", "mse_B", "total",
               "wall_ms_per_10_iter", "validation_L2")

    def append(self, it, br: LossBreakdown, wall=math.nan, val=math.nan) -> None:
        self.iteration.append(it)
        self.mse_E.append(br.mse_E)
        self.mse_I.append(br.mse_I)
        self.mse_B.append(br.mse_B)
        self.total.append(br.total)
        self.wall_ms_per_10_iter.append(wall)
        self.validation_L2.append(val)

    def __len__(self) -> int:
        return len(self.iteration)

    def rows(self):
        cols = [getattr(self, c) for c in self.COLUMNS]
        return zip(*cols)

    def median_ms_per_10(self) -> float:
        """Median over disjoint 10-iteration windows, the first one dropped."""
        w = [v for v in self.wall_ms_per_10_iter if not math.isnan(v)]
        return float(np.median(w[1:])) if len(w) > 1 else math.nan

    def validation_trace(self):
        return [(i, v) for i, v in zip(self.iteration, self.validation_L2) if not math.isnan(v)]


@dataclass
class TrainResult:
    net: Mlp
    history: History
    validation_l2: float
    initial_l2: float
    node_stats: dict
    redraws: int
    x_val: np.ndarray
    t_val: np.ndarray | None
    u_val: np.ndarray
    u_pred: np.ndarray
    lbfgs_failed: bool = False
    node_terms: list = field(default_factory=list)


def _validation(problem: ProblemSpec, x_val, t_val):
    if x_val is None:
        x_val, t_val = problem.validation_points()
    u = problem.exact(x_val, t_val if t_val is not None else np.zeros(len(x_val)),
                      problem.domain.axis_bounds_many(x_val))
    X = x_val if t_val is None else np.column_stack([x_val, t_val])
    return x_val, t_val, u, X


def train(problem: ProblemSpec, config: TrainConfig, *, sampler: DataSampler | None = None,
          validation=None, net: Mlp | None = None, checkpoint_dir=None,
          progress=None) -> TrainResult:
    """Adam (optionally followed by L-BFGS on frozen nodes).

    ``validation`` is an optional ``(x, t)`` pair; by default the problem's
    validation grid is used. Runs are reproducible for equal seeds; results
    may differ in the last bits across BLAS builds.
    """
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    sampler = sampler or DataSampler(problem, cfg.n_equ, cfg.n_bnd, cfg.n_ini, margin=cfg.margin)
    in_dim = problem.dim + (1 if problem.time_dependent else 0)
    if net is None:
        net = xavier_init([in_dim] + [cfg.width] * cfg.hidden_layers + [1], rng)
    terms = build_terms(problem, cfg.N, cfg.K, N_t=cfg.N_t, K_t=cfg.K_t,
                        extension=Extension(cfg.extension))
    stream = make_stream(cfg.stream, seed=cfg.stream_seed, base=cfg.halton_base)
    policy = NodePolicy(cfg.node_every)
    vx, vt = validation if validation is not None else (None, None)
    x_val, t_val, u_val, X_val = _validation(problem, vx, vt)
    val_err = lambda: l2_relative_error(u_val, net(X_val)[:, 0])  # noqa: E731
    initial_l2 = val_err()

    data = sampler(rng)
    nodes, batch = None, None
    history = History()
    adam = AdamState(net.n_params, lr=cfg.lr)
    theta = net.get_flat()
    redraws = 0
    stats = {"raw": 0, "unique": 0, "clamped": 0, "draws": 0}
    t_window = time.perf_counter()
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir else None

    def abort(msg, it):
        path = None
        if ckpt_dir is not None:
            ckpt_dir.mkdir(parents=True, exist_ok=True)
            path = ckpt_dir / "checkpoint.csv"
            save_checkpoint(net, path)
        raise TrainingAborted(f"{msg} at iteration {it}", path)

    def refresh(it, force=False):
        nonlocal data, nodes, batch, redraws
        new_pts = cfg.points_every > 0 and it > 0 and it % cfg.points_every == 0
        if new_pts:
            data = sampler(rng)
        nodes2, fresh = resample_nodes(terms, len(data.x_equ), stream, policy, it, nodes,
                                       workers=cfg.workers)
        if force and not fresh:
            nodes2 = draw_term_nodes(terms, len(data.x_equ), stream, workers=cfg.workers)
            fresh = True
        if fresh:
            redraws += 1
            d = nodes2.diagnostics()
            for k in ("raw", "unique", "clamped"):
                stats[k] += d[k]
            stats["draws"] += 1
        if fresh or new_pts or batch is None:
            nodes = nodes2
            batch = build_eval_batch(data, terms, nodes)

    for it in range(cfg.iterations):
        refresh(it)
        br, g = loss_and_grad(net, batch, cfg.weights)
        if not math.isfinite(br.total):
            abort("non-finite loss", it)
        try:
            theta_new = adam_step(adam, theta, g)
        except NonFiniteGradient as exc:
            abort(str(exc), it)
        if not np.all(np.isfinite(theta_new)):
            abort("non-finite parameters", it)
        theta = theta_new
        net.set_flat(theta)
        wall = math.nan
        if (it + 1) % 10 == 0:
            now = time.perf_counter()
            wall = 1e3 * (now - t_window)
            t_window = now
        val = math.nan
        if cfg.validate_every and ((it + 1) % cfg.validate_every == 0 or it + 1 == cfg.iterations):
            val = val_err()
        history.append(it, br, wall, val)
        if progress is not None and cfg.log_every and (it + 1) % cfg.log_every == 0:
            progress(it, br, val)

    lbfgs_failed = False
    if cfg.lbfgs_iterations > 0:
        if batch is None:
            refresh(0)

        last = {}

        def fg(th):
            net.set_flat(th)
            b, gr = loss_and_grad(net, batch, cfg.weights)
            last["theta"], last["br"] = th, b
            return b.total, gr

        state = LbfgsState()
        f0, g0 = fg(theta)
        base = cfg.iterations
        for j in range(cfg.lbfgs_iterations):
            res = lbfgs_step(state, theta, fg, f0, g0)
            if not res.ok:
                lbfgs_failed = True
                break
            if not math.isfinite(res.loss):
                net.set_flat(theta)
                abort("non-finite loss in L-BFGS", base + j)
            theta, f0, g0 = res.params, res.loss, res.grad
            net.set_flat(theta)
            # the line search normally ends on the accepted point
            same = last.get("theta") is not None and np.array_equal(last["theta"], theta)
            br = last["br"] if same else evaluate_loss(net, batch, cfg.weights)
            wall = math.nan
            if (j + 1) % 10 == 0:
                now = time.perf_counter()
                wall = 1e3 * (now - t_window)
                t_window = now
            val = val_err() if cfg.validate_every and (j + 1) % cfg.validate_every == 0 else math.nan
            history.append(base + j, br, wall, val)
        net.set_flat(theta)

    final = val_err()
    if len(history) and math.isnan(history.validation_L2[-1]):
        history.validation_L2[-1] = final
    if stats["draws"]:
        stats["unique_per_draw"] = stats["unique"] / stats["draws"]
        stats["raw_per_draw"] = stats["raw"] / stats["draws"]
    node_terms = nodes.per_term(terms) if nodes is not None else []
    return TrainResult(net, history, final, initial_l2, stats, redraws,
                       x_val, t_val, u_val, net(X_val)[:, 0], lbfgs_failed, node_terms)
