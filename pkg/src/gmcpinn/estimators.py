"""Monte Carlo and quasi-Monte Carlo estimators of fractional derivatives.

Every estimator is a weighted sum of function values on the lattice
``x -/+ k h`` (``k = 0, 1, ...``) with ``h = span / N``. The weights come from
``N * K`` jumps drawn from the order's jump law:

* order in (1, 2)::

      (1/h**a) [f(x) - 2 f(x -/+ h) + (1/(N K)) sum_m f(x -/+ Y_m h)]

* order in (0, 1)::

      (1/h**a) [f(x) - (1/(N K)) sum_m f(x -/+ Y_m h)]

Averaging ``K`` repeats of an ``N``-sample estimate is the same as a single
mean over all ``N * K`` draws, which is how the sums are evaluated here.
Lattice points beyond the integration bound (``k > N``) are either dropped
(zero extension) or moved onto the bound (clamping).

The Riesz combination uses ``(left + right) / (2 cos(pi * beta / 2))``. As
``beta -> 2`` both one-sided terms tend to ``f''`` and the combination tends to
``-f''``, so this is the positive fractional Laplacian ``(-Delta)^(beta/2)``;
the Riesz derivative proper carries the opposite sign.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sampler import FracOrder, NodeSet, default_k_cap, draw_nodes, jump_distribution

__all__ = [
    "AxisBounds",
    "EstimatorConfig",
    "Extension",
    "caputo_time",
    "estimate_grid",
    "gl_deterministic_oracle",
    "gl_left",
    "gl_right",
    "gl_weights",
    "lattice_counts",
    "lattice_weights",
    "lattice_weights_batch",
    "riesz",
    "riesz_factor",
]

Func = Callable[[np.ndarray], np.ndarray]


class Extension(enum.Enum):
    ZERO = "zero"
    CLAMP = "clamp"


@dataclass(frozen=True)
class EstimatorConfig:
    """Sampling parameters of one derivative term."""

    N: int
    K: int
    order: FracOrder
    extension: Extension = Extension.ZERO

    def __post_init__(self) -> None:
        if self.N < 1 or self.K < 1:
            raise ValueError("N and K must be >= 1")
        if not isinstance(self.order, FracOrder):
            object.__setattr__(self, "order", FracOrder(self.order))
        object.__setattr__(self, "extension", Extension(self.extension))

    @property
    def draws(self) -> int:
        return self.N * self.K

    def distribution(self):
        return jump_distribution(self.order.value, default_k_cap(self.N))


@dataclass(frozen=True)
class AxisBounds:
    lb: float
    ub: float

    def __post_init__(self) -> None:
        if not self.lb < self.ub:
            raise ValueError(f"degenerate bounds: lb={self.lb} >= ub={self.ub}")

    @property
    def span(self) -> float:
        return self.ub - self.lb


def lattice_counts(jumps, n: int) -> np.ndarray:
    """Histogram of raw jumps over ``0..n`` plus one overflow bin (``k > n``).

    ``jumps`` has shape ``(..., draws)``; the result has shape ``(..., n + 2)``.
    """
    jumps = np.asarray(jumps)
    lead = jumps.shape[:-1]
    rows = int(np.prod(lead, dtype=np.int64))
    k = np.minimum(jumps.reshape(rows, -1), n + 1)
    idx = (np.arange(rows)[:, None] * (n + 2) + k).ravel()
    return np.bincount(idx, minlength=rows * (n + 2)).reshape(lead + (n + 2,))


def lattice_weights_batch(counts, cfg: EstimatorConfig, *, caputo: bool = False) -> np.ndarray:
    """Weights on offsets ``k = 0..N`` from histograms made by :func:`lattice_counts`.

    The ``1/h**a`` factor is not included. With ``caputo=True`` offset ``N``
    (time zero, where the shifted function vanishes) and beyond are dropped
    whatever the extension policy.
    """
    n = cfg.N
    counts = np.asarray(counts, dtype=float)
    w = counts[..., : n + 1].copy()
    if cfg.extension is Extension.CLAMP and not caputo:
        w[..., n] += counts[..., n + 1]
    w /= cfg.draws
    if cfg.order.branch == 1:
        w[..., 1] -= 2.0
    else:
        w = -w
    w[..., 0] += 1.0
    if caputo:
        w[..., n] = 0.0
    return w


def lattice_weights(jumps: np.ndarray, counts: np.ndarray, cfg: EstimatorConfig,
                    *, caputo: bool = False) -> np.ndarray:
    """Weights on lattice offsets ``k = 0..N`` for a deduplicated node set."""
    n = cfg.N
    hist = np.zeros(n + 2)
    np.add.at(hist, np.minimum(np.asarray(jumps), n + 1), np.asarray(counts, dtype=float))
    return lattice_weights_batch(hist, cfg, caputo=caputo)


def _sided(f: Func, x: float, bound: float, sign: int, cfg: EstimatorConfig,
           stream, nodes: NodeSet | None = None) -> float:
    span = (x - bound) * sign
    if span <= 0:
        side = "left" if sign > 0 else "right"
        raise ValueError(f"{side}-sided estimate needs x strictly inside the bound")
    h = span / cfg.N
    if nodes is None:
        nodes = draw_nodes(cfg.distribution(), cfg.N, cfg.K, stream)
    w = lattice_weights(nodes.jumps, nodes.counts, cfg)
    k = np.flatnonzero(w)
    pts = x - sign * k * h
    pts[k == cfg.N] = bound
    vals = np.asarray(f(pts), dtype=float)
    return float(np.dot(w[k], vals) / h**cfg.order.value)


def gl_left(f: Func, x: float, lb: float, cfg: EstimatorConfig, stream) -> float:
    """Left-sided estimate of ``D^a f(x)`` anchored at ``lb``."""
    return _sided(f, x, lb, +1, cfg, stream)


def gl_right(f: Func, x: float, ub: float, cfg: EstimatorConfig, stream) -> float:
    """Right-sided estimate of ``D^a f(x)`` anchored at ``ub``."""
    return _sided(f, x, ub, -1, cfg, stream)


def riesz_factor(order) -> float:
    order = order if isinstance(order, FracOrder) else FracOrder(order)
    if order.branch != 1:
        raise ValueError("Riesz terms need an order in (1, 2)")
    return 1.0 / (2.0 * math.cos(math.pi * order.value / 2.0))


def riesz(f: Func, x: float, bounds: AxisBounds, cfg_l: EstimatorConfig,
          cfg_r: EstimatorConfig, streams) -> float:
    """``(left + right) / (2 cos(pi beta / 2))``.

    ``streams`` is either one stream (left draws first, then right) or a pair.
    """
    if isinstance(streams, (tuple, list)):
        s_l, s_r = streams
    else:
        s_l = s_r = streams
    left = gl_left(f, x, bounds.lb, cfg_l, s_l)
    right = gl_right(f, x, bounds.ub, cfg_r, s_r)
    return riesz_factor(cfg_l.order) * (left + right)


def caputo_time(u: Func, t: float, u0: float, cfg: EstimatorConfig, stream) -> float:
    """Caputo derivative in time from 0, order in (0, 1).

    The estimator acts on ``v(s) = u(s) - u0``; samples reaching ``s <= 0``
    contribute ``v = 0``.
    """
    if t <= 0:
        raise ValueError("Caputo estimate needs t > 0")
    if cfg.order.branch != 0:
        raise ValueError("Caputo time derivative supports orders in (0, 1)")
    h = t / cfg.N
    nodes = draw_nodes(cfg.distribution(), cfg.N, cfg.K, stream)
    w = lattice_weights(nodes.jumps, nodes.counts, cfg, caputo=True)
    k = np.flatnonzero(w)
    vals = np.asarray(u(t - k * h), dtype=float) - u0
    return float(np.dot(w[k], vals) / h**cfg.order.value)


def gl_weights(alpha: float, n: int) -> np.ndarray:
    """Grunwald-Letnikov weights ``m_0 .. m_n`` by the ratio recurrence."""
    ks = np.arange(n, dtype=float)
    m = np.empty(n + 1)
    m[0] = 1.0
    m[1:] = np.cumprod((ks - alpha) / (ks + 1.0))
    return m


def gl_deterministic_oracle(f: Func, x: float, bound: float, side: str, alpha: float,
                            n_big: int = 10**5, *, shift: float | None = None) -> float:
    """Truncated Grunwald-Letnikov sum ``sum_k m_k f(x -/+ k h) / h**a``.

    ``side`` is ``"left"`` (anchored at ``bound`` below ``x``) or ``"right"``.
    Passing ``shift`` evaluates the sum on ``f - shift``, which gives the
    Caputo derivative when ``shift = f(bound)``.
    """
    if n_big < 1:
        raise ValueError("n_big must be positive")
    sign = {"left": 1, "right": -1}[side]
    span = (x - bound) * sign
    if span <= 0:
        raise ValueError("x must lie strictly inside the bound")
    h = span / n_big
    k = np.arange(n_big + 1)
    vals = np.asarray(f(x - sign * k * h), dtype=float)
    if shift is not None:
        vals = vals - shift
    return float(np.dot(gl_weights(alpha, n_big), vals) / h**alpha)


def estimate_grid(f: Func, xs, bound: float, side: str, cfg: EstimatorConfig,
                  stream) -> np.ndarray:
    """One-sided estimates on a grid, each point taking a contiguous block."""
    fn = gl_left if side == "left" else gl_right
    return np.array([fn(f, float(x), bound, cfg, stream) for x in np.asarray(xs)])
