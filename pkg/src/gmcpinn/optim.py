"""Adam and L-BFGS on flat parameter vectors."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "LbfgsResult", "LbfgsState", "NonFiniteGradient",
           "adam_step", "lbfgs_minimize", "lbfgs_step"]


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass
class AdamState:
    n: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.m is None:
            self.m = np.zeros(self.n)
        if self.v is None:
            self.v = np.zeros(self.n)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns new parameters."""
    grads = np.asarray(grads, dtype=float)
    if not np.all(np.isfinite(grads)):
        bad = int(np.count_nonzero(~np.isfinite(grads)))
        raise NonFiniteGradient(f"{bad} non-finite gradient components at Adam step {state.step + 1}")
    state.step += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads * grads
    mhat = state.m / (1 - state.beta1**state.step)
    vhat = state.v / (1 - state.beta2**state.step)
    return params - state.lr * mhat / (np.sqrt(vhat) + state.eps)


@dataclass
class LbfgsState:
    m: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 25
    s_hist: deque = field(default_factory=deque)
    y_hist: deque = field(default_factory=deque)

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store a curvature pair if ``s . y > 0``; oldest pairs are evicted."""
        if float(s @ y) <= 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            return False
        self.s_hist.append(s)
        self.y_hist.append(y)
        while len(self.s_hist) > self.m:
            self.s_hist.popleft()
            self.y_hist.popleft()
        return True

    def direction(self, g: np.ndarray) -> np.ndarray:
        """Two-loop recursion for ``-H g``."""
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(self.s_hist), reversed(self.y_hist)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ q)
            alphas.append((a, rho, s, y))
            q -= a * y
        if self.s_hist:
            s, y = self.s_hist[-1], self.y_hist[-1]
            q *= (s @ y) / (y @ y)
        for a, rho, s, y in reversed(alphas):
            b = rho * (y @ q)
            q += (a - b) * s
        return -q


@dataclass
class LbfgsResult:
    params: np.ndarray
    loss: float
    grad: np.ndarray
    ok: bool
    evals: int


def _zoom(fg, x, f0, d0, d, lo, hi, f_lo, state, evals):
    for _ in range(state.max_ls):
        t = 0.5 * (lo + hi)
        f, g = fg(x + t * d)
        evals += 1
        if f > f0 + state.c1 * t * d0 or f >= f_lo:
            hi = t
        else:
            dt = float(g @ d)
            if abs(dt) <= -state.c2 * d0:
                return t, f, g, evals
            if dt * (hi - lo) >= 0:
                hi = lo
            lo, f_lo = t, f
    return None, None, None, evals


def _line_search(fg, x, f0, g0, d, state):
    """Strong Wolfe search (bracketing then bisection zoom)."""
    d0 = float(g0 @ d)
    t_prev, f_prev, t = 0.0, f0, 1.0
    evals = 0
    for i in range(state.max_ls):
        f, g = fg(x + t * d)
        evals += 1
        if not np.isfinite(f):
            t *= 0.5
            continue
        if f > f0 + state.c1 * t * d0 or (i > 0 and f >= f_prev):
            return _zoom(fg, x, f0, d0, d, t_prev, t, f_prev, state, evals)
        dt = float(g @ d)
        if abs(dt) <= -state.c2 * d0:
            return t, f, g, evals
        if dt >= 0:
            return _zoom(fg, x, f0, d0, d, t, t_prev, f, state, evals)
        t_prev, f_prev, t = t, f, 2.0 * t
    return None, None, None, evals


def lbfgs_step(state: LbfgsState, params, fg, f0=None, g0=None) -> LbfgsResult:
    """One L-BFGS iteration with a strong Wolfe line search.

    ``fg(theta) -> (loss, grad)`` must be deterministic. If the quasi-Newton
    direction is not a descent direction, steepest descent is used. When the
    line search fails the parameters are returned unchanged with ``ok=False``.
    """
    x = np.asarray(params, dtype=float)
    if f0 is None or g0 is None:
        f0, g0 = fg(x)
    if not np.any(g0):
        return LbfgsResult(x, f0, g0, True, 0)
    d = state.direction(g0)
    if not float(g0 @ d) < 0:
        state.s_hist.clear()
        state.y_hist.clear()
        d = -g0
    if not state.s_hist:
        d = d / max(1.0, float(np.linalg.norm(d)))
    t, f, g, evals = _line_search(fg, x, f0, g0, d, state)
    if t is None and state.s_hist:
        state.s_hist.clear()
        state.y_hist.clear()
        d = -g0 / max(1.0, float(np.linalg.norm(g0)))
        t, f, g, more = _line_search(fg, x, f0, g0, d, state)
        evals += more
    if t is None:
        return LbfgsResult(x, f0, g0, False, evals)
    x_new = x + t * d
    state.push(x_new - x, g - g0)
    return LbfgsResult(x_new, f, g, True, evals)


def lbfgs_minimize(fg, params, iters: int, state: LbfgsState | None = None,
                   gtol: float = 0.0) -> LbfgsResult:
    state = state or LbfgsState()
    x = np.asarray(params, dtype=float)
    f, g = fg(x)
    res = LbfgsResult(x, f, g, True, 1)
    for _ in range(iters):
        if np.linalg.norm(g) <= gtol:
            break
        res = lbfgs_step(state, x, fg, f, g)
        if not res.ok:
            break
        x, f, g = res.params, res.loss, res.grad
    return res
