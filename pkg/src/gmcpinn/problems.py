"""Benchmark fractional PDEs: exact solutions, forcing terms, error metrics.

All problems share one operator shape::

    L u = K_t * D_t^alpha u + sum_a K_a * (D_left^g_a u + D_right^g_a u) / (2 cos(pi g_a / 2))

with a Caputo time derivative from ``t = 0`` (absent when ``K_t = 0``) and
left/right Riemann-Liouville derivatives of order ``g_a`` in (1, 2) along each
spatial axis, anchored at the points where the axis line through ``x`` leaves
the domain. The forcing is ``f = L u_exact``.

Exact solutions are products of "bumps" ``(x_a - lb_a)(ub_a - x_a)``. On a
ball that product equals ``R**2 - |x - c|**2`` for every axis, so along an
axis line the solution is ``((x - lb)(ub - x))**m`` and its one-sided
derivatives have the closed form in :func:`bump_derivative`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import binom, gamma, gammaln

from .geometry import Ball, Domain, make_domain

__all__ = [
    "ErrorReport",
    "FuzzySetup",
    "ProblemSpec",
    "bump_derivative",
    "caputo_cos",
    "error_report",
    "exact_product",
    "forcing_4_1",
    "forcing_4_2",
    "forcing_4_3",
    "frac_power_rule",
    "fuzzy_boundary_setup",
    "get_problem",
    "l2_relative_error",
    "PROBLEMS",
]


def _check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0 or alpha == round(alpha):
        raise ValueError(f"order must be positive and non-integer, got {alpha}")
    return alpha


def frac_power_rule(alpha: float, p: float, base_shift: float = 0.0,
                    side: str = "left") -> Callable:
    """``D^a (x - a)^p = Gamma(p+1) / Gamma(p+1-a) (x - a)^(p-a)``.

    For ``side="right"`` the function is ``(a - x)^p`` with ``a`` the upper
    anchor. Gamma comes from :func:`scipy.special.gamma`.
    """
    alpha = _check_order(alpha)
    if not p > alpha - 1:
        raise ValueError(f"power rule needs p > alpha - 1 (p={p}, alpha={alpha})")
    z = p + 1 - alpha
    if z <= 0 and z == round(z):
        raise ValueError(f"Gamma pole at p + 1 - alpha = {z}")
    coeff = gamma(p + 1) / gamma(z)
    sign = 1.0 if side == "left" else -1.0

    def deriv(x):
        d = sign * (np.asarray(x, dtype=float) - base_shift)
        return coeff * d ** (p - alpha)
    return deriv


def bump_derivative(p, q, m: int, order: float) -> np.ndarray:
    """Left plus right RL derivative of ``(p q)^m`` along a line, where
    ``p = x - lb`` and ``q = ub - x``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    span = p + q
    out = np.zeros(np.broadcast(p, q).shape)
    for j in range(m + 1):
        e = m + j
        c = binom(m, j) * (-1) ** j * gamma(e + 1) / gamma(e + 1 - order)
        out += c * span ** (m - j) * (p ** (e - order) + q ** (e - order))
    return out


def _riesz_factor(order: float) -> float:
    return 1.0 / (2.0 * math.cos(math.pi * order / 2.0))


def _pq(bounds: np.ndarray, x: np.ndarray):
    """``p = x - lb``, ``q = ub - x`` per point and axis."""
    return x - bounds[..., 0], bounds[..., 1] - x


def exact_product(x, bounds, power: int = 3) -> np.ndarray:
    """``prod_a ((x_a - lb_a)(ub_a - x_a))^power``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p, q = _pq(np.asarray(bounds, dtype=float).reshape(x.shape + (2,)), x)
    return np.prod((p * q) ** power, axis=1)


def caputo_cos(t, alpha: float, terms: int = 40) -> np.ndarray:
    """Caputo derivative from 0 of ``cos t``:
    ``sum_{j>=1} (-1)^j t^(2j - alpha) / Gamma(2j + 1 - alpha)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    lt = np.log(t[pos])
    for j in range(1, terms + 1):
        out[pos] += (-1) ** j * np.exp((2 * j - alpha) * lt - gammaln(2 * j + 1 - alpha))
    return out


def _stack_bounds(bounds) -> np.ndarray:
    """Accept ``(n, dim, 2)`` arrays or a sequence of per-axis AxisBounds."""
    if isinstance(bounds, np.ndarray):
        return bounds.astype(float)
    return np.array([[b.lb, b.ub] for b in bounds], dtype=float)[None]


def _space_forcing(x, bounds, orders, coeffs, separable: bool) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p, q = _pq(bounds, x)
    out = np.zeros(len(x))
    for a, (g, k) in enumerate(zip(orders, coeffs)):
        if separable:
            others = np.prod(np.delete((p * q) ** 3, a, axis=1), axis=1)
            term = bump_derivative(p[:, a], q[:, a], 3, g) * others
        else:
            term = bump_derivative(p[:, a], q[:, a], 3 * x.shape[1], g)
        out += k * _riesz_factor(g) * term
    return out


def forcing_4_1(x, y, bounds, alpha: float, beta: float, *, separable: bool = False):
    """Space-fractional Poisson forcing for ``u = prod (p_a q_a)^3``.

    ``bounds`` is ``(n, 2, 2)`` or a pair of AxisBounds. By default the
    solution is taken to be a ball bump (exact for disks). ``separable=True``
    treats the other axis' factor as constant along each line, which is the
    closed form usable on other domains but only approximate there.
    """
    pts = np.column_stack([np.atleast_1d(x), np.atleast_1d(y)]).astype(float)
    b = _stack_bounds(bounds)
    return _space_forcing(pts, np.broadcast_to(b, pts.shape + (2,)),
                          (alpha, beta), (1.0, 1.0), separable)


def forcing_4_2(x, y, t, bounds, alpha: float, beta1: float, beta2: float,
                *, k1: float = 1.0, k2: float = 1.0, separable: bool = False):
    """Time-space fractional diffusion forcing for ``u = prod (p_a q_a)^3 cos t``."""
    pts = np.column_stack([np.atleast_1d(x), np.atleast_1d(y)]).astype(float)
    b = np.broadcast_to(_stack_bounds(bounds), pts.shape + (2,))
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(pts),))
    space = exact_product(pts, b)
    return (space * caputo_cos(t, alpha)
            + np.cos(t) * _space_forcing(pts, b, (beta1, beta2), (k1, k2), separable))


def forcing_4_3(x, y, z, t, alpha: float, beta: float, r: float = 0.5,
                *, k_alpha: float = 1.0, k_beta: float = 1.0) -> np.ndarray:
    """Bloch-Torrey forcing on the ball of radius ``r`` centered at 0.

    Spatial derivatives have order ``2 beta``; ``u = 16 t^2 (|x|^2 - r^2)^2``.
    """
    pts = np.column_stack([np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(z)]).astype(float)
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(pts),))
    sq = np.sum(pts**2, axis=1)
    if np.any(sq >= r * r):
        raise ValueError("forcing_4_3 needs points strictly inside the ball")
    g = 2.0 * beta
    out = 32.0 * k_alpha * t ** (2 - alpha) / gamma(3 - alpha) * (sq - r * r) ** 2
    for a in range(3):
        s = np.sqrt(r * r - (sq - pts[:, a] ** 2))
        p, q = pts[:, a] + s, s - pts[:, a]
        # h(x, s) = 16 K_beta t^2 / (2 cos(pi beta)) * bump derivative of (p q)^2
        out += 16.0 * k_beta * t**2 * _riesz_factor(g) * bump_derivative(p, q, 2, g)
    return out


@dataclass
class ProblemSpec:
    """A benchmark problem.

    Callbacks take points ``x`` of shape ``(n, dim)``, times ``t`` of shape
    ``(n,)`` and per-axis bounds of shape ``(n, dim, 2)``.
    """

    name: str
    dim: int
    space_orders: tuple
    space_coeffs: tuple
    exact: Callable
    forcing: Callable
    time_order: float | None = None
    time_coeff: float = 0.0
    T: float = 1.0
    domain: Domain | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for g in self.space_orders:
            if not 1 < g < 2:
                if g == 1.0:
                    raise ValueError("spatial order 1.0 is invalid: cos(pi * order / 2) = 0 "
                                     "is a pole of the Riesz coefficient")
                raise ValueError(f"spatial orders must lie in (1, 2), got {g}")
        if self.time_order is not None and not 0 < self.time_order < 1:
            raise ValueError(f"time order must lie in (0, 1), got {self.time_order}")
        if len(self.space_orders) != self.dim or len(self.space_coeffs) != self.dim:
            raise ValueError("one order and one coefficient per spatial axis")

    @property
    def time_dependent(self) -> bool:
        return self.time_order is not None

    def boundary(self, x, t=None) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(x)))

    def initial(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return self.exact(x, np.zeros(len(x)), self.domain.axis_bounds_many(x))

    def exact_at(self, x, t=None) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = np.zeros(len(x)) if t is None else np.broadcast_to(t, (len(x),))
        return self.exact(x, t, self.domain.axis_bounds_many(x))

    def validation_points(self, per_axis: int | None = None):
        """Grid inside the domain; time-dependent problems use ``t = T``."""
        per_axis = per_axis or (41 if self.dim == 2 else 17)
        x = self.domain.validation_grid(per_axis)
        t = np.full(len(x), self.T) if self.time_dependent else None
        return x, t


def _is_ball(domain: Domain) -> bool:
    return isinstance(domain, Ball)


def poisson2d_frac(alpha: float = 1.7, beta: float = 1.5, domain: Domain | None = None,
                   **_) -> ProblemSpec:
    domain = domain or make_domain("disk")
    separable = not _is_ball(domain)

    def exact(x, t, b):
        return exact_product(x, b)

    def forcing(x, t, b):
        return _space_forcing(x, b, (alpha, beta), (1.0, 1.0), separable)

    return ProblemSpec("poisson2d_frac", 2, (alpha, beta), (1.0, 1.0), exact, forcing,
                       domain=domain, params={"alpha": alpha, "beta": beta})


def diffusion2d_tsfrac(alpha: float = 0.3, beta1: float = 1.7, beta2: float = 1.5,
                       k1: float = 1.0, k2: float = 1.0, T: float = 1.0,
                       domain: Domain | None = None, **_) -> ProblemSpec:
    domain = domain or make_domain("disk")
    separable = not _is_ball(domain)

    def exact(x, t, b):
        return exact_product(x, b) * np.cos(t)

    def forcing(x, t, b):
        return (exact_product(x, b) * caputo_cos(t, alpha)
                + np.cos(t) * _space_forcing(x, b, (beta1, beta2), (k1, k2), separable))

    return ProblemSpec("diffusion2d_tsfrac", 2, (beta1, beta2), (k1, k2), exact, forcing,
                       time_order=alpha, time_coeff=1.0, T=T, domain=domain,
                       params={"alpha": alpha, "beta1": beta1, "beta2": beta2})


def bloch_torrey3d(alpha: float = 0.9, beta: float = 0.95, r: float = 0.5,
                   k_alpha: float = 1.0, k_beta: float = 1.0, T: float = 1.0,
                   domain: Domain | None = None, **_) -> ProblemSpec:
    """Order of the spatial derivatives is ``2 beta``."""
    domain = domain or Ball((0.0, 0.0, 0.0), r)

    def exact(x, t, b=None):
        return 16.0 * t**2 * (np.sum(np.atleast_2d(x) ** 2, axis=1) - r * r) ** 2

    def forcing(x, t, b=None):
        x = np.atleast_2d(x)
        return forcing_4_3(x[:, 0], x[:, 1], x[:, 2], t, alpha, beta, r,
                           k_alpha=k_alpha, k_beta=k_beta)

    g = 2.0 * beta
    # moving the Riesz term to the left flips its sign relative to the printed
    # equation, which makes all coefficients positive here
    return ProblemSpec("bloch_torrey3d", 3, (g, g, g), (k_beta,) * 3, exact, forcing,
                       time_order=alpha, time_coeff=k_alpha, T=T, domain=domain,
                       params={"alpha": alpha, "beta": beta, "r": r})


PROBLEMS = {
    "poisson2d_frac": poisson2d_frac,
    "diffusion2d_tsfrac": diffusion2d_tsfrac,
    "bloch_torrey3d": bloch_torrey3d,
}


def get_problem(name: str, **params) -> ProblemSpec:
    if name == "fuzzy_boundary":
        name = "bloch_torrey3d"
    try:
        return PROBLEMS[name](**params)
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from "
                         f"{sorted(PROBLEMS) + ['fuzzy_boundary']}") from None


def l2_relative_error(exact, predicted) -> float:
    """``sqrt(sum (u - u_hat)^2 / sum u^2)``."""
    u = np.asarray(exact, dtype=float).ravel()
    v = np.asarray(predicted, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError("exact and predicted must have equal length")
    denom = float(np.sum(u * u))
    if denom == 0.0:
        raise ValueError("exact values are all zero")
    return math.sqrt(float(np.sum((u - v) ** 2)) / denom)


@dataclass
class ErrorReport:
    """Validation error on a grid.

    ``pointwise`` holds ``|u - u_hat| / max|u|``: dividing by the local value
    would blow up near the boundary, where every exact solution vanishes.
    """

    l2_relative: float
    pointwise: np.ndarray
    grid: str

    def as_row(self) -> dict:
        return {"l2_relative": self.l2_relative,
                "max_pointwise": float(np.max(self.pointwise)),
                "mean_pointwise": float(np.mean(self.pointwise)),
                "grid": self.grid}


def error_report(exact, predicted, grid: str = "") -> ErrorReport:
    u = np.asarray(exact, dtype=float).ravel()
    v = np.asarray(predicted, dtype=float).ravel()
    return ErrorReport(l2_relative_error(u, v), np.abs(u - v) / np.max(np.abs(u)), grid)


@dataclass
class FuzzySetup:
    """Training data for the mis-measured boundary experiment."""

    problem: ProblemSpec
    true_domain: Ball
    measured_domain: Ball
    x_equ: np.ndarray
    t_equ: np.ndarray
    x_bound: np.ndarray
    t_bound: np.ndarray
    x_ini: np.ndarray
    x_val: np.ndarray
    t_val: np.ndarray


def fuzzy_boundary_setup(true_r: float = 0.5, measured_r: float = 0.6, *,
                         n_equ: int = 1000, n_bound: int = 400, n_ini: int = 400,
                         alpha: float = 0.9, beta: float = 0.95, T: float = 1.0,
                         rng=0, grid_per_axis: int = 17) -> FuzzySetup:
    """Residual points inside the true ball, zero boundary data on the measured
    sphere, validation on the true ball.

    The returned problem's ``domain`` is the measured ball: that is where the
    solver believes the boundary is, so it supplies the operator bounds. The
    forcing and the exact solution belong to the true ball.
    """
    if not measured_r > true_r:
        raise ValueError("measured radius must exceed the true radius")
    rng = np.random.default_rng(rng)
    true = Ball((0.0, 0.0, 0.0), true_r)
    measured = Ball((0.0, 0.0, 0.0), measured_r)
    problem = bloch_torrey3d(alpha, beta, true_r, T=T, domain=measured)
    problem.name = "fuzzy_boundary"
    problem.params.update(measured_r=measured_r)
    x_val = true.validation_grid(grid_per_axis)
    return FuzzySetup(
        problem, true, measured,
        x_equ=true.sample_interior(n_equ, rng),
        t_equ=T * (1.0 - rng.random(n_equ)),
        x_bound=measured.sample_boundary(n_bound, rng),
        t_bound=rng.uniform(0.0, T, n_bound),
        x_ini=measured.sample_interior(n_ini, rng),
        x_val=x_val,
        t_val=np.full(len(x_val), T),
    )
