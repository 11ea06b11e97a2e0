"""Independent reference computations shared by the test modules."""

from __future__ import annotations

import math

import numpy as np

from gmcpinn.estimators import gl_deterministic_oracle

SPOTS_2D = np.array([[0.1, 0.2], [-0.3, 0.4], [0.5, -0.1], [-0.2, -0.6], [0.0, 0.0]])
SPOTS_3D = np.array([[0.1, 0.2, 0.0], [-0.15, 0.1, 0.2], [0.2, -0.2, -0.1], [0.0, 0.0, 0.3],
                     [0.05, 0.05, 0.05]])


def solution_on(problem, pts, t):
    """Exact solution extended by zero outside the open domain."""
    out = np.zeros(len(pts))
    ok = problem.domain.inside(pts)
    if np.any(ok):
        out[ok] = problem.exact(pts[ok], t[ok], problem.domain.axis_bounds_many(pts[ok]))
    return out


def operator_oracle(problem, x, t=None, n_big=10**5):
    """Deterministic truncated GL operator applied to the exact solution."""
    x = np.asarray(x, dtype=float)
    b = problem.domain.axis_bounds_many(x[None])[0]
    tt = 0.0 if t is None else t
    out = 0.0
    for a, (g, k) in enumerate(zip(problem.space_orders, problem.space_coeffs)):
        def line(s, a=a):
            pts = np.repeat(x[None], len(s), 0)
            pts[:, a] = s
            return solution_on(problem, pts, np.full(len(s), tt))
        both = (gl_deterministic_oracle(line, x[a], b[a, 0], "left", g, n_big)
                + gl_deterministic_oracle(line, x[a], b[a, 1], "right", g, n_big))
        out += k * both / (2 * math.cos(math.pi * g / 2))
    if problem.time_dependent:
        def path(s):
            return solution_on(problem, np.repeat(x[None], len(s), 0), s)
        u0 = float(path(np.zeros(1))[0])
        out += problem.time_coeff * gl_deterministic_oracle(path, tt, 0.0, "left",
                                                            problem.time_order, n_big, shift=u0)
    return out
