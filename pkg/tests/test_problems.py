from __future__ import annotations

import math

import numpy as np
import pytest

from gmcpinn.estimators import gl_deterministic_oracle
from gmcpinn.geometry import Ball, disk, heart
from gmcpinn.problems import (
    bump_derivative,
    caputo_cos,
    diffusion2d_tsfrac,
    error_report,
    exact_product,
    frac_power_rule,
    fuzzy_boundary_setup,
    get_problem,
    l2_relative_error,
    poisson2d_frac,
)
from oracles import SPOTS_2D, SPOTS_3D, operator_oracle


def test_power_rule_example():
    d = frac_power_rule(0.5, 2)
    assert d(1.0) == pytest.approx(2 / math.gamma(2.5), rel=1e-14)
    with pytest.raises(ValueError):
        frac_power_rule(1.0, 2)
    with pytest.raises(ValueError):
        frac_power_rule(1.5, 0.2)


@pytest.mark.parametrize("p", [0.5, 1.3, 1.7])
def test_power_rule_order_equal_to_power_is_constant(p):
    d = frac_power_rule(p, p)
    np.testing.assert_allclose(d(np.array([0.1, 0.5, 2.0])), math.gamma(p + 1), rtol=1e-12)


def test_l2_spec_examples():
    u = np.linspace(0.1, 1.0, 7)
    assert l2_relative_error(u, 0.9 * u) == pytest.approx(0.1, rel=1e-12)
    assert l2_relative_error([3.0, 4.0], [3.0, 0.0]) == pytest.approx(0.8, rel=1e-12)


def test_l2_examples():
    assert l2_relative_error([1, 2, 2], [1, 2, 2]) == 0
    assert l2_relative_error([3, 4], [0, 0]) == 1
    with pytest.raises(ValueError):
        l2_relative_error([0, 0], [1, 1])
    rep = error_report([1.0, -2.0], [1.5, -2.0])
    assert rep.pointwise.tolist() == [0.25, 0.0]


def test_bump_derivative_vs_oracle():
    f = lambda s: (s * (1 - s)) ** 3  # noqa: E731
    x, g = 0.3, 1.6
    left = gl_deterministic_oracle(f, x, 0.0, "left", g, 10**5)
    right = gl_deterministic_oracle(f, x, 1.0, "right", g, 10**5)
    assert bump_derivative(x, 1 - x, 3, g) == pytest.approx(left + right, rel=1e-3)


def test_caputo_cos_zero_and_small_t():
    assert caputo_cos(np.array([0.0]), 0.3)[0] == 0.0
    t = 1e-3
    assert caputo_cos(np.array([t]), 0.3)[0] == pytest.approx(-t**1.7 / math.gamma(2.7), rel=1e-5)


@pytest.mark.parametrize("factory,t", [(poisson2d_frac, None), (diffusion2d_tsfrac, 0.7)])
def test_forcing_matches_operator_oracle_2d(factory, t):
    p = factory()
    for x in SPOTS_2D:
        b = p.domain.axis_bounds_many(x[None])
        f = p.forcing(x[None], np.array([t if t is not None else 0.0]), b)[0]
        ref = operator_oracle(p, x, t)
        assert f == pytest.approx(ref, rel=1e-2)


def test_forcing_matches_operator_oracle_3d():
    p = get_problem("bloch_torrey3d")
    for x in SPOTS_3D:
        f = p.forcing(x[None], np.array([0.8]))[0]
        assert f == pytest.approx(operator_oracle(p, x, 0.8), rel=1e-2)


def test_bloch_torrey_center_matches_oracle_and_exact_vanishes_on_sphere():
    p = get_problem("bloch_torrey3d")
    x = np.zeros(3)
    f = p.forcing(x[None], np.array([1.0]))[0]
    assert np.isfinite(f)
    assert f == pytest.approx(operator_oracle(p, x, 1.0), rel=1e-2)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((20, 3))
    on = 0.5 * v / np.linalg.norm(v, axis=1, keepdims=True)
    assert np.max(np.abs(p.exact(on, np.ones(20)))) < 1e-14


def test_exact_zero_on_boundary_and_positive_inside():
    p = poisson2d_frac()
    x = np.array([[0.999999, 0.0], [0.0, 0.0]])
    b = p.domain.axis_bounds_many(x)
    u = exact_product(x, b)
    assert u[0] < 1e-12 and u[1] == pytest.approx(1.0)


def test_problem_rejects_pole_order():
    with pytest.raises(ValueError, match="cos"):
        poisson2d_frac(beta=1.0)


def test_heart_problem_builds_and_is_finite():
    p = poisson2d_frac(domain=heart())
    x = p.domain.sample_interior(5, 0)
    f = p.forcing(x, np.zeros(5), p.domain.axis_bounds_many(x))
    assert np.all(np.isfinite(f))


def test_validation_points():
    x, t = diffusion2d_tsfrac().validation_points()
    assert np.all(t == 1.0) and np.all(disk().inside(x))
    x3, _ = get_problem("bloch_torrey3d").validation_points()
    assert np.all(Ball((0.0, 0.0, 0.0), 0.5).inside(x3))


def test_fuzzy_setup_geometry():
    s = fuzzy_boundary_setup(n_equ=50, n_bound=40, n_ini=30, rng=2)
    assert np.all(np.linalg.norm(s.x_equ, axis=1) < 0.5)
    np.testing.assert_allclose(np.linalg.norm(s.x_bound, axis=1), 0.6)
    assert np.all((s.t_equ > 0) & (s.t_equ <= 1))
    assert s.problem.domain.radius == 0.6
    with pytest.raises(ValueError):
        fuzzy_boundary_setup(0.5, 0.4)
