from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmcpinn.geometry import (
    Ball,
    DomainError,
    bisect_axis_bounds,
    disk,
    heart,
    make_domain,
)


def test_disk_axis_bounds_example():
    b = disk().axis_bounds((0.6, 0.0), 0)
    assert (b.lb, b.ub) == pytest.approx((-1.0, 1.0))
    b = disk().axis_bounds((0.6, 0.0), 1)
    assert (b.lb, b.ub) == pytest.approx((-0.8, 0.8))


def test_ball_3d_bounds():
    ball = Ball((0.0, 0.0, 0.0), 0.5)
    b = ball.axis_bounds((0.3, 0.0, 0.0), 2)
    assert (b.lb, b.ub) == pytest.approx((-0.4, 0.4))


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.0, 0.95), th=st.floats(0, 2 * np.pi), axis=st.integers(0, 1))
def test_bisection_matches_analytic(r, th, axis):
    d = disk()
    p = np.array([r * np.cos(th), r * np.sin(th)])
    exact = d.axis_bounds(p, axis)
    approx = bisect_axis_bounds(d, p, axis)
    assert approx.lb == pytest.approx(exact.lb, abs=1e-6)
    assert approx.ub == pytest.approx(exact.ub, abs=1e-6)


def test_bounds_rejected_outside():
    with pytest.raises(DomainError):
        disk().axis_bounds((1.2, 0.0), 0)
    with pytest.raises(DomainError):
        disk().axis_bounds_many([[0.0, 1.0]])


def test_interior_samples_inside_and_seeded():
    d = disk()
    a = d.sample_interior(500, 3)
    b = d.sample_interior(500, 3)
    assert a.shape == (500, 2)
    assert np.all(np.sum(a**2, axis=1) < 1)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("dom", [disk(), Ball((0.0, 0.0, 0.0), 0.5), heart()])
def test_interior_margin(dom):
    pts = dom.sample_interior(300, 1, margin=0.05)
    assert pts.shape[0] == 300
    assert np.all(dom.signed_distance(pts) < -0.05)
    with pytest.raises(ValueError):
        dom.sample_interior(3, 1, margin=-1.0)


@pytest.mark.parametrize("dom", [disk(), Ball((0.0, 0.0, 0.0), 0.5)])
def test_boundary_samples_on_sphere(dom):
    pts = dom.sample_boundary(200, 0)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), dom.radius, rtol=1e-12)


def test_heart_radial_rule_and_bounds_bracket_point():
    h = heart()
    # the literal curve crosses itself; the radial rule still gives one region
    assert h.inside([[0.0, -2.0], [0.5, 3.0]]).all()
    assert not h.inside([[0.0, 5.0], [1.7, 0.0]]).any()
    for axis in (0, 1):
        b = h.axis_bounds((0.0, -2.0), axis)
        assert b.lb < (0.0, -2.0)[axis] < b.ub
        for v in (b.lb, b.ub):
            q = np.array([0.0, -2.0])
            q[axis] = v
            assert abs(h.signed_distance(q[None])[0]) < 1e-6


def test_evenodd_rule_on_simple_curve():
    from gmcpinn.geometry import CurveDomain
    c = CurveDomain(lambda t: (2 * np.cos(t), np.sin(t)))
    assert c.inside([[1.9, 0.0], [0.0, 0.9]]).all()
    assert not c.inside([[2.1, 0.0]]).any()
    b = c.axis_bounds((0.0, 0.0), 0)
    assert (b.lb, b.ub) == pytest.approx((-2.0, 2.0), abs=1e-5)


def test_heart_boundary_samples_are_on_curve():
    h = heart()
    pts = h.sample_boundary(100, 1)
    assert np.max(np.abs(h.signed_distance(pts))) < 1e-9


def test_validation_grid_inside():
    g = disk().validation_grid(41)
    assert np.all(disk().inside(g))
    assert 1000 < len(g) < 41 * 41


def test_make_domain():
    assert make_domain("ball").radius == 0.5
    assert make_domain("disk").dim == 2
    with pytest.raises(DomainError):
        make_domain("torus")
