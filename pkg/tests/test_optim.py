from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmcpinn.optim import AdamState, LbfgsState, NonFiniteGradient, adam_step, lbfgs_minimize, lbfgs_step


def test_adam_first_step_is_lr_sign():
    st_ = AdamState(1, lr=1e-3)
    out = adam_step(st_, np.array([2.0]), np.array([-7.0]))
    assert out[0] - 2.0 == pytest.approx(1e-3, rel=1e-6)


def test_adam_zero_gradient_noop():
    p = np.array([1.0, -2.0])
    np.testing.assert_array_equal(adam_step(AdamState(2), p, np.zeros(2)), p)


def test_adam_rejects_nan():
    with pytest.raises(NonFiniteGradient):
        adam_step(AdamState(2), np.zeros(2), np.array([np.nan, 0.0]))


def test_adam_quadratic_decreases_after_warmup():
    a = np.array([1.0, 10.0])
    x = np.array([0.3, -0.2])
    s = AdamState(2, lr=1e-3)
    losses = []
    for _ in range(500):
        losses.append(float(np.sum(a * x * x)))
        x = adam_step(s, x, 2 * a * x)
    assert np.all(np.diff(losses[20:]) < 0)


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
def test_adam_sign_pattern_scale_invariant(scale, seed):
    g = np.random.default_rng(seed).standard_normal(6)
    p = np.zeros(6)
    a = adam_step(AdamState(6, eps=1e-12), p, g)
    b = adam_step(AdamState(6, eps=1e-12), p, scale * g)
    np.testing.assert_array_equal(np.sign(a), np.sign(b))


def quad(x):
    a = np.array([[3.0, 1.0], [1.0, 2.0]])
    b = np.array([1.0, -1.0])
    return 0.5 * x @ a @ x - b @ x, a @ x - b


def test_lbfgs_quadratic():
    res = lbfgs_minimize(quad, np.array([5.0, 5.0]), 20, gtol=1e-12)
    xstar = np.linalg.solve([[3.0, 1.0], [1.0, 2.0]], [1.0, -1.0])
    np.testing.assert_allclose(res.params, xstar, atol=1e-8)


def rosen(x):
    f = (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    g = np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)])
    return f, g


def test_lbfgs_rosenbrock():
    res = lbfgs_minimize(rosen, np.array([-1.2, 1.0]), 200, gtol=1e-10)
    assert res.loss < 1e-6


def test_lbfgs_zero_gradient_noop():
    res = lbfgs_step(LbfgsState(), np.zeros(2), lambda x: (float(x @ x), 2 * x))
    assert res.ok and np.all(res.params == 0)


def test_lbfgs_accepted_steps_satisfy_armijo():
    state = LbfgsState()
    x = np.array([-1.2, 1.0])
    f, g = rosen(x)
    for _ in range(60):
        res = lbfgs_step(state, x, rosen, f, g)
        assert res.ok
        step = res.params - x
        assert res.loss <= f + state.c1 * float(g @ step) + 1e-15
        x, f, g = res.params, res.loss, res.grad


def test_lbfgs_history_bounded_and_curvature_positive():
    state = LbfgsState(m=3)
    lbfgs_minimize(rosen, np.array([-1.2, 1.0]), 30, state)
    assert len(state.s_hist) <= 3
    assert all(float(s @ y) > 0 for s, y in zip(state.s_hist, state.y_hist))


def test_lbfgs_failed_search_flags():
    # the callback lies about the gradient, so no step can satisfy Armijo
    res = lbfgs_step(LbfgsState(max_ls=5), np.array([1.0]),
                     lambda x: (float(x @ x), -np.ones(1)))
    assert not res.ok
    assert res.params[0] == 1.0
