from __future__ import annotations

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmcpinn.sampler import (
    FracOrder,
    JumpDistribution,
    NodeSet,
    cdf_partial,
    draw_nodes,
    jump_prob,
    jump_prob_closed_form,
    sample_jump,
)
from gmcpinn.streams import pseudo_random


class ConstStream:
    """Emits one fixed value; enough to drive ``draw_nodes``."""

    def __init__(self, value):
        self.value = value
        self.cursor = 0

    def take(self, n):
        self.cursor += n
        return np.full(n, self.value)


def mp_prob(alpha, k):
    # |Gamma(a+1) / (k! Gamma(a-k+1))| in arbitrary precision; p_1 = 2 - a for a > 1
    if alpha > 1 and k == 1:
        return mpmath.mpf(2) - alpha
    return abs(mpmath.binomial(alpha, k))


@pytest.mark.parametrize("alpha,k,expected", [(1.5, 1, 0.5), (1.5, 2, 0.375), (0.5, 1, 0.5)])
def test_jump_prob_examples(alpha, k, expected):
    assert jump_prob(alpha, k) == pytest.approx(expected, rel=1e-15)


def test_cdf_examples():
    d = JumpDistribution(1.5)
    assert cdf_partial(d, 0) == 0.0
    assert cdf_partial(d, 2) == pytest.approx(0.875, rel=1e-15)
    assert cdf_partial(d, d.k_cap) == pytest.approx(1 - d.tail_mass, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.2, 1.5, 1.8])
def test_recurrence_matches_gamma_formula(alpha):
    for k in range(1, 21):
        ref = float(mp_prob(mpmath.mpf(alpha), k))
        assert jump_prob(alpha, k) == pytest.approx(ref, rel=1e-12)
        assert jump_prob_closed_form(alpha, k) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.2, 1.5, 1.8])
def test_normalization_at_lazy_kcap(alpha):
    d = JumpDistribution(alpha, k_cap=10**6)
    assert d.cached == 0
    assert abs(d.cdf(d.k_cap) + d.tail_mass - 1.0) < 1e-12
    assert d.cached == 10**6


@pytest.mark.parametrize("alpha", [0.3, 1.7])
def test_tail_mass_against_mpmath(alpha):
    d = JumpDistribution(alpha, k_cap=5000)
    a = mpmath.mpf(alpha)
    partial = mpmath.gamma(5000 + 1 - a) / (mpmath.gamma(1 - a) * mpmath.factorial(5000))
    ref = -partial if alpha > 1 else partial
    assert d.tail_mass == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize("alpha", [0.3, 0.9, 1.1, 1.8])
def test_probs_positive_and_cdf_strictly_increasing(alpha):
    d = JumpDistribution(alpha, k_cap=20000)
    p = d.probs(20000)[1:]
    assert np.all(p > 0)
    d._full()
    assert np.all(np.diff(d._cdf) > 0)


def test_sample_examples():
    d = JumpDistribution(1.5)
    assert sample_jump(d, 0.0) == 1
    assert sample_jump(d, 0.51) == 2
    assert sample_jump(d, 0.9999999999) == d.k_cap


@pytest.mark.parametrize("u", [-0.1, 1.0, 1.5])
def test_sample_rejects_out_of_range(u):
    with pytest.raises(ValueError):
        sample_jump(JumpDistribution(1.5), u)


@settings(max_examples=60, deadline=None)
@given(u=st.floats(0.0, 1.0, exclude_max=True), alpha=st.sampled_from([0.3, 0.5, 1.3, 1.7]))
def test_sample_is_smallest_k_with_cdf_above_u(u, alpha):
    d = JumpDistribution(alpha, k_cap=5000)
    k = sample_jump(d, u)
    if k < d.k_cap:
        assert d.cdf(k) > u
        assert d.cdf(k - 1) <= u
    else:
        assert d.cdf(k - 1) <= u


def test_guide_table_agrees_with_plain_search():
    d = JumpDistribution(1.3, k_cap=10**4)
    u = pseudo_random(3).take(200_000)
    d._full()
    plain = np.minimum(np.searchsorted(d._cdf, u, side="right"), d.k_cap)
    np.testing.assert_array_equal(d.sample(u), plain)


@pytest.mark.parametrize("value", [1.0, 2.0, 0.0, -0.5, 2.5, float("nan")])
def test_frac_order_rejects(value):
    with pytest.raises(ValueError):
        FracOrder(value)


def test_integer_order_message_mentions_pole():
    with pytest.raises(ValueError, match="pole"):
        FracOrder(1.0)


@pytest.mark.parametrize("beta", [1.1, 1.5, 1.9])
def test_riesz_coeff_positive_on_branch_one(beta):
    o = FracOrder(beta)
    assert o.branch == 1
    assert o.riesz_coeff > 0


def test_draw_nodes_hundred_draws():
    d = JumpDistribution(0.5, k_cap=10**4)
    ns = draw_nodes(d, 10, 10, pseudo_random(7))
    assert ns.total == 100
    assert sum(ns.counts) == 100
    assert 5 <= ns.unique <= 40


def test_draw_nodes_single_zero_draw():
    ns = draw_nodes(JumpDistribution(1.5), 1, 1, ConstStream(0.0))
    assert ns.as_dict() == {1: 1}


def test_draw_nodes_advances_stream_exactly():
    s = pseudo_random(1)
    draw_nodes(JumpDistribution(0.7), 13, 7, s)
    assert s.cursor == 91


def test_draw_nodes_rejects_bad_sizes():
    with pytest.raises(ValueError):
        draw_nodes(JumpDistribution(0.7), 0, 3, pseudo_random(0))


def test_law_of_large_numbers_over_seeds():
    d = JumpDistribution(1.5)
    n = 10**5
    band = 3 * np.sqrt(0.5 * 0.5 / n)
    ok = 0
    for seed in range(100):
        y = d.sample(pseudo_random(seed).take(n))
        ok += abs(np.mean(y == 1) - 0.5) <= band
    assert ok >= 99


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), alpha=st.sampled_from([0.4, 1.6]),
       n=st.integers(1, 40), k=st.integers(1, 40))
def test_dedup_is_lossless(seed, alpha, n, k):
    d = JumpDistribution(alpha)
    u = pseudo_random(seed).take(n * k)
    raw = d.sample(u)
    ns = NodeSet.from_draws(raw)
    rng = np.random.default_rng(seed)
    table = rng.standard_normal(d.k_cap + 1)
    f = lambda y: table[np.asarray(y)]  # noqa: E731
    assert ns.total == n * k
    assert ns.weighted_mean(f) == pytest.approx(np.mean(f(raw)), rel=1e-13, abs=1e-15)
