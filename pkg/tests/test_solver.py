from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmcpinn.autodiff import xavier_init
from gmcpinn.estimators import Extension
from gmcpinn.problems import bloch_torrey3d, diffusion2d_tsfrac, poisson2d_frac
from gmcpinn.solver import (
    DataSampler,
    Dataset,
    LossWeights,
    NodePolicy,
    TrainConfig,
    TrainingAborted,
    assemble_residual,
    build_eval_batch,
    build_terms,
    draw_term_nodes,
    evaluate_loss,
    loss_and_grad,
    naive_residuals,
    resample_nodes,
    train,
)
from gmcpinn.streams import halton, pseudo_random


def setup(problem, n=12, N=9, K=5, seed=0, stream=None):
    data = DataSampler(problem, n, 10, 8)(seed)
    terms = build_terms(problem, N, K)
    stream = stream or pseudo_random(seed + 1)
    return data, terms, stream


@pytest.mark.parametrize("factory", [poisson2d_frac, diffusion2d_tsfrac, bloch_torrey3d])
def test_batch_equals_naive_per_node_evaluation(factory):
    p = factory()
    data, terms, stream = setup(p)
    net = xavier_init([data.inputs(data.x_equ, data.t_equ).shape[1], 10, 10, 1], 3)
    fn = lambda X: net(X)[:, 0]  # noqa: E731
    ref = naive_residuals(fn, data, terms, stream.copy())
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, len(data.x_equ), stream))
    got = assemble_residual(batch, fn)
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12 * np.max(np.abs(ref)))
    mse_naive = float(np.mean(ref**2))
    assert evaluate_loss(net, batch, LossWeights(1, 0, 0)).mse_E == pytest.approx(mse_naive, rel=1e-12)


def test_exact_solution_residual_small_at_dense_lattice():
    p = poisson2d_frac()
    data, terms, stream = setup(p, n=40, N=400, K=400, stream=halton(2))
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, 40, stream))
    exact = lambda X: p.exact_at(X)  # noqa: E731
    u = np.zeros(len(batch.X))
    inside = p.domain.inside(batch.X)
    u[inside] = exact(batch.X[inside])
    r = assemble_residual(batch, u)
    assert np.linalg.norm(r) < 0.1 * np.linalg.norm(batch.f)


def test_zero_field_and_zero_forcing_give_zero_residual():
    p = poisson2d_frac()
    data, terms, stream = setup(p)
    data.f[:] = 0
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, len(data.x_equ), stream))
    assert np.all(assemble_residual(batch, np.zeros(len(batch.X))) == 0)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-4, 4), seed=st.integers(0, 10**6))
def test_residual_linearity(a, seed):
    p = diffusion2d_tsfrac()
    data, terms, stream = setup(p, n=5, seed=seed % 100)
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, 5, stream))
    u = np.random.default_rng(seed).standard_normal(len(batch.X))
    lhs = assemble_residual(batch, a * u) - a * assemble_residual(batch, u)
    # r(u) = L u - f, so r(a u) - a r(u) = (a - 1) f
    np.testing.assert_allclose(lhs, (a - 1) * batch.f, rtol=1e-9, atol=1e-9)


def test_loss_breakdown_total_and_boundary_interpolation():
    p = diffusion2d_tsfrac()
    data, terms, stream = setup(p)
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, len(data.x_equ), stream))
    net = xavier_init([3, 6, 1], 0)
    w = LossWeights(0.5, 2.0, 3.0)
    br, _ = loss_and_grad(net, batch, w)
    assert br.total == pytest.approx(0.5 * br.mse_E + 2 * br.mse_I + 3 * br.mse_B, rel=1e-14)
    assert min(br.mse_E, br.mse_I, br.mse_B) >= 0
    # zero net with zero boundary data: mse_B vanishes, and so does total when only w_B counts
    net.set_flat(np.zeros(net.n_params))
    br0 = evaluate_loss(net, batch, LossWeights(0, 0, 1))
    assert br0.mse_B == 0 and br0.total == 0


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(0, 0, 0)
    with pytest.raises(ValueError):
        LossWeights(-1, 1, 1)


def test_dataset_requires_points():
    with pytest.raises(ValueError):
        Dataset(np.zeros((0, 2)), np.zeros((0, 2, 2)), np.zeros(0), np.zeros((1, 2)), np.zeros(1))
    with pytest.raises(ValueError):
        Dataset(np.zeros((1, 2)), np.zeros((1, 2, 2)), np.zeros(1), np.zeros((1, 2)), np.zeros(1),
                t_equ=np.ones(1))


def test_mse_invariant_to_point_order():
    p = diffusion2d_tsfrac()
    data, terms, stream = setup(p)
    nodes = draw_term_nodes(terms, len(data.x_equ), stream)
    net = xavier_init([3, 8, 1], 1)
    base = evaluate_loss(net, build_eval_batch(data, terms, nodes), LossWeights())
    rng = np.random.default_rng(0)
    pe, pb, pi = (rng.permutation(len(a)) for a in (data.x_equ, data.x_bnd, data.x_ini))
    perm_nodes = type(nodes)([c[pe] for c in nodes.counts], nodes.clamped)
    shuffled = evaluate_loss(net, build_eval_batch(data.permuted(pe, pb, pi), terms, perm_nodes),
                             LossWeights())
    for k in ("mse_E", "mse_I", "mse_B", "total"):
        assert getattr(shuffled, k) == pytest.approx(getattr(base, k), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_compression_100_draws(alpha):
    from gmcpinn.estimators import EstimatorConfig, lattice_counts
    from gmcpinn.sampler import default_k_cap, jump_distribution
    cfg = EstimatorConfig(10, 10, alpha)
    dist = jump_distribution(alpha, default_k_cap(10))
    uniq = []
    for seed in range(20):
        jumps = dist.sample(pseudo_random(seed).take(100))
        uniq.append(len(np.unique(jumps)))
        counts = lattice_counts(jumps[None], cfg.N)
        assert counts.sum() == 100
    assert max(uniq) <= 30


def test_unique_to_raw_ratio_non_increasing():
    p = poisson2d_frac()
    data = DataSampler(p, 50, 5, 5)(0)
    ratios = []
    for n in (8, 16, 32, 64, 128):
        terms = build_terms(p, n, n)
        b = build_eval_batch(data, terms, draw_term_nodes(terms, 50, halton(2)))
        assert b.unique <= b.raw_nodes
        ratios.append(b.unique / b.raw_nodes)
    assert all(b <= a for a, b in zip(ratios, ratios[1:]))


def test_node_draw_independent_of_workers():
    p = bloch_torrey3d()
    terms = build_terms(p, 6, 4)
    a = draw_term_nodes(terms, 7, pseudo_random(4), workers=1)
    b = draw_term_nodes(terms, 7, pseudo_random(4), workers=4)
    for x, y in zip(a.counts, b.counts):
        np.testing.assert_array_equal(x, y)


@pytest.mark.parametrize("every,T", [(1, 7), (3, 10), (4, 8), (5, 1)])
def test_policy_redraw_count(every, T):
    terms = build_terms(poisson2d_frac(), 4, 4)
    cur, n = None, 0
    for it in range(T):
        cur, fresh = resample_nodes(terms, 3, pseudo_random(it), NodePolicy(every), it, cur)
        n += fresh
    assert n == math.ceil(T / every)


def test_fixed_policy_keeps_nodes_and_pseudo_redraw_changes_them():
    terms = build_terms(poisson2d_frac(), 8, 8)
    s = pseudo_random(0)
    first, _ = resample_nodes(terms, 3, s, NodePolicy.fixed(), 0, None)
    same, fresh = resample_nodes(terms, 3, s, NodePolicy.fixed(), 5, first)
    assert same is first and not fresh
    other, fresh = resample_nodes(terms, 3, s, NodePolicy(1), 1, first)
    assert fresh and any(not np.array_equal(a, b) for a, b in zip(first.counts, other.counts))


def test_gradient_check_full_loss():
    p = diffusion2d_tsfrac()
    data, terms, stream = setup(p, n=8, N=6, K=3)
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, 8, stream))
    net = xavier_init([3, 10, 10, 1], 7)
    _, g = loss_and_grad(net, batch, LossWeights())
    theta = net.get_flat()
    rng = np.random.default_rng(1)
    for i in rng.choice(theta.size, 20, replace=False):
        vals = []
        for s in (1, -1):
            th = theta.copy()
            th[i] += s * 1e-6
            net.set_flat(th)
            vals.append(evaluate_loss(net, batch, LossWeights()).total)
        fd = (vals[0] - vals[1]) / 2e-6
        assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-8)
    net.set_flat(theta)


def test_zero_iterations_returns_initial_net():
    cfg = TrainConfig(iterations=0, hidden_layers=1, width=4, n_equ=5, n_bnd=5, N=4, K=4)
    res = train(poisson2d_frac(), cfg)
    assert len(res.history) == 0
    assert res.validation_l2 == res.initial_l2


def test_nan_abort_writes_checkpoint(tmp_path):
    p = poisson2d_frac()
    p.forcing = lambda x, t, b: np.full(len(x), np.nan)
    cfg = TrainConfig(iterations=3, hidden_layers=1, width=4, n_equ=5, n_bnd=5, N=4, K=4)
    with pytest.raises(TrainingAborted) as err:
        train(p, cfg, checkpoint_dir=tmp_path)
    assert err.value.checkpoint is not None and err.value.checkpoint.exists()


def test_short_training_is_deterministic_and_decreases_loss():
    cfg = TrainConfig(iterations=40, lbfgs_iterations=10, hidden_layers=2, width=8, n_equ=20,
                      n_bnd=10, N=6, K=6, validate_every=10, lr=3e-3)
    a = train(poisson2d_frac(), cfg)
    b = train(poisson2d_frac(), cfg)
    assert a.history.total == b.history.total
    assert a.history.total[-1] < a.history.total[0]
    assert len(a.history) == 50
