import math

import numpy as np
import pytest

from rkhs_pg.config import TrainConfig
from rkhs_pg.estimators import stochastic_gradient
from rkhs_pg.envs import ChainMdp, ChainMdpSpec, chain_sign_prob, default_chain, value_iteration
from rkhs_pg.kernels import KernelSpec, RkhsFunction, add_scaled_kernel, evaluate, hilbert_norm, kernel_eval
from rkhs_pg.komp import komp
from rkhs_pg.policy import GaussianPolicy
from rkhs_pg.rng import stream
from rkhs_pg.training import (evaluate_policy, initial_policy, make_environment, step_size, train,
                              train_projected, train_unbiased)


def zero_chain():
    ch = default_chain()
    return ChainMdp(ChainMdpSpec(np.zeros((5, 2)), ch.transitions, ch.embedding))


def constant_chain(c=1.0, max_horizon=50):
    return ChainMdp(ChainMdpSpec(np.array([[c, c]]), np.ones((1, 2, 1)), np.array([0.0])),
                    max_horizon=max_horizon)


def chain_cfg(**kw):
    base = dict(env_id="chain", gamma=0.9, sigma=(1.0,), eta0=0.05, schedule="power", episodes=50,
                initial_centers=((-0.5,), (0.5,)), initial_weights=((0.4,), (-0.3,)), max_horizon=1000)
    base.update(kw)
    return TrainConfig(**base)


def test_step_size_examples():
    const = TrainConfig(env_id="chain", eta0=0.01)
    assert step_size(const, 0) == step_size(const, 12345) == 0.01
    power = TrainConfig(env_id="chain", eta0=0.01, schedule="power", decay_exponent=0.6)
    assert step_size(power, 0) == 0.01
    assert step_size(power, 99) == pytest.approx(0.01 * 0.063096, rel=1e-5)
    with pytest.raises(ValueError):
        step_size(power, -1)


def test_power_schedule_sum_proxies():
    cfg = TrainConfig(env_id="chain", eta0=1.0, schedule="power", decay_exponent=0.6)
    k = np.arange(1_000_000)
    eta = cfg.eta0 * (k + 1.0) ** -0.6
    assert step_size(cfg, 999_999) == pytest.approx(eta[-1], rel=1e-14)
    assert eta.sum() > 100 * cfg.eta0
    sq = np.cumsum(eta**2)
    # Cauchy proxy: the tail after N terms stays below the integral bound N**-0.2 / 0.2
    for n in (10**3, 10**4, 10**5):
        assert sq[-1] - sq[n - 1] <= n ** -0.2 / 0.2
    decades = np.diff(sq[[999, 9_999, 99_999, 999_999]])
    assert np.all(np.diff(decades) < 0)


def test_unbiased_requires_power_and_projected_requires_constant():
    env = zero_chain()
    with pytest.raises(ValueError):
        train_unbiased(chain_cfg(schedule="constant"), env, np.random.default_rng(0))
    with pytest.raises(ValueError):
        train_projected(chain_cfg(), env, np.random.default_rng(0))


def test_zero_reward_unbiased_keeps_initial_policy():
    cfg = chain_cfg(episodes=100)
    pol, recs = train_unbiased(cfg, zero_chain(), stream(0, "train"))
    h0 = initial_policy(cfg).mean
    assert pol.mean.M == h0.M
    np.testing.assert_array_equal(pol.mean.weights, h0.weights)
    assert all(r.coeff_norm == 0 and r.model_order == 2 for r in recs)


def test_zero_reward_projected_keeps_initial_policy():
    cfg = chain_cfg(schedule="constant", epsilon=1e-6, episodes=50)
    pol, _ = train_projected(cfg, zero_chain(), stream(0, "train"))
    h0 = initial_policy(cfg).mean
    np.testing.assert_array_equal(pol.mean.weights, h0.weights)
    np.testing.assert_array_equal(pol.mean.centers, h0.centers)


def test_model_order_grows_at_most_one_per_episode():
    cfg = chain_cfg(episodes=40)
    pol, recs = train_unbiased(cfg, ChainMdp(max_horizon=1000), stream(1, "train"))
    assert pol.mean.M <= 2 + 40
    orders = [2] + [r.model_order for r in recs]
    assert all(0 <= b - a <= 1 for a, b in zip(orders, orders[1:]))


def test_update_is_exact_rank_one_step():
    cfg = chain_cfg(episodes=30)
    seen = []

    def cb(k, policy, rec):
        seen.append(policy)

    train_unbiased(cfg, ChainMdp(max_horizon=1000), stream(2, "train"), callback=cb)
    probes = np.linspace(-1.2, 1.2, 7)
    prev = initial_policy(cfg).mean
    for k, pol in enumerate(seen):
        h = pol.mean
        if h.M == prev.M:
            prev = h
            continue
        c, w = h.centers[-1], h.weights[-1]
        for x in probes:
            expected = evaluate(prev, [x]) + kernel_eval(h.kernel, c, [x]) * w
            np.testing.assert_allclose(evaluate(h, [x]), expected, atol=1e-12)
        prev = h


def test_projected_bias_within_budget_every_episode(monkeypatch):
    import rkhs_pg.training as training

    biases = []

    def recording_komp(reference, epsilon):
        res = komp(reference, epsilon)
        biases.append(hilbert_norm(res.pruned - reference))
        return res

    monkeypatch.setattr(training, "komp", recording_komp)
    cfg = chain_cfg(schedule="constant", epsilon=0.02, eta0=0.05, episodes=200)
    orders = []
    train_projected(cfg, ChainMdp(max_horizon=1000), stream(3, "train"),
                    callback=lambda k, pol, rec: orders.append((rec.model_order, pol.mean.M)))
    assert len(biases) == 200
    assert max(biases) <= 0.02 + 1e-8
    assert all(a == b for a, b in orders)
    # five distinct states bound the useful dictionary size
    assert max(a for a, _ in orders) <= 6


def test_epsilon_zero_only_merges_exact_duplicates():
    cfg = chain_cfg(schedule="constant", epsilon=0.0, eta0=0.05, episodes=60)
    pol_p, _ = train_projected(cfg, ChainMdp(max_horizon=1000), stream(4, "train"))
    # the chain has five states, so exact redundancies collapse the dictionary
    assert pol_p.mean.M <= 5

    # replay the same draws without pruning: the represented function is the same
    env = ChainMdp(max_horizon=1000)
    rng = stream(4, "train")
    pol = initial_policy(cfg)
    for _ in range(60):
        g = stochastic_gradient(env, pol, 0.9, rng, env.reset(rng))
        w = 0.05 * g.coeff
        if np.any(w != 0):
            pol = pol.with_mean(add_scaled_kernel(pol.mean, g.center, w))
        pol = pol.with_mean(komp(pol.mean, 0.0).pruned)
    probe = np.linspace(-1, 1, 5).reshape(-1, 1)
    np.testing.assert_allclose(pol_p.mean.evaluate_many(probe), pol.mean.evaluate_many(probe), atol=1e-9)


def test_training_is_deterministic():
    cfg = chain_cfg(schedule="constant", epsilon=0.01, episodes=80)
    runs = [train(cfg, make_environment(cfg), stream(7, "train"), reset_rng=stream(7, "env"))
            for _ in range(2)]
    assert [r.row() for r in runs[0][1]] == [r.row() for r in runs[1][1]]
    np.testing.assert_array_equal(runs[0][0].mean.weights, runs[1][0].mean.weights)


def test_metric_rollout_episode_mode():
    cfg = chain_cfg(episodes=5, metric_rollout="episode", max_horizon=20)
    _, recs = train(cfg, make_environment(cfg), stream(0, "train"), metric_rng=stream(0, "eval"))
    assert all(0 <= r.episode_return <= 20 for r in recs)
    assert recs[-1].avg_return == pytest.approx(np.mean([r.episode_return for r in recs]))


def test_evaluate_policy_examples():
    zero = GaussianPolicy(RkhsFunction.zero(KernelSpec((1.0,)), 1), 1.0)
    assert evaluate_policy(zero_chain(), zero, 0.9, 20, np.random.default_rng(0)) == (0.0, 0.0)
    mean, se = evaluate_policy(constant_chain(1.0, max_horizon=37), zero, 0.9, 10, np.random.default_rng(0))
    assert mean == 37.0 and se == 0.0
    with pytest.raises(ValueError):
        evaluate_policy(zero_chain(), zero, 0.9, 0, np.random.default_rng(0))


def test_evaluate_policy_discounted_matches_oracle():
    env = ChainMdp(max_horizon=200)
    pol = initial_policy(chain_cfg())
    V, _ = value_iteration(env.chain, chain_sign_prob(env.chain, pol), 0.9)
    mean, se = evaluate_policy(env, pol, 0.9, 20_000, np.random.default_rng(5), discounted=True)
    assert abs(mean - V[0]) <= 3 * se


def test_evaluate_policy_thread_count_invariant(monkeypatch):
    env = ChainMdp(max_horizon=100)
    pol = initial_policy(chain_cfg())
    one = evaluate_policy(env, pol, 0.9, 1000, np.random.default_rng(9), chunk=100, threads=1)
    four = evaluate_policy(env, pol, 0.9, 1000, np.random.default_rng(9), chunk=100, threads=4)
    monkeypatch.setenv("RKHS_PG_THREADS", "3")
    env_var = evaluate_policy(env, pol, 0.9, 1000, np.random.default_rng(9), chunk=100)
    assert one == four == env_var
