"""Stochastic policy gradient ascent in the RKHS, with and without pruning."""
from __future__ import annotations

import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .envs import ChainMdpSpec, Environment, make_env
from .estimators import discounted_returns, stochastic_gradient
from .kernels import KernelSpec, RkhsFunction, add_scaled_kernel
from .komp import komp
from .policy import GaussianPolicy

METRICS_HEADER = ("episode", "return", "avg_return", "model_order", "coeff_norm",
                  "q_steps", "horizon_caps", "wall_ms")
# allowance on top of the budget when asserting the pruning bias
BUDGET_ATOL = 1e-8


@dataclass(frozen=True)
class MetricsRecord:
    episode: int
    episode_return: float
    avg_return: float
    model_order: int
    coeff_norm: float
    q_steps: int
    horizon_caps: int
    wall_ms: int

    def row(self) -> tuple:
        return (self.episode, self.episode_return, self.avg_return, self.model_order,
                self.coeff_norm, self.q_steps, self.horizon_caps, self.wall_ms)


def step_size(config: TrainConfig, k: int) -> float:
    """``eta0`` for the constant schedule, ``eta0 (k + 1) ** -decay`` for the power one."""
    if k < 0:
        raise ValueError("iteration index must be non-negative")
    if config.schedule == "constant":
        return config.eta0
    return config.eta0 * (k + 1) ** (-config.decay_exponent)


def make_environment(config: TrainConfig) -> Environment:
    chain = ChainMdpSpec.load(config.chain_spec) if config.chain_spec else None
    return make_env(config.env_id, max_horizon=config.max_horizon,
                    goal_position=config.goal_position, chain=chain)


def initial_policy(config: TrainConfig) -> GaussianPolicy:
    kernel = KernelSpec(config.bandwidths)
    if config.initial_centers:
        mean = RkhsFunction(kernel, np.array(config.initial_centers), np.array(config.initial_weights), 1)
    else:
        mean = RkhsFunction.zero(kernel, 1)
    return GaussianPolicy(mean, np.array(config.sigma))


def _episode_return(env, policy, rng) -> float:
    return float(discounted_returns(env, policy, 1.0, rng, 1, env.spec.max_horizon)[0])


def _train(config, env, rng, project, policy, reset_rng, metric_rng, callback):
    if policy is None:
        policy = initial_policy(config)
    reset_rng = rng if reset_rng is None else reset_rng
    metric_rng = rng if metric_rng is None else metric_rng
    window = deque(maxlen=config.eval_window)
    records = []
    for k in range(config.episodes):
        t0 = time.perf_counter()
        if config.metric_rollout == "episode":
            ret = _episode_return(env, policy, metric_rng)
        g = stochastic_gradient(env, policy, config.gamma, rng, env.reset(reset_rng),
                                config.legacy_q_scaling)
        if config.metric_rollout == "gradient":
            ret = g.rollout_return
        w = step_size(config, k) * g.coeff
        h = policy.mean
        h_tilde = add_scaled_kernel(h, g.center, w) if np.any(w != 0) else h
        if project:
            res = komp(h_tilde, config.epsilon)
            if res.final_error > config.epsilon + BUDGET_ATOL:
                raise RuntimeError(f"pruning error {res.final_error} exceeds budget {config.epsilon}")
            h_tilde = res.pruned
        policy = policy.with_mean(h_tilde)
        window.append(ret)
        wall = int(round((time.perf_counter() - t0) * 1000)) if config.record_timing else 0
        rec = MetricsRecord(k, float(ret), float(np.mean(window)), policy.mean.M,
                            float(np.linalg.norm(w)), g.q_steps, g.capped, wall)
        records.append(rec)
        if callback is not None:
            callback(k, policy, rec)
    return policy, records


def train_unbiased(config: TrainConfig, env: Environment, rng: np.random.Generator, *,
                   policy: GaussianPolicy | None = None, reset_rng=None, metric_rng=None,
                   callback=None):
    """Diminishing-step ascent ``h_{k+1} = h_k + eta_k grad_hat``; the dictionary only grows.

    Zero gradient estimates add no dictionary element.
    """
    if config.schedule != "power":
        raise ValueError("train_unbiased needs the diminishing (power) schedule")
    return _train(config, env, rng, False, policy, reset_rng, metric_rng, callback)


def train_projected(config: TrainConfig, env: Environment, rng: np.random.Generator, *,
                    policy: GaussianPolicy | None = None, reset_rng=None, metric_rng=None,
                    callback=None):
    """Constant-step ascent followed by one pruning pass per episode.

    Every iterate satisfies ``||h_{k+1} - h_tilde_{k+1}||_H <= epsilon``.
    """
    if config.schedule != "constant":
        raise ValueError("train_projected needs the constant schedule")
    return _train(config, env, rng, True, policy, reset_rng, metric_rng, callback)


def train(config: TrainConfig, env: Environment, rng: np.random.Generator, **kwargs):
    """Dispatch on the schedule: power -> unbiased, constant -> projected."""
    if config.schedule == "power":
        return train_unbiased(config, env, rng, **kwargs)
    return train_projected(config, env, rng, **kwargs)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RKHS_PG_THREADS", "1")))
    except ValueError:
        return 1


def evaluate_policy(env: Environment, policy: GaussianPolicy, gamma: float, episodes: int,
                    rng: np.random.Generator, discounted: bool = False, chunk: int = 256,
                    threads: int | None = None):
    """Mean and standard error of episode returns under the stochastic policy.

    Episodes start from fresh resets and run until a terminal state or
    ``max_horizon`` steps. Rollouts are split into fixed chunks with their own
    spawned streams, so the result does not depend on the thread count.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    sizes = [min(chunk, episodes - i) for i in range(0, episodes, chunk)]
    streams = rng.spawn(len(sizes))
    disc = gamma if discounted else 1.0

    def run(i):
        return discounted_returns(env, policy, disc, streams[i], sizes[i], env.spec.max_horizon)

    workers = threads or _threads()
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    G = np.concatenate(parts)
    if episodes == 1:
        return float(G[0]), 0.0
    return float(G.mean()), float(G.std(ddof=1) / np.sqrt(episodes))
