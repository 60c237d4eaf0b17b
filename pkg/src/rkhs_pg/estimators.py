"""Unbiased Monte Carlo estimates of Q and of the functional policy gradient.

All rollouts run on batches of independent trajectories; the single-sample
functions (:func:`estimate_q`, :func:`stochastic_gradient`) are batches of one.

Q estimates are the *raw* reward sums ``sum_{t=0}^{T_Q} r_t`` with
``T_Q ~ Geom(gamma)``. Since ``P(T_Q >= t) = gamma**t`` their expectation is
exactly ``Q(s, a; h)``. ``legacy_q_scaling=True`` additionally multiplies by
``1 - gamma``, which only rescales the effective step size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Environment
from .policy import GaussianPolicy


@dataclass(frozen=True)
class QEstimate:
    value: float
    steps: int
    end_state: np.ndarray
    capped: bool = False


@dataclass(frozen=True)
class QBatch:
    values: np.ndarray
    steps: np.ndarray
    end_states: np.ndarray
    capped: np.ndarray


@dataclass(frozen=True)
class GradientEstimate:
    """Rank-one gradient estimate ``coeff * kappa(center, .)``.

    ``rollout_return`` is the undiscounted reward collected along the sampled
    trajectory: the ``T`` steps reaching ``center`` plus the rollout behind
    ``q_plus``.
    """

    center: np.ndarray
    coeff: np.ndarray
    q_plus: QEstimate
    q_minus: QEstimate
    steps: int = 0
    capped: int = 0
    rollout_return: float = 0.0

    @property
    def q_steps(self) -> int:
        return self.steps + self.q_plus.steps + self.q_minus.steps


@dataclass(frozen=True)
class GradientBatch:
    centers: np.ndarray
    coeffs: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray
    steps: np.ndarray


def _check_gamma(gamma: float) -> None:
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")


def _draw_horizons(gamma, rng, size, cap):
    _check_gamma(gamma)
    T = rng.geometric(1.0 - gamma, size) - 1
    capped = T > cap
    return np.minimum(T, cap), capped


def sample_geometric(gamma: float, rng: np.random.Generator, size=None, cap: int | None = None):
    """Draw ``T`` with ``P(T = t) = (1 - gamma) gamma**t``, optionally capped."""
    _check_gamma(gamma)
    T = rng.geometric(1.0 - gamma, size) - 1
    if cap is not None:
        T = np.minimum(T, cap)
    return int(T) if size is None else T


def _advance(env: Environment, policy: GaussianPolicy, S, T, rng):
    """Run row ``i`` for ``T[i]`` policy steps; returns ``(S_T, rewards)``."""
    S = np.array(S, dtype=float)
    total = np.zeros(S.shape[0])
    active = np.flatnonzero(T > 0)
    t = 0
    while active.size:
        A = policy.sample_many(S[active], rng)
        S2, R, done = env.step_many(S[active], A, rng)
        total[active] += R
        S[active] = S2
        t += 1
        # terminal states are absorbing, so s_T is already known
        active = active[(T[active] > t) & ~done]
    return S, total


def _reward_sums(env: Environment, policy: GaussianPolicy, S, A, T, rng):
    """``sum_{t=0}^{T[i]} r_t`` from ``(S[i], A[i])``, then following the policy."""
    S = np.array(S, dtype=float)
    A = np.array(A, dtype=float)
    total = np.zeros(S.shape[0])
    active = np.arange(S.shape[0])
    t = 0
    while active.size:
        S2, R, done = env.step_many(S[active], A[active], rng)
        total[active] += R
        go = T[active] > t
        moved = active[go]
        S[moved] = S2[go]
        active = active[go & ~done]
        t += 1
        if active.size:
            A[active] = policy.sample_many(S[active], rng)
    return total, S


def _mean_function(policy: GaussianPolicy):
    h = policy.mean
    if h.M == 0:
        zero = np.zeros(h.p)
        return lambda s: zero
    C, W, inv = h.centers, h.weights, h.kernel._inv

    def mean(s):
        d = C - s
        return np.exp(-0.5 * ((d * d) @ inv)) @ W

    return mean


def _advance_one(env: Environment, policy: GaussianPolicy, s: tuple, T: int, rng):
    """Scalar counterpart of :func:`_advance` for a single trajectory."""
    mean = _mean_function(policy)
    std, p, bound = policy.std, policy.p, env.spec.reward_bound
    total = 0.0
    for _ in range(T):
        a = mean(s) + std * rng.standard_normal(p)
        s, r, done = env.step_one(s, a, rng)
        if abs(r) > bound:
            raise RuntimeError(f"reward {r} exceeds declared bound {bound}")
        total += r
        if done:
            break
    return s, total


def _reward_sum_one(env: Environment, policy: GaussianPolicy, s: tuple, a, T: int, rng):
    """Scalar counterpart of :func:`_reward_sums` for a single trajectory."""
    mean = _mean_function(policy)
    std, p, bound = policy.std, policy.p, env.spec.reward_bound
    total = 0.0
    for t in range(T + 1):
        s2, r, done = env.step_one(s, a, rng)
        if abs(r) > bound:
            raise RuntimeError(f"reward {r} exceeds declared bound {bound}")
        total += r
        if t == T:
            break
        s = s2
        if done:
            break
        a = mean(s) + std * rng.standard_normal(p)
    return total, s


def estimate_q_many(env: Environment, policy: GaussianPolicy, S, A, gamma: float,
                    rng: np.random.Generator, legacy_q_scaling: bool = False) -> QBatch:
    """Independent Q estimates for every row pair ``(S[i], A[i])``."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if S.shape[1] != env.spec.n or A.shape != (S.shape[0], env.spec.p):
        raise ValueError("state/action shapes do not match the environment")
    T, capped = _draw_horizons(gamma, rng, S.shape[0], env.spec.max_horizon)
    values, ends = _reward_sums(env, policy, S, A, T, rng)
    if legacy_q_scaling:
        values = (1.0 - gamma) * values
    return QBatch(values, T, ends, capped)


def estimate_q(env: Environment, policy: GaussianPolicy, s, a, gamma: float,
               rng: np.random.Generator, legacy_q_scaling: bool = False) -> QEstimate:
    """One unbiased estimate of ``Q(s, a; h)``."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if s.shape != (env.spec.n,) or a.shape != (env.spec.p,):
        raise ValueError("state/action shapes do not match the environment")
    if not np.all(np.isfinite(a)):
        raise ValueError("actions must be finite")
    T, capped = _draw_horizons(gamma, rng, None, env.spec.max_horizon)
    value, end = _reward_sum_one(env, policy, tuple(s.tolist()), a, int(T), rng)
    if legacy_q_scaling:
        value = (1.0 - gamma) * value
    return QEstimate(float(value), int(T), np.array(end, dtype=float), bool(capped))


def symmetric_gradient(env: Environment, policy: GaussianPolicy, gamma: float, s, deviation,
                       rng_plus: np.random.Generator, rng_minus: np.random.Generator,
                       legacy_q_scaling: bool = False):
    """Two-sample gradient coefficient at ``s`` for ``a = h(s) + deviation``.

    ``Q+`` is estimated at ``a`` with ``rng_plus`` and ``Q-`` at the mirrored
    action ``h(s) - deviation`` with ``rng_minus``. Returns
    ``(coeff, q_plus, q_minus)`` with
    ``coeff = (Q+ - Q-) / (2 (1 - gamma)) * Sigma^{-1} deviation``.
    """
    s = np.asarray(s, dtype=float)
    d = np.asarray(deviation, dtype=float)
    m = policy.mean(s)
    q_plus = estimate_q(env, policy, s, m + d, gamma, rng_plus, legacy_q_scaling)
    q_minus = estimate_q(env, policy, s, m - d, gamma, rng_minus, legacy_q_scaling)
    zeta = d / policy.sigma
    coeff = (q_plus.value - q_minus.value) / (2.0 * (1.0 - gamma)) * zeta
    return coeff, q_plus, q_minus


def stochastic_gradient(env: Environment, policy: GaussianPolicy, gamma: float,
                        rng: np.random.Generator, start_state,
                        legacy_q_scaling: bool = False) -> GradientEstimate:
    """Unbiased rank-one estimate of the functional gradient of ``U`` at ``h``.

    Runs ``T ~ Geom(gamma)`` policy steps from ``start_state`` to reach
    ``(s_T, a_T)`` and pairs ``a_T`` with its reflection about ``h(s_T)``.
    """
    T, capped = _draw_horizons(gamma, rng, None, env.spec.max_horizon)
    s0 = np.asarray(start_state, dtype=float)
    if s0.shape != (env.spec.n,):
        raise ValueError("start_state does not match the environment")
    s_T, prefix = _advance_one(env, policy, tuple(s0.tolist()), int(T), rng)
    s_T = np.array(s_T, dtype=float)
    deviation = policy.std * rng.standard_normal(policy.p)
    coeff, q_plus, q_minus = symmetric_gradient(env, policy, gamma, s_T, deviation, rng, rng,
                                                legacy_q_scaling)
    raw_plus = q_plus.value / (1.0 - gamma) if legacy_q_scaling else q_plus.value
    return GradientEstimate(
        center=s_T,
        coeff=coeff,
        q_plus=q_plus,
        q_minus=q_minus,
        steps=int(T),
        capped=int(capped) + int(q_plus.capped) + int(q_minus.capped),
        rollout_return=float(prefix + raw_plus),
    )


def stochastic_gradient_many(env: Environment, policy: GaussianPolicy, gamma: float,
                             rng: np.random.Generator, start_states,
                             legacy_q_scaling: bool = False) -> GradientBatch:
    """Independent gradient estimates, one per row of ``start_states``."""
    S0 = np.atleast_2d(np.asarray(start_states, dtype=float))
    B = S0.shape[0]
    T, _ = _draw_horizons(gamma, rng, B, env.spec.max_horizon)
    S, _ = _advance(env, policy, S0, T, rng)
    D = policy.std * rng.standard_normal((B, policy.p))
    H = policy.mean.evaluate_many(S)
    qp = estimate_q_many(env, policy, S, H + D, gamma, rng, legacy_q_scaling)
    qm = estimate_q_many(env, policy, S, H - D, gamma, rng, legacy_q_scaling)
    coeffs = ((qp.values - qm.values) / (2.0 * (1.0 - gamma)))[:, None] * (D / policy.sigma)
    return GradientBatch(S, coeffs, qp.values, qm.values, T)


def discounted_returns(env: Environment, policy: GaussianPolicy, gamma: float,
                       rng: np.random.Generator, num_rollouts: int, horizon: int,
                       start_states=None) -> np.ndarray:
    """Truncated discounted returns ``sum_{t<horizon} gamma**t r_t`` of fresh rollouts."""
    S = env.reset_many(rng, num_rollouts) if start_states is None else np.array(start_states, dtype=float)
    G = np.zeros(S.shape[0])
    active = np.flatnonzero(~env.terminal_many(S))
    disc = 1.0
    for _ in range(horizon):
        if not active.size:
            break
        A = policy.sample_many(S[active], rng)
        S2, R, done = env.step_many(S[active], A, rng)
        G[active] += disc * R
        S[active] = S2
        active = active[~done]
        disc *= gamma
    return G


def estimate_u(env: Environment, policy: GaussianPolicy, gamma: float, rng: np.random.Generator,
               num_rollouts: int, horizon: int, tolerance: float = 1e-6, chunk: int = 100_000):
    """Monte Carlo estimate of ``U(h)`` with its standard error.

    Raises ``ValueError`` when the truncation bias bound
    ``gamma**horizon * B_r / (1 - gamma)`` exceeds ``tolerance``.
    """
    _check_gamma(gamma)
    if num_rollouts < 1:
        raise ValueError("num_rollouts must be positive")
    bias = gamma**horizon * env.spec.reward_bound / (1.0 - gamma)
    if bias > tolerance:
        raise ValueError(
            f"horizon {horizon} too short: truncation bias bound {bias:.3g} exceeds {tolerance:.3g}"
        )
    count = 0
    mean = 0.0
    m2 = 0.0
    while count < num_rollouts:
        b = min(chunk, num_rollouts - count)
        G = discounted_returns(env, policy, gamma, rng, b, horizon)
        g_mean = G.mean()
        g_m2 = float(np.sum((G - g_mean) ** 2))
        delta = g_mean - mean
        total = count + b
        mean += delta * b / total
        m2 += g_m2 + delta * delta * count * b / total
        count = total
    if num_rollouts == 1:
        return float(mean), 0.0
    return float(mean), float(np.sqrt(m2 / (num_rollouts - 1) / num_rollouts))
