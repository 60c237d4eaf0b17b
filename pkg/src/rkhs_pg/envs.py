"""Simulators used for training and for checking the estimators.

Environments are pure transition functions over explicit state arrays. Every
environment works on batches (``reset_many`` / ``step_many``); the single-state
``reset`` / ``step`` calls are thin wrappers. Terminal states are absorbing:
stepping one returns the same state, zero reward and ``terminal=True``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr

DEFAULT_MAX_HORIZON = 10_000


@dataclass(frozen=True)
class EnvSpec:
    n: int
    p: int
    reward_bound: float
    max_horizon: int = DEFAULT_MAX_HORIZON

    def __post_init__(self):
        if self.reward_bound <= 0:
            raise ValueError("reward_bound must be positive")
        if self.max_horizon < 1:
            raise ValueError("max_horizon must be a positive integer")


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    terminal: bool


class Environment:
    """Base class. Subclasses implement ``_reset`` and ``_transition``."""

    spec: EnvSpec

    def reset_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self._reset(rng, size)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        return self.reset_many(rng, 1)[0]

    def terminal_many(self, S: np.ndarray) -> np.ndarray:
        return np.zeros(S.shape[0], dtype=bool)

    def step_many(self, S, A, rng: np.random.Generator):
        """Advance every row of ``S`` under the matching row of ``A``.

        Returns ``(next_states, rewards, terminal)``.
        """
        S = np.asarray(S, dtype=float)
        A = np.asarray(A, dtype=float)
        if S.ndim != 2 or S.shape[1] != self.spec.n:
            raise ValueError(f"states must have shape (B, {self.spec.n}), got {S.shape}")
        if A.shape != (S.shape[0], self.spec.p):
            raise ValueError(f"actions must have shape ({S.shape[0]}, {self.spec.p}), got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("actions must be finite")
        done = self.terminal_many(S)
        S2, R, T = self._transition(S, A, rng)
        if done.any():
            S2[done] = S[done]
            R[done] = 0.0
            T[done] = True
        if np.any(np.abs(R) > self.spec.reward_bound):
            raise RuntimeError(
                f"reward {np.abs(R).max()} exceeds declared bound {self.spec.reward_bound}"
            )
        return S2, R, T

    def step(self, s, a, rng: np.random.Generator) -> StepResult:
        S2, R, T = self.step_many(np.atleast_2d(s), np.atleast_2d(a), rng)
        return StepResult(S2[0], float(R[0]), bool(T[0]))

    def step_one(self, s: tuple, a: tuple, rng: np.random.Generator):
        """Unchecked single transition on tuples of floats; returns ``(s', r, terminal)``.

        Same dynamics as :meth:`step_many`, without the batch overhead. Callers
        are responsible for finite actions.
        """
        S2, R, T = self.step_many(np.array([s]), np.array([a]), rng)
        return tuple(S2[0].tolist()), float(R[0]), bool(T[0])

    def _reset(self, rng, size):
        raise NotImplementedError

    def _transition(self, S, A, rng):
        raise NotImplementedError


class MountainCar(Environment):
    """Continuous mountain car with an action-energy penalty.

    Velocity update ``v' = v + 0.0015 a - 0.0025 cos(3x)`` with ``a`` clipped to
    ``[-1, 1]``; reaching ``goal_position`` pays 100 and ends the episode.
    """

    min_position = -1.2
    max_position = 0.6
    max_speed = 0.07
    power = 0.0015

    def __init__(self, goal_position: float = 0.45, max_horizon: int = DEFAULT_MAX_HORIZON):
        if not (self.min_position < goal_position <= self.max_position):
            raise ValueError(f"goal_position must lie in ({self.min_position}, {self.max_position}]")
        self.goal_position = float(goal_position)
        self.spec = EnvSpec(n=2, p=1, reward_bound=100.0, max_horizon=max_horizon)

    def _reset(self, rng, size):
        S = np.zeros((size, 2))
        S[:, 0] = rng.uniform(-0.6, -0.4, size)
        return S

    def terminal_many(self, S):
        return S[:, 0] >= self.goal_position

    def _transition(self, S, A, rng):
        x, v = S[:, 0], S[:, 1]
        force = np.clip(A[:, 0], -1.0, 1.0)
        v2 = np.clip(v + force * self.power - 0.0025 * np.cos(3.0 * x), -self.max_speed, self.max_speed)
        x2 = np.clip(x + v2, self.min_position, self.max_position)
        # inelastic left wall
        v2 = np.where((x2 == self.min_position) & (v2 < 0), 0.0, v2)
        done = x2 >= self.goal_position
        R = -0.1 * force**2 + np.where(done, 100.0, 0.0)
        return np.column_stack([x2, v2]), R, done

    def step_one(self, s, a, rng):
        x, v = s
        if x >= self.goal_position:
            return s, 0.0, True
        force = min(max(a[0], -1.0), 1.0)
        v2 = min(max(v + force * self.power - 0.0025 * math.cos(3.0 * x), -self.max_speed), self.max_speed)
        x2 = min(max(x + v2, self.min_position), self.max_position)
        if x2 == self.min_position and v2 < 0:
            v2 = 0.0
        done = x2 >= self.goal_position
        return (x2, v2), -0.1 * force * force + (100.0 if done else 0.0), done


class CartPole(Environment):
    """Cart-pole balancing with Euler integration (dt = 0.02).

    A scalar action maps to a push of ``+force_mag`` when ``a >= 0`` and
    ``-force_mag`` otherwise. Reward is 1 per step that leaves the pole up.
    """

    gravity = 9.8
    masscart = 1.0
    masspole = 0.1
    length = 0.5
    tau = 0.02
    x_threshold = 2.4
    theta_threshold = 12 * 2 * math.pi / 360

    def __init__(self, force_mag: float = 10.0, max_horizon: int = DEFAULT_MAX_HORIZON):
        self.force_mag = float(force_mag)
        self.total_mass = self.masscart + self.masspole
        self.polemass_length = self.masspole * self.length
        self.spec = EnvSpec(n=4, p=1, reward_bound=1.0, max_horizon=max_horizon)

    def _reset(self, rng, size):
        return rng.uniform(-0.05, 0.05, (size, 4))

    def terminal_many(self, S):
        return (np.abs(S[:, 0]) > self.x_threshold) | (np.abs(S[:, 2]) > self.theta_threshold)

    def _transition(self, S, A, rng):
        x, x_dot, theta, theta_dot = S.T
        force = np.where(A[:, 0] >= 0, self.force_mag, -self.force_mag)
        cos, sin = np.cos(theta), np.sin(theta)
        temp = (force + self.polemass_length * theta_dot**2 * sin) / self.total_mass
        theta_acc = (self.gravity * sin - cos * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * cos**2 / self.total_mass)
        )
        x_acc = temp - self.polemass_length * theta_acc * cos / self.total_mass
        S2 = np.column_stack([
            x + self.tau * x_dot,
            x_dot + self.tau * x_acc,
            theta + self.tau * theta_dot,
            theta_dot + self.tau * theta_acc,
        ])
        done = self.terminal_many(S2)
        return S2, np.where(done, 0.0, 1.0), done

    def step_one(self, s, a, rng):
        x, x_dot, theta, theta_dot = s
        if abs(x) > self.x_threshold or abs(theta) > self.theta_threshold:
            return s, 0.0, True
        force = self.force_mag if a[0] >= 0 else -self.force_mag
        cos, sin = math.cos(theta), math.sin(theta)
        temp = (force + self.polemass_length * theta_dot * theta_dot * sin) / self.total_mass
        theta_acc = (self.gravity * sin - cos * temp) / (
            self.length * (4.0 / 3.0 - self.masspole * cos * cos / self.total_mass)
        )
        x_acc = temp - self.polemass_length * theta_acc * cos / self.total_mass
        s2 = (x + self.tau * x_dot, x_dot + self.tau * x_acc,
              theta + self.tau * theta_dot, theta_dot + self.tau * theta_acc)
        done = abs(s2[0]) > self.x_threshold or abs(s2[2]) > self.theta_threshold
        return s2, (0.0 if done else 1.0), done


@dataclass(frozen=True, eq=False)
class ChainMdpSpec:
    """Finite MDP driven by the sign of a scalar Gaussian action.

    ``rewards[s, b]`` and ``transitions[s, b, :]`` use ``b = 0`` for ``a < 0``
    and ``b = 1`` for ``a >= 0``. ``embedding[s]`` is the scalar state value the
    kernel policy sees.
    """

    rewards: np.ndarray
    transitions: np.ndarray
    embedding: np.ndarray
    reward_bound: float | None = None

    def __post_init__(self):
        R = np.asarray(self.rewards, dtype=float)
        P = np.asarray(self.transitions, dtype=float)
        E = np.asarray(self.embedding, dtype=float).ravel()
        N = E.shape[0]
        if R.shape != (N, 2):
            raise ValueError(f"rewards must have shape ({N}, 2), got {R.shape}")
        if P.shape != (N, 2, N):
            raise ValueError(f"transitions must have shape ({N}, 2, {N}), got {P.shape}")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > 1e-12:
            raise ValueError("transition rows must be probability vectors")
        if len(np.unique(E)) != N:
            raise ValueError("embedding values must be distinct")
        bound = self.reward_bound
        if bound is None:
            bound = float(np.max(np.abs(R))) or 1.0
        if np.max(np.abs(R)) > bound:
            raise ValueError("rewards exceed reward_bound")
        for name, arr in (("rewards", R), ("transitions", P), ("embedding", E)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "reward_bound", float(bound))

    @property
    def num_states(self) -> int:
        return self.embedding.shape[0]

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "rewards": self.rewards.tolist(),
            "transitions": self.transitions.tolist(),
            "embedding": self.embedding.tolist(),
            "reward_bound": self.reward_bound,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ChainMdpSpec":
        spec = cls(doc["rewards"], doc["transitions"], doc["embedding"], doc.get("reward_bound"))
        if "num_states" in doc and int(doc["num_states"]) != spec.num_states:
            raise ValueError("num_states does not match the tables")
        return spec

    @classmethod
    def load(cls, path) -> "ChainMdpSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_chain(num_states: int = 5, slip: float = 0.1) -> ChainMdpSpec:
    """Corridor where ``a >= 0`` tends to move right and ``a < 0`` left.

    The right end pays 1 per step, the left end pays 0.2 for pushing left.
    """
    N = num_states
    P = np.zeros((N, 2, N))
    for s in range(N):
        left, right = max(s - 1, 0), min(s + 1, N - 1)
        P[s, 0, left] += 1 - slip
        P[s, 0, right] += slip
        P[s, 1, right] += 1 - slip
        P[s, 1, left] += slip
    R = np.zeros((N, 2))
    R[N - 1, :] = 1.0
    R[0, 0] = 0.2
    return ChainMdpSpec(R, P, np.linspace(-1.0, 1.0, N))


class ChainMdp(Environment):
    """Environment wrapper around a :class:`ChainMdpSpec` (always starts in state 0)."""

    def __init__(self, chain: ChainMdpSpec | None = None, max_horizon: int = DEFAULT_MAX_HORIZON):
        self.chain = default_chain() if chain is None else chain
        self.spec = EnvSpec(n=1, p=1, reward_bound=self.chain.reward_bound, max_horizon=max_horizon)
        self._order = np.argsort(self.chain.embedding)
        self._sorted = self.chain.embedding[self._order]
        self._cum = np.cumsum(self.chain.transitions, axis=2)

    def index_of(self, S) -> np.ndarray:
        """Map state vectors back to state indices (nearest embedding)."""
        x = np.asarray(S, dtype=float).reshape(-1)
        if len(self._sorted) == 1:
            return np.zeros(x.shape[0], dtype=int)
        pos = np.clip(np.searchsorted(self._sorted, x), 1, len(self._sorted) - 1)
        left = self._sorted[pos - 1]
        right = self._sorted[pos]
        pos = np.where(np.abs(x - left) <= np.abs(right - x), pos - 1, pos)
        return self._order[pos]

    def state_of(self, idx) -> np.ndarray:
        return self.chain.embedding[np.asarray(idx)].reshape(-1, 1)

    def _reset(self, rng, size):
        return np.full((size, 1), self.chain.embedding[0])

    def _transition(self, S, A, rng):
        idx = self.index_of(S)
        b = (A[:, 0] >= 0).astype(int)
        R = self.chain.rewards[idx, b].copy()
        u = rng.random(idx.shape[0])
        nxt = np.minimum((u[:, None] >= self._cum[idx, b, :]).sum(axis=1), self.chain.num_states - 1)
        return self.state_of(nxt), R, np.zeros(idx.shape[0], dtype=bool)

    def step_one(self, s, a, rng):
        i = int(self.index_of(s)[0])
        b = 1 if a[0] >= 0 else 0
        j = min(int(np.searchsorted(self._cum[i, b], rng.random(), side="right")), self.chain.num_states - 1)
        return (float(self.chain.embedding[j]),), float(self.chain.rewards[i, b]), False


def chain_sign_prob(chain: ChainMdpSpec, policy) -> np.ndarray:
    """``P(a >= 0 | s) = Phi(h(e_s) / sqrt(sigma))`` for a scalar Gaussian policy."""
    H = policy.mean.evaluate_many(chain.embedding.reshape(-1, 1))[:, 0]
    return ndtr(H / policy.std[0])


def value_iteration(chain: ChainMdpSpec, sign_prob, gamma: float, tol: float = 1e-10,
                    max_iter: int = 1_000_000):
    """Evaluate the sign-action policy exactly by Bellman iteration.

    Returns ``(V, Q)`` where ``Q[s, 0]`` is the value of pushing left and
    ``Q[s, 1]`` the value of pushing right.
    """
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    pi = np.asarray(sign_prob, dtype=float)
    if pi.shape != (chain.num_states,) or np.any(pi < 0) or np.any(pi > 1):
        raise ValueError("sign_prob must hold one probability per state")
    R, P = chain.rewards, chain.transitions
    V = np.zeros(chain.num_states)
    for _ in range(max_iter):
        Q = R + gamma * P @ V
        V_new = (1 - pi) * Q[:, 0] + pi * Q[:, 1]
        delta = np.max(np.abs(V_new - V))
        V = V_new
        if delta < tol:
            break
    else:
        raise RuntimeError("value iteration did not converge")
    Q = R + gamma * P @ V
    return V, Q


def make_env(env_id: str, max_horizon: int = DEFAULT_MAX_HORIZON, goal_position: float = 0.45,
             chain: ChainMdpSpec | None = None) -> Environment:
    if env_id == "mountain_car":
        return MountainCar(goal_position=goal_position, max_horizon=max_horizon)
    if env_id == "cartpole":
        return CartPole(max_horizon=max_horizon)
    if env_id == "chain":
        return ChainMdp(chain, max_horizon=max_horizon)
    raise ValueError(f"unknown env_id {env_id!r}")
