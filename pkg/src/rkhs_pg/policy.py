"""Gaussian exploration policy ``a ~ N(h(s), diag(sigma))``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import RkhsFunction, evaluate


@dataclass(frozen=True, eq=False)
class GaussianPolicy:
    """Exploration policy around an RKHS mean.

    ``sigma`` holds the diagonal of the covariance (variances, not standard
    deviations). A scalar broadcasts to every action coordinate.
    """

    mean: RkhsFunction
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.broadcast_to(np.asarray(self.sigma, dtype=float), (self.mean.p,)).copy()
        if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
            raise ValueError(f"sigma entries must be positive, got {sigma}")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        std = np.sqrt(sigma)
        std.setflags(write=False)
        object.__setattr__(self, "std", std)

    @property
    def n(self) -> int:
        return self.mean.n

    @property
    def p(self) -> int:
        return self.mean.p

    def with_mean(self, mean: RkhsFunction) -> "GaussianPolicy":
        return GaussianPolicy(mean, self.sigma)

    def sample_many(self, S, rng: np.random.Generator) -> np.ndarray:
        """One action per row of ``S``."""
        H = self.mean.evaluate_many(S)
        return H + self.std * rng.standard_normal(H.shape)


def sample_action(policy: GaussianPolicy, s, rng: np.random.Generator) -> np.ndarray:
    """Draw ``a = h(s) + sigma**0.5 * z`` with ``z`` standard normal."""
    return evaluate(policy.mean, s) + policy.std * rng.standard_normal(policy.p)


def symmetric_action(policy: GaussianPolicy, s, a) -> np.ndarray:
    """Reflection of ``a`` about the policy mean: ``2 h(s) - a``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (policy.p,):
        raise ValueError(f"expected action of length {policy.p}, got shape {a.shape}")
    m = evaluate(policy.mean, s)
    return m - (a - m)


def score_direction(policy: GaussianPolicy, s, a) -> np.ndarray:
    """Gaussian score factor ``Sigma^{-1} (a - h(s))``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (policy.p,):
        raise ValueError(f"expected action of length {policy.p}, got shape {a.shape}")
    return (a - evaluate(policy.mean, s)) / policy.sigma
