"""Closed-form constants from the convergence analysis, as numeric diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma as gamma_fn
from math import sqrt

import numpy as np


@dataclass(frozen=True)
class TheoreticalConstants:
    sigma_bound: float
    L1: float
    L2: float
    C: float
    radius: float


def gamma_moment_factor(p: int) -> float:
    """``(4 Gamma(2 + p/2) / Gamma(p/2)) ** (1/4)``."""
    return (4.0 * gamma_fn(2 + p / 2) / gamma_fn(p / 2)) ** 0.25


def neighborhood_radius(eta: float, epsilon: float, C: float) -> float:
    """Bound on ``liminf ||grad U(h_k)||`` for constant step ``eta`` and budget ``epsilon``."""
    return epsilon / (2 * eta) + sqrt(epsilon**2 + 4 * eta**3 * C) / (2 * eta)


def theoretical_constants(B_r: float, gamma: float, sigma, p: int, eta: float,
                          epsilon: float) -> TheoreticalConstants:
    """Moment bound, Lipschitz constants, composite constant and radius.

    ``sigma`` is the diagonal of the exploration covariance; its smallest entry
    plays the role of ``lambda_min(Sigma)``.
    """
    if p < 1:
        raise ValueError("p must be a positive integer")
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (p,))
    if not 0 < gamma < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if B_r <= 0 or eta <= 0 or epsilon < 0 or np.any(sig <= 0):
        raise ValueError("B_r, eta and sigma must be positive and epsilon non-negative")
    lam = float(sig.min())
    g = gamma
    sigma_bound = (3 * g) ** (1 / 3) / (1 - g) ** 2 / sqrt(lam) * gamma_moment_factor(p)
    L1 = B_r * (1 - g + p * (1 + g)) / (lam * (1 - g) ** 3)
    L2 = B_r * (1 + g) * sqrt(p) / (lam**1.5 * (1 - g) ** 3)
    X = sigma_bound**2 + 2 * (epsilon / eta) * sigma_bound + epsilon**2 / eta**2
    C = L1 * X + eta * L2 * X**1.5
    return TheoreticalConstants(sigma_bound, L1, L2, C, neighborhood_radius(eta, epsilon, C))
