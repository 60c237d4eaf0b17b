import math

import numpy as np
import pytest

from rkhs_pg.constants import gamma_moment_factor, neighborhood_radius, theoretical_constants

from oracles import constants_by_hand


def test_gamma_factor_p1():
    assert gamma_moment_factor(1) == pytest.approx(3 ** 0.25, rel=1e-14)
    assert gamma_moment_factor(1) == pytest.approx(1.31607, abs=1e-5)
    # 4 Gamma(3) / Gamma(1) = 8 for p = 2
    assert gamma_moment_factor(2) == pytest.approx(8 ** 0.25, rel=1e-14)


def test_against_term_by_term_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        B, g, lam = rng.uniform(0.1, 100), rng.uniform(0.01, 0.99), rng.uniform(0.01, 3)
        p, eta, eps = int(rng.integers(1, 5)), 10 ** rng.uniform(-5, -1), rng.uniform(0, 1e-3)
        sigma = np.full(p, lam)
        sigma[0] = lam  # min entry
        c = theoretical_constants(B, g, sigma + np.r_[0, rng.uniform(0, 1, p - 1)], p, eta, eps)
        ref = constants_by_hand(B, g, lam, p, eta, eps)
        got = (c.sigma_bound, c.L1, c.L2, c.C, c.radius)
        for a, b in zip(got, ref):
            assert a == pytest.approx(b, rel=1e-10)
        assert all(v >= 0 for v in got)


def test_radius_zero_budget_and_monotone():
    c = theoretical_constants(5.0, 0.95, [0.5], 1, 1e-3, 0.0)
    assert c.radius == pytest.approx(math.sqrt(1e-3 * c.C), rel=1e-12)
    eps = np.linspace(0, 1e-2, 200)
    r = [neighborhood_radius(1e-3, e, c.C) for e in eps]
    assert np.all(np.diff(r) >= 0)


def test_budget_of_order_eta_three_halves_keeps_radius_bounded():
    ratios = []
    for eta in (1e-2, 1e-3, 1e-4, 1e-5):
        c0 = theoretical_constants(1.0, 0.9, [1.0], 1, eta, 0.0)
        c1 = theoretical_constants(1.0, 0.9, [1.0], 1, eta, 0.5 * eta ** 1.5)
        ratios.append(c1.radius / c0.radius)
    assert max(ratios) < 2.0


def test_domain_errors():
    for kwargs in (dict(gamma=1.0), dict(gamma=0.0), dict(eta=0.0), dict(epsilon=-1.0),
                   dict(B_r=0.0), dict(sigma=[0.0]), dict(p=0)):
        args = dict(B_r=1.0, gamma=0.9, sigma=[1.0], p=1, eta=0.01, epsilon=0.0)
        args.update(kwargs)
        with pytest.raises(ValueError):
            theoretical_constants(**args)
