"""
Checking the Monte Carlo estimators against exact values
=========================================================

On a five-state chain driven by the sign of a Gaussian action, value
iteration gives exact Q values. The geometric-horizon Q estimate and the
symmetric gradient estimate should match them on average.
"""

import numpy as np

from rkhs_pg import ChainMdp, GaussianPolicy, KernelSpec, RkhsFunction, value_iteration
from rkhs_pg.envs import chain_sign_prob
from rkhs_pg.estimators import estimate_q_many, estimate_u, stochastic_gradient_many
from rkhs_pg.kernels import add_scaled_kernel

env = ChainMdp()
gamma = 0.9
policy = GaussianPolicy(RkhsFunction(KernelSpec((0.5,)), [[-0.5], [0.5]], [[0.4], [-0.3]]), 1.0)
V, Q = value_iteration(env.chain, chain_sign_prob(env.chain, policy), gamma)

# %%
# Q estimates: a raw reward sum over a Geometric(gamma) number of steps.
rng = np.random.default_rng(1)
N = 50_000
print("state  sign   exact    estimate  (se)")
for s in range(env.chain.num_states):
    for b, a in ((0, -0.5), (1, 0.5)):
        q = estimate_q_many(env, policy, np.tile(env.state_of(s), (N, 1)), np.full((N, 1), a), gamma, rng)
        se = q.values.std(ddof=1) / np.sqrt(N)
        print(f"{s:5d}  {'+-'[1 - b]:>4}  {Q[s, b]:7.4f}  {q.values.mean():8.4f}  ({se:.4f})")

# %%
# The gradient of U along the direction k(0, .) versus a finite difference of
# the exact value function.
delta = 0.05
shifted = [policy.with_mean(add_scaled_kernel(policy.mean, [0.0], [d])) for d in (delta, -delta)]
exact = [value_iteration(env.chain, chain_sign_prob(env.chain, p), gamma)[0][0] for p in shifted]
fd = (exact[0] - exact[1]) / (2 * delta)

g = stochastic_gradient_many(env, policy, gamma, rng, env.reset_many(rng, 100_000))
d = g.coeffs[:, 0] * policy.mean.kernel(g.centers, np.zeros((1, 1)))[:, 0]
print(f"\ndirectional derivative: estimate {d.mean():.4f} +- {d.std(ddof=1) / np.sqrt(len(d)):.4f}, "
      f"finite difference {fd:.4f}")

mean, se = estimate_u(env, policy, gamma, rng, 20_000, 160)
print(f"U(h): Monte Carlo {mean:.4f} +- {se:.4f}, exact {V[0]:.4f}")
