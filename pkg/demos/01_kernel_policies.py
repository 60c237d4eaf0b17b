"""
Policies as sparse kernel expansions
====================================

A policy mean is a finite sum of Gaussian kernel sections. This script builds
one, evaluates it, measures it in the Hilbert norm and then compresses it
with destructive kernel orthogonal matching pursuit.
"""

import numpy as np

from rkhs_pg import KernelSpec, RkhsFunction, add_scaled_kernel, evaluate, hilbert_norm, komp

# Mountain car states are (position, velocity); the bandwidths are squared
# length scales, so velocity is measured on a much finer scale.
kernel = KernelSpec((0.15, 0.015))
h = RkhsFunction(kernel, [[0.65, -0.02], [-0.35, 0.02]], [[0.5], [-0.5]])
print("h(0, 0) =", evaluate(h, (0.0, 0.0)))
print("||h||   =", hilbert_norm(h))

# %%
# A gradient step appends one kernel section. Do it many times at nearby
# states and the dictionary grows quickly, most of it redundant.
rng = np.random.default_rng(0)
for _ in range(60):
    center = rng.normal([-0.5, 0.0], [0.1, 0.005])
    h = add_scaled_kernel(h, center, rng.normal(0, 0.01, 1))
print("\nafter 60 updates: M =", h.M)

# %%
# Pruning removes the least informative element, refits the survivors by
# least squares against the original function, and repeats while the
# Hilbert-norm error stays inside the budget.
for eps in (0.0, 1e-3, 1e-2, 5e-2):
    res = komp(h, eps)
    probe = np.array([[-0.5, 0.0], [0.0, 0.01], [0.3, -0.02]])
    drift = np.abs(res.pruned.evaluate_many(probe) - h.evaluate_many(probe)).max()
    print(f"eps = {eps:<6g} M = {res.pruned.M:3d}  error = {res.final_error:.2e}  "
          f"max drift at probes = {drift:.2e}")
