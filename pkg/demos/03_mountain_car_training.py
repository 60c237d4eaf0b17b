"""
Projected policy gradient on mountain car
==========================================

Constant-step training with one pruning pass per episode. The model order
settles instead of growing with the episode count. A full-length run is a
single CLI call::

    rkhs-pg train --config src/rkhs_pg/configs/mountain_car.cfg --out runs/mc
    rkhs-pg plot-data --out runs/mc
"""

import numpy as np

from rkhs_pg import stream
from rkhs_pg.config import config_path, parse_config
from rkhs_pg.training import evaluate_policy, make_environment, train

cfg = parse_config(config_path("mountain_car"), ["episodes=1500"])
env = make_environment(cfg)
print("gamma", cfg.gamma, "sigma", cfg.sigma, "eta", cfg.eta0, "epsilon", cfg.epsilon)


def progress(k, policy, rec):
    if (k + 1) % 250 == 0:
        print(f"episode {k + 1:5d}  avg return {rec.avg_return:8.2f}  model order {rec.model_order:3d}")


policy, records = train(cfg, env, stream(cfg.seed, "train"), reset_rng=stream(cfg.seed, "env"),
                        callback=progress)

# %%
orders = np.array([r.model_order for r in records])
caps = sum(r.horizon_caps for r in records)
print(f"\nmodel order: max {orders.max()}, last 500 episodes in [{orders[-500:].min()}, {orders[-500:].max()}]")
print("horizon caps hit:", caps)

mean, se = evaluate_policy(env, policy, cfg.gamma, 50, stream(cfg.seed, "eval"))
print(f"evaluation over 50 episodes: {mean:.1f} +- {se:.1f}")
