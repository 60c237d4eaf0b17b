"""Sparse kernel policies trained by unbiased stochastic functional policy gradients."""

__version__ = "0.1.0"

from .config import ConfigError, TrainConfig, parse_config
from .constants import TheoreticalConstants, theoretical_constants
from .envs import CartPole, ChainMdp, ChainMdpSpec, MountainCar, make_env, value_iteration
from .estimators import estimate_q, estimate_u, sample_geometric, stochastic_gradient
from .kernels import (KernelSpec, RkhsFunction, add_scaled_kernel, evaluate, gram_matrix,
                      hilbert_norm, inner_product, kernel_eval)
from .komp import PruneResult, komp
from .policy import GaussianPolicy, sample_action, score_direction, symmetric_action
from .rng import stream
from .training import MetricsRecord, evaluate_policy, step_size, train, train_projected, train_unbiased

__all__ = [
    "CartPole", "ChainMdp", "ChainMdpSpec", "ConfigError", "GaussianPolicy", "KernelSpec",
    "MetricsRecord", "MountainCar", "PruneResult", "RkhsFunction", "TheoreticalConstants",
    "TrainConfig", "add_scaled_kernel", "estimate_q", "estimate_u", "evaluate", "evaluate_policy",
    "gram_matrix", "hilbert_norm", "inner_product", "kernel_eval", "komp", "make_env",
    "parse_config", "sample_action", "sample_geometric", "score_direction", "step_size",
    "stochastic_gradient", "stream", "symmetric_action", "theoretical_constants", "train",
    "train_projected", "train_unbiased", "value_iteration",
]
