"""Experiment configuration: a flat ``key = value`` file with typed validation.

Example::

    env_id = mountain_car
    gamma = 0.999
    sigma = 1.3
    bandwidths = 0.15, 0.015
    initial_centers = 0.65, -0.02; -0.35, 0.02
    initial_weights = 0.5; -0.5

Vectors are comma separated; lists of vectors are separated by ``;``.
Unknown keys are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

ENV_IDS = ("mountain_car", "cartpole", "chain")
SCHEDULES = ("constant", "power")
METRIC_ROLLOUTS = ("gradient", "episode")

DEFAULT_BANDWIDTHS = {
    "mountain_car": (0.15, 0.015),
    "cartpole": (0.3, 0.1, 0.1, 0.1),
    "chain": (0.5,),
}
DEFAULT_H0 = {
    "mountain_car": (((0.65, -0.02), (-0.35, 0.02)), ((0.5,), (-0.5,))),
}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class TrainConfig:
    env_id: str
    gamma: float = 0.99
    sigma: tuple[float, ...] = (1.0,)
    bandwidths: tuple[float, ...] | None = None
    eta0: float = 1e-3
    schedule: str = "constant"
    decay_exponent: float = 0.6
    epsilon: float = 0.0
    episodes: int = 1000
    seed: int = 0
    initial_centers: tuple[tuple[float, ...], ...] | None = None
    initial_weights: tuple[tuple[float, ...], ...] | None = None
    eval_window: int = 100
    max_horizon: int = 10_000
    legacy_q_scaling: bool = False
    checkpoint_every: int = 1000
    goal_position: float = 0.45
    chain_spec: str | None = None
    metric_rollout: str = "gradient"
    record_timing: bool = False

    def __post_init__(self):
        if self.env_id not in ENV_IDS:
            raise ConfigError("env_id", f"must be one of {ENV_IDS}, got {self.env_id!r}")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma", f"must lie in (0, 1), got {self.gamma}")
        if not self.sigma or not all(math.isfinite(s) and s > 0 for s in self.sigma):
            raise ConfigError("sigma", "entries must be positive")
        if self.bandwidths is None:
            object.__setattr__(self, "bandwidths", DEFAULT_BANDWIDTHS[self.env_id])
        n = len(DEFAULT_BANDWIDTHS[self.env_id])
        if len(self.bandwidths) != n or not all(b > 0 for b in self.bandwidths):
            raise ConfigError("bandwidths", f"need {n} positive values for {self.env_id}")
        if len(self.sigma) != 1:
            raise ConfigError("sigma", "all environments have scalar actions (p = 1)")
        if not (math.isfinite(self.eta0) and self.eta0 > 0):
            raise ConfigError("eta0", "must be positive")
        if self.schedule not in SCHEDULES:
            raise ConfigError("schedule", f"must be one of {SCHEDULES}")
        if self.schedule == "power" and not 0.5 < self.decay_exponent <= 1:
            raise ConfigError("decay_exponent", "must lie in (0.5, 1] for a diminishing schedule")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigError("epsilon", "must be non-negative")
        if self.schedule == "power" and self.epsilon > 0:
            raise ConfigError("epsilon", "pruning runs with the constant schedule only")
        for key in ("episodes", "eval_window", "max_horizon", "checkpoint_every"):
            v = getattr(self, key)
            if key == "episodes" and v == 0:
                continue
            if v < 1:
                raise ConfigError(key, "must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if self.metric_rollout not in METRIC_ROLLOUTS:
            raise ConfigError("metric_rollout", f"must be one of {METRIC_ROLLOUTS}")
        if (self.initial_centers is None) != (self.initial_weights is None):
            raise ConfigError("initial_weights", "initial_centers and initial_weights go together")
        if self.initial_centers is None:
            centers, weights = DEFAULT_H0.get(self.env_id, ((), ()))
            object.__setattr__(self, "initial_centers", centers)
            object.__setattr__(self, "initial_weights", weights)
        if len(self.initial_centers) != len(self.initial_weights):
            raise ConfigError("initial_weights", "need one weight per initial center")
        if any(len(c) != n for c in self.initial_centers):
            raise ConfigError("initial_centers", f"centers must have {n} coordinates")
        if any(len(w) != 1 for w in self.initial_weights):
            raise ConfigError("initial_weights", "weights must have 1 coordinate")

    def echo(self) -> dict:
        """Plain-data copy of every field, suitable for JSON."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _vectors(text: str) -> tuple[tuple[float, ...], ...]:
    return tuple(_floats(part) for part in text.split(";") if part.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_str(text: str):
    t = text.strip()
    return None if t in ("", "none") else t


PARSERS = {
    "env_id": str.strip,
    "gamma": float,
    "sigma": _floats,
    "bandwidths": _floats,
    "eta0": float,
    "schedule": str.strip,
    "decay_exponent": float,
    "epsilon": float,
    "episodes": int,
    "seed": int,
    "initial_centers": _vectors,
    "initial_weights": _vectors,
    "eval_window": int,
    "max_horizon": int,
    "legacy_q_scaling": _bool,
    "checkpoint_every": int,
    "goal_position": float,
    "chain_spec": _optional_str,
    "metric_rollout": str.strip,
    "record_timing": _bool,
}
assert set(PARSERS) == {f.name for f in dataclasses.fields(TrainConfig)}


def read_pairs(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + path.read_text())
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    return dict(parser["config"])


def build_config(pairs: dict[str, str], base_dir: Path | None = None) -> TrainConfig:
    kwargs = {}
    for key, raw in pairs.items():
        if key not in PARSERS:
            raise ConfigError(key, "unknown configuration key")
        try:
            kwargs[key] = PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None
    if "env_id" not in kwargs:
        raise ConfigError("env_id", "required")
    if kwargs.get("chain_spec") and base_dir is not None:
        p = Path(kwargs["chain_spec"])
        if not p.is_absolute():
            kwargs["chain_spec"] = str((base_dir / p).resolve())
    return TrainConfig(**kwargs)


def parse_config(path, overrides=()) -> TrainConfig:
    """Read ``path``, apply ``key=value`` overrides on top, validate."""
    pairs = read_pairs(path)
    for item in overrides:
        if "=" not in item:
            raise ConfigError("overrides", f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    return build_config(pairs, Path(path).resolve().parent)


def config_path(name: str) -> Path:
    """Location of a configuration shipped with the package (e.g. ``mountain_car``)."""
    return Path(__file__).parent / "configs" / f"{name}.cfg"
