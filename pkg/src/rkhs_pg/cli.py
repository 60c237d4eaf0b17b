"""Command-line front end.

    rkhs-pg train|eval|prune|constants|plot-data --config PATH [--out DIR]
            [--seed U64] [--overrides k=v ...] [--checkpoint PATH] [--epsilon F]

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, TrainConfig, build_config, parse_config
from .constants import theoretical_constants
from .io import MetricsWriter, load_checkpoint, read_metrics_csv, save_checkpoint
from .kernels import hilbert_norm
from .komp import komp
from .rng import stream
from .training import evaluate_policy, initial_policy, make_environment, train

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5,
        )
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _load_config(args, required=True) -> TrainConfig | None:
    overrides = list(args.overrides or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.config is None:
        if required:
            raise ConfigError("config", "--config is required for this command")
        return None
    return parse_config(args.config, overrides)


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def run_train(args) -> int:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "manifest.json",
                {"config": config.echo(), "seed": config.seed, "version": version_string()})
    env = make_environment(config)
    echo = config.echo()
    with MetricsWriter(out / "metrics.csv") as writer:
        def on_episode(k, policy, rec):
            writer.write(rec)
            if (k + 1) % config.checkpoint_every == 0:
                save_checkpoint(out / "checkpoints" / f"episode_{k + 1:08d}.json", policy, echo, k + 1)

        policy, records = train(config, env, stream(config.seed, "train"),
                                reset_rng=stream(config.seed, "env"),
                                metric_rng=stream(config.seed, "eval"), callback=on_episode)
    save_checkpoint(out / "checkpoint.json", policy, echo, config.episodes)
    print(f"episodes={config.episodes} model_order={policy.mean.M}"
          + (f" avg_return={records[-1].avg_return:.6g}" if records else ""))
    return EXIT_OK


def run_eval(args) -> int:
    config = _load_config(args, required=False)
    if args.checkpoint:
        policy, doc = load_checkpoint(args.checkpoint)
        if config is None:
            if not doc.get("config_echo"):
                raise ConfigError("config", "checkpoint carries no config; pass --config")
            config = build_config({k: _to_text(v) for k, v in doc["config_echo"].items()})
    else:
        if config is None:
            raise ConfigError("config", "--config or --checkpoint is required")
        policy = initial_policy(config)
    env = make_environment(config)
    mean, se = evaluate_policy(env, policy, config.gamma, args.episodes, stream(config.seed, "eval"),
                               discounted=args.discounted)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "eval.json", {"episodes": args.episodes, "mean_return": mean,
                                    "std_error": se, "discounted": args.discounted})
    print(f"mean_return={mean!r} std_error={se!r}")
    return EXIT_OK


def _to_text(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, list):
        if v and isinstance(v[0], list):
            return "; ".join(", ".join(repr(float(x)) for x in row) for row in v)
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def run_prune(args) -> int:
    if args.checkpoint is None:
        raise ConfigError("checkpoint", "--checkpoint is required")
    if args.epsilon is None:
        raise ConfigError("epsilon", "--epsilon is required")
    if not args.epsilon >= 0:
        raise ConfigError("epsilon", "budget must be non-negative")
    policy, doc = load_checkpoint(args.checkpoint)
    res = komp(policy.mean, args.epsilon)
    check = hilbert_norm(res.pruned - policy.mean)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "pruned.json", policy.with_mean(res.pruned), doc.get("config_echo"),
                    doc.get("episode"))
    print(f"M_before={policy.mean.M} M_after={res.pruned.M} final_error={check!r}")
    return EXIT_OK


def run_constants(args) -> int:
    config = _load_config(args)
    env = make_environment(config)
    eps = config.epsilon if args.epsilon is None else args.epsilon
    c = theoretical_constants(env.spec.reward_bound, config.gamma, np.array(config.sigma),
                              env.spec.p, config.eta0, eps)
    for name in ("sigma_bound", "L1", "L2", "C", "radius"):
        print(f"{name}={getattr(c, name)!r}")
    return EXIT_OK


def run_plot_data(args) -> int:
    out = Path(args.out)
    metrics = Path(args.metrics) if args.metrics else out / "metrics.csv"
    records = read_metrics_csv(metrics)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "avg_return.dat", "w") as fa, open(out / "model_order.dat", "w") as fm:
        for rec in records:
            fa.write(f"{rec.episode} {rec.avg_return!r}\n")
            fm.write(f"{rec.episode} {rec.model_order}\n")
    return EXIT_OK


COMMANDS = {
    "train": run_train,
    "eval": run_eval,
    "prune": run_prune,
    "constants": run_constants,
    "plot-data": run_plot_data,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rkhs-pg", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--overrides", nargs="*", metavar="K=V", help="configuration overrides")
    p.add_argument("--checkpoint", help="checkpoint JSON (eval, prune)")
    p.add_argument("--epsilon", type=float, help="compression budget (prune, constants)")
    p.add_argument("--episodes", type=int, default=100, help="evaluation episodes (eval)")
    p.add_argument("--discounted", action="store_true", help="report discounted returns (eval)")
    p.add_argument("--metrics", help="metrics CSV (plot-data; default OUT/metrics.csv)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
