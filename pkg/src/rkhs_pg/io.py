"""Checkpoint (JSON) and metrics (CSV) files.

Floats are written with ``repr`` so every finite double round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .kernels import RkhsFunction
from .policy import GaussianPolicy
from .training import METRICS_HEADER, MetricsRecord


def checkpoint_dict(policy: GaussianPolicy, config_echo: dict | None = None,
                    episode: int | None = None) -> dict:
    doc = policy.mean.to_dict()
    doc["sigma"] = policy.sigma.tolist()
    doc["config_echo"] = config_echo or {}
    if episode is not None:
        doc["episode"] = episode
    return doc


def policy_from_dict(doc: dict) -> GaussianPolicy:
    return GaussianPolicy(RkhsFunction.from_dict(doc), np.array(doc["sigma"], dtype=float))


def save_checkpoint(path, policy: GaussianPolicy, config_echo: dict | None = None,
                    episode: int | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(checkpoint_dict(policy, config_echo, episode), indent=1) + "\n")


def load_checkpoint(path):
    """Return ``(policy, document)``."""
    doc = json.loads(Path(path).read_text())
    for key in ("n", "p", "bandwidths", "centers", "weights", "sigma"):
        if key not in doc:
            raise ValueError(f"checkpoint {path} lacks field {key!r}")
    return policy_from_dict(doc), doc


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class MetricsWriter:
    """Appends one CSV row per episode and flushes immediately."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(METRICS_HEADER)
        self._fh.flush()

    def write(self, rec: MetricsRecord) -> None:
        self._writer.writerow([_fmt(v) for v in rec.row()])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_metrics_csv(path, records) -> None:
    with MetricsWriter(path) as w:
        for rec in records:
            w.write(rec)


def read_metrics_csv(path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != METRICS_HEADER:
        raise ValueError(f"{path}: header must be {','.join(METRICS_HEADER)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(METRICS_HEADER):
            raise ValueError(f"{path}:{lineno}: expected {len(METRICS_HEADER)} fields")
        try:
            out.append(MetricsRecord(int(row[0]), float(row[1]), float(row[2]), int(row[3]),
                                     float(row[4]), int(row[5]), int(row[6]), int(row[7])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out
