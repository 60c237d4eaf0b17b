import json

import numpy as np
import pytest

from rkhs_pg.io import (load_checkpoint, read_metrics_csv, save_checkpoint, write_metrics_csv)
from rkhs_pg.kernels import KernelSpec, RkhsFunction
from rkhs_pg.policy import GaussianPolicy
from rkhs_pg.training import METRICS_HEADER, MetricsRecord


def test_checkpoint_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    h = RkhsFunction(KernelSpec((0.15, 0.015)), rng.normal(size=(7, 2)) / 3, rng.normal(size=(7, 1)) * 1e-7)
    pol = GaussianPolicy(h, 1.3)
    path = tmp_path / "ck.json"
    save_checkpoint(path, pol, {"env_id": "mountain_car"}, episode=12)
    back, doc = load_checkpoint(path)
    assert np.array_equal(back.mean.centers, h.centers)
    assert np.array_equal(back.mean.weights, h.weights)
    assert np.array_equal(back.sigma, pol.sigma)
    assert doc["config_echo"] == {"env_id": "mountain_car"} and doc["episode"] == 12
    assert {"n", "p", "bandwidths", "centers", "weights", "sigma", "config_echo"} <= set(doc)


def test_checkpoint_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 1}))
    with pytest.raises(ValueError):
        load_checkpoint(path)


def test_metrics_csv_round_trip(tmp_path):
    recs = [MetricsRecord(0, -0.1, -0.1, 3, 0.1 + 0.2, 17, 0, 0),
            MetricsRecord(1, 99.9, 49.9, 4, 1e-300, 5, 1, 12)]
    path = tmp_path / "m.csv"
    write_metrics_csv(path, recs)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(METRICS_HEADER)
    assert lines[0] == "episode,return,avg_return,model_order,coeff_norm,q_steps,horizon_caps,wall_ms"
    assert read_metrics_csv(path) == recs


def test_metrics_csv_malformed(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("episode,return\n1,2\n")
    with pytest.raises(ValueError):
        read_metrics_csv(path)
    path.write_text(",".join(METRICS_HEADER) + "\n1,2,3\n")
    with pytest.raises(ValueError):
        read_metrics_csv(path)
    path.write_text(",".join(METRICS_HEADER) + "\n1,x,3,4,5,6,7,8\n")
    with pytest.raises(ValueError):
        read_metrics_csv(path)
