import json
import math
import subprocess
import sys
from collections import deque

import numpy as np
import pytest

from rkhs_pg.cli import main
from rkhs_pg.config import config_path
from rkhs_pg.io import read_metrics_csv, save_checkpoint
from rkhs_pg.kernels import KernelSpec, RkhsFunction, hilbert_norm
from rkhs_pg.policy import GaussianPolicy
from rkhs_pg.training import METRICS_HEADER

CHAIN = str(config_path("chain"))
MOUNTAIN_CAR = str(config_path("mountain_car"))


def run(*argv):
    return main([str(a) for a in argv])


def files_under(root):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


def test_train_smoke_and_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert run("train", "--config", CHAIN, "--out", out, "--overrides", "episodes=10",
               "checkpoint_every=5") == 0
    recs = read_metrics_csv(out / "metrics.csv")
    assert len(recs) == 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["config"]["episodes"] == 10 and manifest["version"]
    assert files_under(out) == ["checkpoint.json", "checkpoints/episode_00000005.json",
                                "checkpoints/episode_00000010.json", "manifest.json", "metrics.csv"]
    ck = json.loads((out / "checkpoints" / "episode_00000005.json").read_text())
    assert len(ck["centers"]) == recs[4].model_order
    assert "model_order=" in capsys.readouterr().out


def test_train_rerun_is_byte_identical(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert run("train", "--config", CHAIN, "--out", out, "--seed", 17,
                   "--overrides", "episodes=40", "schedule=constant", "epsilon=0.01") == 0
    for name in ("metrics.csv", "checkpoint.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    # idempotent on the same out_dir
    first = (outs[0] / "metrics.csv").read_bytes()
    run("train", "--config", CHAIN, "--out", outs[0], "--seed", 17,
        "--overrides", "episodes=40", "schedule=constant", "epsilon=0.01")
    assert (outs[0] / "metrics.csv").read_bytes() == first


def test_config_errors_exit_2(tmp_path, capsys):
    assert run("train", "--config", tmp_path / "missing.cfg", "--out", tmp_path) == 2
    assert run("train", "--config", CHAIN, "--out", tmp_path, "--overrides", "bogus=1") == 2
    assert "bogus" in capsys.readouterr().err
    assert run("constants", "--config", MOUNTAIN_CAR, "--overrides", "gamma=1.5") == 2
    assert "gamma" in capsys.readouterr().err
    assert run("train", "--out", tmp_path) == 2


def test_runtime_error_exit_3(tmp_path):
    spec = tmp_path / "broken.json"
    spec.write_text("{not json")
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"env_id = chain\nchain_spec = {spec}\nepisodes = 2\n")
    assert run("train", "--config", cfg, "--out", tmp_path / "o") == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run("plot-data", "--metrics", bad, "--out", tmp_path / "p") == 3


def test_constants_command(capsys):
    assert run("constants", "--config", MOUNTAIN_CAR) == 0
    vals = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert set(vals) == {"sigma_bound", "L1", "L2", "C", "radius"}
    assert all(math.isfinite(float(v)) and float(v) > 0 for v in vals.values())
    assert run("constants", "--config", MOUNTAIN_CAR, "--epsilon", "0") == 0
    vals = {k: float(v) for k, v in (line.split("=") for line in capsys.readouterr().out.split())}
    assert vals["radius"] == pytest.approx(math.sqrt(0.0005 * vals["C"]), rel=1e-12)


def make_checkpoint(path, seed=0, M=6):
    rng = np.random.default_rng(seed)
    h = RkhsFunction(KernelSpec((0.15, 0.015)), rng.normal(size=(M, 2)) * [0.5, 0.05],
                     rng.normal(size=(M, 1)))
    save_checkpoint(path, GaussianPolicy(h, 1.3), {})
    return h


def parse_prune(text):
    return {k: float(v) for k, v in (tok.split("=") for tok in text.split())}


def test_prune_command(tmp_path, capsys):
    ck = tmp_path / "ck.json"
    h = make_checkpoint(ck)
    assert run("prune", "--checkpoint", ck, "--epsilon", 0, "--out", tmp_path / "z") == 0
    out = parse_prune(capsys.readouterr().out)
    assert out["M_before"] == out["M_after"] == 6 and out["final_error"] == 0.0
    assert run("prune", "--checkpoint", ck, "--epsilon", hilbert_norm(h) * 1.001, "--out", tmp_path / "all") == 0
    assert parse_prune(capsys.readouterr().out)["M_after"] == 0
    for seed in range(5):
        ck = tmp_path / f"r{seed}.json"
        h = make_checkpoint(ck, seed=seed, M=10)
        eps = 0.3 * hilbert_norm(h)
        assert run("prune", "--checkpoint", ck, "--epsilon", eps, "--out", tmp_path / f"o{seed}") == 0
        out = parse_prune(capsys.readouterr().out)
        assert out["final_error"] <= eps
        pruned = json.loads((tmp_path / f"o{seed}" / "pruned.json").read_text())
        g = RkhsFunction.from_dict(pruned)
        assert hilbert_norm(g - h) <= eps + 1e-8
    assert run("prune", "--checkpoint", ck, "--epsilon", -1, "--out", tmp_path) == 2


def test_plot_data(tmp_path):
    out = tmp_path / "empty"
    out.mkdir()
    (out / "metrics.csv").write_text(",".join(METRICS_HEADER) + "\n")
    assert run("plot-data", "--out", out) == 0
    assert (out / "avg_return.dat").read_text() == "" and (out / "model_order.dat").read_text() == ""

    out = tmp_path / "three"
    out.mkdir()
    (out / "metrics.csv").write_text(",".join(METRICS_HEADER) + "\n"
                                     "0,1.0,1.0,3,0.5,10,0,0\n1,2.0,1.5,4,0.5,10,0,0\n2,6.0,3.0,2,0.5,10,0,0\n")
    assert run("plot-data", "--out", out) == 0
    assert (out / "avg_return.dat").read_text().splitlines() == ["0 1.0", "1 1.5", "2 3.0"]
    assert (out / "model_order.dat").read_text().splitlines() == ["0 3", "1 4", "2 2"]


def test_plot_data_average_recomputed_from_returns(tmp_path):
    out = tmp_path / "run"
    assert run("train", "--config", CHAIN, "--out", out, "--overrides", "episodes=150", "eval_window=20") == 0
    assert run("plot-data", "--out", out) == 0
    recs = read_metrics_csv(out / "metrics.csv")
    window = deque(maxlen=20)
    series = [line.split() for line in (out / "avg_return.dat").read_text().splitlines()]
    assert len(series) == 150
    for rec, (ep, avg) in zip(recs, series):
        window.append(rec.episode_return)
        assert int(ep) == rec.episode
        assert abs(float(avg) - sum(window) / len(window)) <= 1e-9


def test_eval_command(tmp_path, capsys):
    out = tmp_path / "run"
    run("train", "--config", CHAIN, "--out", out, "--overrides", "episodes=5", "max_horizon=50")
    capsys.readouterr()
    assert run("eval", "--checkpoint", out / "checkpoint.json", "--out", out, "--episodes", 20) == 0
    result = json.loads((out / "eval.json").read_text())
    assert result["episodes"] == 20 and 0 <= result["mean_return"] <= 50
    assert run("eval", "--config", CHAIN, "--out", tmp_path / "e", "--episodes", 5,
               "--overrides", "max_horizon=30") == 0


def test_writes_only_inside_out_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    run("train", "--config", CHAIN, "--out", "inside", "--overrides", "episodes=3")
    run("plot-data", "--out", "inside")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["inside"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rkhs_pg.cli", "constants", "--config", CHAIN,
                           "--overrides", "gamma=1.0"], capture_output=True, text=True)
    assert proc.returncode == 2 and "gamma" in proc.stderr
