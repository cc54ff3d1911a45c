import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from jdgen.config import RunConfig, dump_config, load_config
from jdgen.errors import ConfigError


def run_cli(args, cwd, env_extra=None, check=False):
    env = dict(os.environ)
    env.setdefault("JDGEN_THREADS", "2")
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "jdgen", *args],
        cwd=cwd,
        env=env,
        capture_output=True,
        text=True,
    )
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}):\n{proc.stdout}\n{proc.stderr}")
    return proc


def small_config(tmp_path, **overrides):
    cfg = {
        "model": {"n_grid": 60, "n_quad": 400},
        "train": {"n_train": 1280, "batch_size": 256, "n_epochs": 2, "seed": 11},
        "eval": {"n_gen": 1500, "n_runs": 1},
        "seed": 999,
        "workdir": str(tmp_path / "work"),
    }
    for key, val in overrides.items():
        if isinstance(val, dict):
            cfg.setdefault(key, {}).update(val)
        else:
            cfg[key] = val
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def sha256(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


class TestConfig:
    def test_round_trip_identity(self, tmp_path):
        cfg = RunConfig()
        path = tmp_path / "c.json"
        dump_config(cfg, path)
        again = load_config(path)
        assert again.to_dict() == cfg.to_dict()
        path2 = tmp_path / "c2.json"
        dump_config(again, path2)
        assert path.read_text() == path2.read_text()

    def test_defaults_match_baseline(self):
        cfg = RunConfig()
        assert cfg.model.to_dict()["lambda"] == 1.0
        assert cfg.train.n_train == 32000
        assert cfg.eval.n_gen == 25000 and cfg.eval.n_runs == 20

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"modell": {}}')
        with pytest.raises(ConfigError):
            load_config(path)

    def test_bad_json_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(path)


class TestExitCodes:
    def test_bad_config_exits_2(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"model": {"D": -1}}')
        proc = run_cli(["tabulate", "--config", str(path)], tmp_path)
        assert proc.returncode == 2

    def test_train_without_table_exits_2(self, tmp_path):
        cfg = small_config(tmp_path)
        proc = run_cli(["train", "--config", str(cfg), "--synthetic-alpha", "1.7"], tmp_path)
        assert proc.returncode == 2
        assert "kernel table" in proc.stderr

    def test_invalid_mode_exits_2(self, tmp_path):
        cfg = small_config(tmp_path)
        proc = run_cli(["generate", "--config", str(cfg), "--mode", "xyz"], tmp_path)
        assert proc.returncode == 2

    def test_numerical_failure_exits_3(self, tmp_path):
        # corrupt the table payload to force a NaN loss
        cfg_path = small_config(tmp_path)
        run_cli(["tabulate", "--config", str(cfg_path)], tmp_path, check=True)

        from jdgen.config import load_config as lc
        from jdgen.kernels import load_table, save_table

        run = lc(cfg_path)
        table_path = os.path.join(run.workdir, "kernel_table.jdlk")
        table = load_table(table_path, run.model)
        table.g2_values[:] = np.nan
        save_table(table, table_path)
        proc = run_cli(["train", "--config", str(cfg_path), "--synthetic-alpha", "1.7"], tmp_path)
        assert proc.returncode == 3
        assert "epoch" in proc.stderr


class TestTabulateCommand:
    def test_idempotent_unless_forced(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        table = tmp_path / "work" / "kernel_table.jdlk"
        digest = sha256(table)
        proc = run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        assert "up to date" in proc.stdout
        assert sha256(table) == digest
        proc = run_cli(["tabulate", "--config", str(cfg), "--force"], tmp_path, check=True)
        assert "wrote" in proc.stdout
        assert sha256(table) == digest

    def test_refinement_changes_little(self, tmp_path):
        # doubling k_max and n_quad barely moves the tabulated values
        cfg_a = small_config(tmp_path, model={"n_grid": 50, "n_quad": 2000, "k_max": 50.0})
        run_cli(["tabulate", "--config", str(cfg_a)], tmp_path, check=True)

        from jdgen.config import load_config as lc
        from jdgen.kernels import load_table, tabulate

        run = lc(cfg_a)
        coarse = load_table(os.path.join(run.workdir, "kernel_table.jdlk"), run.model)
        fine_cfg = lc(cfg_a).model
        fine_cfg.k_max = 100.0
        fine_cfg.n_quad = 4000
        fine = tabulate(fine_cfg)
        assert np.max(np.abs(fine.g1_values - coarse.g1_values)) < 1e-8


class TestPipelineCommands:
    @pytest.fixture()
    def trained(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        run_cli(["train", "--config", str(cfg), "--synthetic-alpha", "1.7"], tmp_path, check=True)
        return cfg

    def test_train_prints_epoch_losses(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        proc = run_cli(
            ["train", "--config", str(cfg), "--synthetic-alpha", "1.7"], tmp_path, check=True
        )
        assert "epoch 1/2" in proc.stdout and "epoch 2/2" in proc.stdout
        history = json.load(open(tmp_path / "work" / "train_history.json"))
        assert len(history["epoch_loss"]) == 2
        assert len(history["epoch_seconds"]) == 2
        assert history["final_loss"] == history["epoch_loss"][-1]

    def test_train_seed_reproducible(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        run_cli(["train", "--config", str(cfg), "--synthetic-alpha", "1.7"], tmp_path, check=True)
        first = sha256(tmp_path / "work" / "score_net.jdlw")
        run_cli(["train", "--config", str(cfg), "--synthetic-alpha", "1.7"], tmp_path, check=True)
        assert sha256(tmp_path / "work" / "score_net.jdlw") == first

    def test_zero_epochs_writes_initial_weights(self, tmp_path):
        cfg = small_config(tmp_path, train={"n_epochs": 0})
        run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        run_cli(["train", "--config", str(cfg), "--synthetic-alpha", "1.7"], tmp_path, check=True)

        from jdgen.config import load_config as lc
        from jdgen.score_model import init_params, load_params
        from jdgen.special_math import derive_rng

        run = lc(cfg)
        got = load_params(os.path.join(run.workdir, "score_net.jdlw"), run.model)
        expect = init_params(run.model, derive_rng(run.train.seed, 0).integers(2**63))
        assert all(np.array_equal(a, b) for a, b in zip(got.weights, expect.weights))

    def test_train_from_csv(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["tabulate", "--config", str(cfg)], tmp_path, check=True)
        data = np.random.default_rng(0).standard_normal((1280, 2))
        csv = tmp_path / "data.csv"
        np.savetxt(csv, data, delimiter=",")
        run_cli(["train", "--config", str(cfg), "--data", str(csv)], tmp_path, check=True)

    def test_generate_csv_shape_and_determinism(self, trained, tmp_path):
        run_cli(["generate", "--config", str(trained), "--mode", "sde", "--n", "1500"],
                tmp_path, check=True)
        out = tmp_path / "work" / "samples_sde.csv"
        first = sha256(out)
        samples = np.loadtxt(out, delimiter=",")
        assert samples.shape == (1500, 2)
        meta = json.load(open(tmp_path / "work" / "samples_sde.meta.json"))
        assert meta["mode"] == "sde" and meta["n_steps"] == 100
        run_cli(["generate", "--config", str(trained), "--mode", "sde", "--n", "1500"],
                tmp_path, check=True)
        assert sha256(out) == first

    def test_generate_requires_artifacts(self, tmp_path):
        cfg = small_config(tmp_path)
        proc = run_cli(["generate", "--config", str(cfg), "--mode", "ode"], tmp_path)
        assert proc.returncode == 2

    def test_evaluate_on_generated_csv(self, trained, tmp_path):
        run_cli(["generate", "--config", str(trained), "--mode", "ode", "--n", "1500"],
                tmp_path, check=True)
        proc = run_cli(
            ["evaluate", "--config", str(trained), "--gen",
             str(tmp_path / "work" / "samples_ode.csv"), "--n", "1500"],
            tmp_path, check=True,
        )
        assert "msle=" in proc.stdout


class TestReproduce:
    def test_single_run_null_stderr(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["reproduce", "--config", str(cfg), "--runs", "1"], tmp_path, check=True)
        metrics = json.load(open(tmp_path / "work" / "metrics_sde.json"))
        assert metrics["msle_stderr"] is None
        assert len(metrics["runs"]) == 1

    def test_resume_skips_completed_runs(self, tmp_path):
        cfg = small_config(tmp_path)
        run_cli(["reproduce", "--config", str(cfg), "--runs", "2"], tmp_path, check=True)
        work = tmp_path / "work"
        rec0 = work / "runs" / "ode_000.json"
        rec1 = work / "runs" / "ode_001.json"
        digest0 = sha256(rec0)
        stamp0 = rec0.stat().st_mtime_ns
        rec1.unlink()
        (work / "metrics_ode.json").unlink()
        proc = run_cli(["reproduce", "--config", str(cfg), "--runs", "2"], tmp_path, check=True)
        assert rec1.exists()
        assert sha256(rec0) == digest0
        assert rec0.stat().st_mtime_ns == stamp0
        metrics = json.load(open(work / "metrics_ode.json"))
        assert len(metrics["runs"]) == 2
        # completed stages are recorded for resumption
        manifest = json.load(open(work / "manifest.json"))
        assert manifest["stages"]["tabulate"] and manifest["stages"]["train"]
        assert manifest["stages"]["runs"] == {"ode": 2, "sde": 2}
        assert "weights up to date" in proc.stdout

    def test_summary_table_printed(self, tmp_path):
        cfg = small_config(tmp_path)
        proc = run_cli(["reproduce", "--config", str(cfg), "--runs", "1"], tmp_path, check=True)
        assert "SDE" in proc.stdout and "ODE" in proc.stdout and "MSLE" in proc.stdout

    def test_retrain_per_run(self, tmp_path):
        cfg = small_config(tmp_path)
        proc = run_cli(
            ["reproduce", "--config", str(cfg), "--runs", "1", "--retrain-per-run"],
            tmp_path, check=True,
        )
        assert "MSLE" in proc.stdout
        # no shared weights artifact is produced in this mode
        assert not (tmp_path / "work" / "score_net.jdlw").exists()


class TestStrictDeterminism:
    def test_artifacts_bit_identical_across_workdirs(self, tmp_path):
        digests = []
        for name in ("a", "b"):
            sub = tmp_path / name
            sub.mkdir()
            cfg = small_config(sub)
            run_cli(["tabulate", "--config", str(cfg), "--strict"], sub, check=True)
            run_cli(["train", "--config", str(cfg), "--synthetic-alpha", "1.7", "--strict"],
                    sub, check=True)
            run_cli(["generate", "--config", str(cfg), "--mode", "sde", "--n", "500", "--strict"],
                    sub, check=True)
            work = sub / "work"
            digests.append(tuple(
                sha256(work / f)
                for f in ("kernel_table.jdlk", "score_net.jdlw", "samples_sde.csv")
            ))
        assert digests[0] == digests[1]
