import math

import numpy as np
import pytest
import scipy.stats

from jdgen.errors import ConfigError, TrainingDiverged
from jdgen.kernels import KernelTable, conditional_score_batch, g1_hat
from jdgen.levy_noise import ModelConfig, sample_alpha_stable_isotropic
from jdgen.score_model import forward, init_params, loss_and_grad
from jdgen.special_math import make_rng
from jdgen.training import TrainConfig, dsm_minibatch, sample_forward_state, train

N_MC = 100_000


class TestForwardState:
    def test_short_time_returns_start(self, cfg_default):
        y0 = np.array([1.5, -2.0])
        y = sample_forward_state(y0, 1e-9, cfg_default, make_rng(1))
        assert np.max(np.abs(y - y0)) < 1e-4

    def test_ou_moments(self):
        cfg = ModelConfig(lam=0.0)
        y0 = np.array([2.0, -1.0])
        draws = sample_forward_state(y0, 1.0, cfg, make_rng(2), size=N_MC)
        mean_want = y0 * math.exp(-0.5)
        var_want = 1.0 - math.exp(-1.0)
        se = math.sqrt(var_want / N_MC)
        assert np.max(np.abs(draws.mean(axis=0) - mean_want)) < 3 * se
        assert draws.var(axis=0) == pytest.approx([var_want] * 2, rel=0.02)

    def test_cf_matches_g1_hat(self, cfg_default):
        y0 = np.array([1.0, 1.0])
        t = 10.0
        draws = sample_forward_state(y0, t, cfg_default, make_rng(3), size=N_MC)
        centered = draws - y0 * math.exp(-0.5 * t)
        for k in (0.5, 1.0, 2.0):
            vals = np.cos(k * centered[:, 0])
            emp, se = vals.mean(), vals.std() / math.sqrt(N_MC)
            assert abs(emp - g1_hat(k, t, cfg_default)) < 3 * se

    def test_markov_composition(self, cfg_default):
        # one exact 5.0 transition vs two exact 2.5 transitions
        y0 = np.array([1.0, -1.0])
        one = sample_forward_state(y0, 5.0, cfg_default, make_rng(4), size=N_MC)
        rng = make_rng(5)
        half = sample_forward_state(y0, 2.5, cfg_default, rng, size=N_MC)
        two = sample_forward_state(half, 2.5, cfg_default, rng)
        for c in range(2):
            assert scipy.stats.ks_2samp(one[:, c], two[:, c]).pvalue > 1e-3

    def test_rejects_nonpositive_time(self, cfg_default):
        with pytest.raises(ValueError):
            sample_forward_state(np.zeros(2), 0.0, cfg_default, make_rng(0))


class TestDsmMinibatch:
    def test_loss_nonnegative(self, cfg_default, table_default):
        params = init_params(cfg_default, 1)
        rng = make_rng(6)
        batch = rng.standard_normal((64, 2))
        loss, _ = dsm_minibatch(params, batch, table_default, cfg_default, rng)
        assert loss >= 0.0

    def test_zero_targets_reduce_to_network_norm(self, cfg_default):
        # with all regression targets zero the loss is mean ||s||^2
        params = init_params(cfg_default, 2)
        rng = make_rng(7)
        x = rng.standard_normal((32, 2))
        t = rng.uniform(cfg_default.t_min, cfg_default.T, 32)
        loss, _ = loss_and_grad(params, x, t, np.zeros((32, 2)))
        out = forward(params, x, t)
        assert loss == pytest.approx(float((out * out).sum(axis=1).mean()), rel=1e-12)

    def test_gradient_check_frozen_draws(self, cfg_default, table_default):
        # finite differences through the full minibatch loss with the
        # stochastic draws pinned by reseeding
        params = init_params(cfg_default, 3)
        data = make_rng(8).standard_normal((16, 2))

        def loss_at(p):
            return dsm_minibatch(p, data, table_default, cfg_default, make_rng(99))[0]

        _, (gw, gb) = dsm_minibatch(params, data, table_default, cfg_default, make_rng(99))
        rng = make_rng(9)
        h = 1e-5
        for li in (0, 2, 4):
            for _ in range(4):
                i = int(rng.integers(gw[li].shape[0]))
                j = int(rng.integers(gw[li].shape[1]))
                p = params.copy()
                p.weights[li][i, j] += h
                up = loss_at(p)
                p.weights[li][i, j] -= 2 * h
                dn = loss_at(p)
                num = (up - dn) / (2 * h)
                assert abs(gw[li][i, j] - num) < 1e-4 * max(abs(num), abs(gw[li][i, j]), 1e-6)

    def test_empty_batch_rejected(self, cfg_default, table_default):
        params = init_params(cfg_default, 1)
        with pytest.raises(ValueError):
            dsm_minibatch(params, np.zeros((0, 2)), table_default, cfg_default, make_rng(0))


class TestTargetFiniteness:
    def test_million_triples_finite(self, cfg_default, table_default):
        rng = make_rng(10)
        y0 = sample_alpha_stable_isotropic(1.7, 2, rng, size=1_000_000)
        t = rng.uniform(cfg_default.t_min, cfg_default.T, 1_000_000)
        y = sample_forward_state(y0, t, cfg_default, rng)
        targets = conditional_score_batch(y, y0, t, table_default)
        assert np.all(np.isfinite(targets))


class TestTrain:
    def test_zero_epochs_returns_init(self, cfg_default, table_default):
        data = make_rng(11).standard_normal((512, 2))
        tcfg = TrainConfig(n_train=512, batch_size=128, n_epochs=0, seed=21)
        params, history = train(data, cfg_default, tcfg, table_default)
        from jdgen.special_math import derive_rng

        expect = init_params(cfg_default, derive_rng(21, 0).integers(2**63))
        assert all(np.array_equal(a, b) for a, b in zip(params.weights, expect.weights))
        assert history.epoch_loss == []

    def test_loss_decreases_on_heavy_tailed_data(self, cfg_default, table_default):
        from jdgen.evaluation import make_target_dataset

        data = make_target_dataset(1.7, 2, 4000, seed=31)
        tcfg = TrainConfig(n_train=4000, batch_size=256, n_epochs=10, seed=32)
        _, history = train(data, cfg_default, tcfg, table_default)
        assert history.epoch_loss[-1] < history.epoch_loss[0]
        assert np.isfinite(history.final_loss)

    def test_same_seed_identical_history(self, cfg_default, table_default):
        data = make_rng(12).standard_normal((1024, 2))
        tcfg = TrainConfig(n_train=1024, batch_size=256, n_epochs=3, seed=5)
        _, h1 = train(data, cfg_default, tcfg, table_default)
        _, h2 = train(data, cfg_default, tcfg, table_default)
        assert h1.epoch_loss == h2.epoch_loss

    def test_gaussian_score_recovery(self, cfg_gauss, table_gauss):
        # unit-variance data with D=1 keeps the marginal N(0, I) for all t,
        # so the learned field should approach -x/2
        data = make_rng(13).standard_normal((8000, 2))
        tcfg = TrainConfig(n_train=8000, batch_size=256, n_epochs=50, seed=14)
        params, _ = train(data, cfg_gauss, tcfg, table_gauss)
        g = np.linspace(-3.0, 3.0, 20)
        xx, yy = np.meshgrid(g, g)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        pred = forward(params, pts, np.full(len(pts), 5.0))
        ref = -0.5 * pts
        rel = np.linalg.norm(pred - ref) / np.linalg.norm(ref)
        assert rel < 0.15

    def test_dataset_size_mismatch_rejected(self, cfg_default, table_default):
        data = np.zeros((100, 2))
        tcfg = TrainConfig(n_train=200, batch_size=50, n_epochs=1, seed=0)
        with pytest.raises(ConfigError):
            train(data, cfg_default, tcfg, table_default)

    def test_divergence_reported_with_location(self, cfg_default, table_default):
        # a corrupted kernel table poisons the targets; training must abort
        bad = KernelTable(
            table_default.t_grid,
            table_default.x_grid,
            table_default.g1_values,
            np.full_like(table_default.g2_values, np.nan),
            table_default.fingerprint,
        )
        data = make_rng(15).standard_normal((256, 2))
        tcfg = TrainConfig(n_train=256, batch_size=128, n_epochs=1, seed=1)
        with pytest.raises(TrainingDiverged) as err:
            train(data, cfg_default, tcfg, bad)
        assert err.value.epoch == 0
        assert err.value.batch == 0

    def test_batch_size_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(n_train=100, batch_size=200)
