"""Readout training, state collection, and the end-to-end experiment."""

from dataclasses import replace

import numpy as np
import pytest

from qrchaos.config import load_config, preset_path
from qrchaos.exceptions import ConfigError, TrainingError
from qrchaos.pipeline import (
    ReadoutModel,
    calibrate_g,
    collect_states,
    generate_data,
    predict_closed_loop,
    run_experiment,
    train_readout,
    valid_horizon,
)


@pytest.fixture(scope="module")
def smoke_cfg():
    cfg, _ = load_config(preset_path("lorenz63"))
    return replace(cfg, washout=100, train=500, test=100)


class TestTrainReadout:
    def test_matches_normal_equations(self, rng):
        # ridge > 0: w = (R^T R + ridge I)^-1 R^T y, solved independently
        big_r = rng.normal(size=(200, 12))
        big_y = rng.normal(size=(200, 3))
        ridge = 0.5
        model = train_readout(big_r, big_y, ridge)
        gram = big_r.T @ big_r + ridge * np.eye(12)
        expected = np.linalg.solve(gram, big_r.T @ big_y).T
        np.testing.assert_allclose(model.w_out, expected, rtol=1e-8)

    def test_least_squares_without_ridge(self, rng):
        big_r = rng.normal(size=(100, 5))
        big_y = rng.normal(size=(100, 2))
        model = train_readout(big_r, big_y, 0.0)
        expected = np.linalg.solve(big_r.T @ big_r, big_r.T @ big_y).T
        np.testing.assert_allclose(model.w_out, expected, rtol=1e-8)

    def test_min_norm_on_duplicate_columns(self, rng):
        # duplicated column makes the design rank-deficient; the solution
        # must stay finite and match the pseudoinverse
        base = rng.normal(size=(50, 1))
        big_r = np.column_stack([base, base])
        big_y = rng.normal(size=(50, 1))
        model = train_readout(big_r, big_y, 0.0)
        assert np.all(np.isfinite(model.w_out))
        expected = (np.linalg.pinv(big_r) @ big_y).T
        np.testing.assert_allclose(model.w_out, expected, rtol=1e-8, atol=1e-10)

    def test_validation(self, rng):
        with pytest.raises(TrainingError, match="row"):
            train_readout(rng.normal(size=(10, 3)), rng.normal(size=(9, 2)), 0.0)
        with pytest.raises(TrainingError, match="overdetermined"):
            train_readout(rng.normal(size=(3, 3)), rng.normal(size=(3, 2)), 0.0)

    def test_predict(self):
        model = ReadoutModel(np.array([[1.0, 2.0, 3.0]]))
        np.testing.assert_allclose(model.predict(np.array([10.0, 100.0])), [321.0])


class TestCollect:
    def test_shapes_and_bias_column(self, smoke_cfg):
        traj = generate_data(smoke_cfg)
        assert len(traj) == smoke_cfg.n_samples + 1
        big_r, big_y, warm = collect_states(traj, smoke_cfg)
        n = smoke_cfg.reservoir.n
        assert big_r.shape == (500, n * n + 1)
        assert big_y.shape == (500, 3)
        np.testing.assert_array_equal(big_r[:, 0], np.ones(500))
        # identity expectation duplicates the bias column
        np.testing.assert_allclose(big_r[:, 1], np.ones(500), atol=1e-10)
        # targets are the one-step-ahead samples
        np.testing.assert_array_equal(big_y, traj.states[101:601])
        assert warm.rho.shape == (n, n)
        assert warm.last_r.shape == (n * n,)

    def test_too_short_trajectory(self, smoke_cfg):
        from qrchaos.dynamics import Trajectory

        traj = generate_data(smoke_cfg)
        short = Trajectory(traj.states[:600], traj.tau)
        with pytest.raises(ConfigError, match="short"):
            collect_states(short, smoke_cfg)


class TestValidHorizon:
    def test_threshold_crossing(self):
        target = np.zeros((5, 3))
        pred = np.zeros((5, 3))
        pred[3:] = 1.0  # RMS error jumps to 1 at step 3
        assert valid_horizon(pred, target, 0.4) == 3
        assert valid_horizon(pred, target, 2.0) == 5
        assert valid_horizon(pred[:0], target, 0.4) == 0


class TestEndToEnd:
    def test_smoke_run(self, smoke_cfg):
        res = run_experiment(smoke_cfg, compute_metrics=False)
        assert res.train_nrmse.shape == (3,)
        assert np.all(np.isfinite(res.train_nrmse))
        assert res.train_nrmse.max() < 1.0  # far better than predicting zero
        assert len(res.predicted) <= 100
        assert len(res.target) == len(res.predicted)
        assert 0 <= res.valid_horizon <= 100
        assert res.g == smoke_cfg.reservoir.g

    def test_deterministic(self, smoke_cfg):
        a = run_experiment(smoke_cfg, compute_metrics=False)
        b = run_experiment(smoke_cfg, compute_metrics=False)
        np.testing.assert_array_equal(a.predicted.states, b.predicted.states)
        np.testing.assert_array_equal(a.train_nrmse, b.train_nrmse)

    def test_divergent_feedback_truncates(self, smoke_cfg):
        traj = generate_data(smoke_cfg)
        _, _, warm = collect_states(traj, smoke_cfg)
        n = smoke_cfg.reservoir.n
        bad = ReadoutModel(np.full((3, n * n + 1), 1e7))
        out = predict_closed_loop(bad, warm, 50, smoke_cfg)
        assert len(out) < 50

    def test_washout_shorter_than_warmup_rejected(self, smoke_cfg):
        with pytest.raises(ConfigError, match="warmup"):
            replace(smoke_cfg, washout=1)

    def test_train_too_small_rejected(self, smoke_cfg):
        with pytest.raises(ConfigError, match="width"):
            replace(smoke_cfg, train=10)


class TestCalibration:
    def test_grid_search(self, smoke_cfg):
        best, table = calibrate_g(smoke_cfg, grid=[0.1, 1.0], holdout=100)
        assert best in (0.1, 1.0)
        assert [g for g, _ in table] == [0.1, 1.0]
        assert all(isinstance(h, int) and h >= 0 for _, h in table)

    def test_holdout_validation(self, smoke_cfg):
        with pytest.raises(ConfigError, match="holdout"):
            calibrate_g(smoke_cfg, grid=[1.0], holdout=490)
