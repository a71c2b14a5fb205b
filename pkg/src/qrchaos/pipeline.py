"""End-to-end experiment: washout, teacher-forced collection, readout
training, closed-loop prediction, and metric evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _core
from .dynamics import DIVERGENCE_LIMIT, SystemSpec, Trajectory, integrate, standardize
from .exceptions import ConfigError, TrainingError
from .features import FeatureBuffer, FeatureConfig
from .hamiltonian import HamiltonianTemplate, assemble_h0
from .metrics import (
    MetricsReport,
    ami_first_minimum,
    lyapunov_rosenstein,
    nrmse_components,
    psd_method1,
    psd_method2,
)
from .reservoir import ReservoirConfig, amplitude_encode, check_state, initial_state
from .tomography import OperatorBasis


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    feature: FeatureConfig
    template: HamiltonianTemplate
    reservoir: ReservoirConfig
    washout: int
    train: int
    test: int
    ridge: float = 1e-8
    seed: int = 0
    x0: tuple = (1.0, 1.0, 1.0)
    substeps: int = 1
    horizon_threshold: float = 0.4
    embed_dim: int = 3
    ami_max_lag: int = 200
    ami_bins: int = 64

    def __post_init__(self):
        if self.washout < self.feature.warmup:
            raise ConfigError(
                f"washout {self.washout} shorter than feature warmup "
                f"{self.feature.warmup}"
            )
        width = self.reservoir.n**2 + 1
        if self.train < width:
            raise ConfigError(f"train {self.train} must exceed readout width {width}")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")

    @property
    def n_samples(self) -> int:
        return self.washout + self.train + self.test


@dataclass
class ReadoutModel:
    """Linear readout: outputs = w_out @ [1, r]."""

    w_out: np.ndarray  # (l, N^2 + 1), bias column first

    def predict(self, r: np.ndarray) -> np.ndarray:
        return self.w_out[:, 0] + self.w_out[:, 1:] @ r


@dataclass
class WarmState:
    """Reservoir + feature-buffer snapshot at the end of training."""

    rho: np.ndarray
    buffer: FeatureBuffer
    last_r: np.ndarray


@dataclass
class RunResult:
    predicted: Trajectory
    target: Trajectory
    train_nrmse: np.ndarray
    test_nrmse: np.ndarray
    valid_horizon: int
    metrics: MetricsReport
    g: float = 0.0


def generate_data(cfg: ExperimentConfig) -> Trajectory:
    """Integrate the configured system and standardize on washout+train."""
    traj = integrate(cfg.system, cfg.x0, cfg.n_samples, cfg.substeps)
    return standardize(traj, (0, cfg.washout + cfg.train))


def _h0_stack(traj_states: np.ndarray, cfg: ExperimentConfig):
    """Feature windows and Hamiltonians for a teacher-forced span.

    Inputs are rows 0 .. washout+train-1; rows before the feature warmup
    contribute no reservoir step.  Returns (start, s_stack, h0_stack,
    buffer) with the buffer left at the final teacher-forced input.
    """
    buf = FeatureBuffer(cfg.feature)
    n_teach = cfg.washout + cfg.train
    start = cfg.feature.warmup - 1
    n = cfg.reservoir.n
    s_stack = np.empty((n_teach - start, cfg.reservoir.d_in), dtype=complex)
    h0_stack = np.empty((n_teach - start, n, n))
    for k in range(n_teach):
        buf.push(traj_states[k])
        if k >= start:
            s_stack[k - start] = amplitude_encode(
                traj_states[k], cfg.reservoir.d_in
            )
            h0_stack[k - start] = assemble_h0(buf.features(), cfg.template)
    return start, s_stack, h0_stack, buf


def collect_states(traj: Trajectory, cfg: ExperimentConfig):
    """Teacher-forced run over washout + train.

    Returns (R, Y, warm): R is (train, N^2+1) with a leading ones column,
    Y is (train, d) of one-step-ahead targets, and ``warm`` snapshots the
    reservoir for closed-loop prediction.
    """
    if len(traj) < cfg.washout + cfg.train + 1:
        raise ConfigError("trajectory too short for washout + train (+1 target)")
    states = traj.states
    basis = OperatorBasis.build(cfg.reservoir.n)
    start, s_stack, h0_stack, buf = _h0_stack(states, cfg)
    rho = initial_state(cfg.reservoir.n)
    rho, measures = _core.chain_teacher(
        rho, s_stack, h0_stack, cfg.reservoir.g, cfg.reservoir.tau, basis.operators
    )
    check_state(rho, "after teacher-forced chain")
    r_train = measures[cfg.washout - start :]
    assert r_train.shape[0] == cfg.train
    big_r = np.column_stack([np.ones(cfg.train), r_train])
    big_y = states[cfg.washout + 1 : cfg.washout + cfg.train + 1]
    warm = WarmState(rho=rho, buffer=buf, last_r=measures[-1])
    return big_r, big_y, warm


def train_readout(big_r: np.ndarray, big_y: np.ndarray, ridge: float) -> ReadoutModel:
    """Minimum-norm (or ridge-regularized) least-squares readout.

    Solves min ||Y - R W||^2 + ridge ||W||^2 through an SVD-based solver;
    the duplicated bias/identity column makes R rank-deficient, which the
    minimum-norm solution absorbs.
    """
    if big_r.shape[0] != big_y.shape[0]:
        raise TrainingError("R and Y row counts differ")
    if big_r.shape[0] <= big_r.shape[1]:
        raise TrainingError("regression is not overdetermined")
    if ridge == 0.0:
        w, _, rank, _ = np.linalg.lstsq(big_r, big_y, rcond=None)
        if rank == 0:
            raise TrainingError("design matrix has rank 0")
    else:
        u, s, vt = np.linalg.svd(big_r, full_matrices=False)
        if s[0] <= 0:
            raise TrainingError("design matrix has rank 0")
        shrink = s / (s**2 + ridge)
        w = vt.T @ (shrink[:, None] * (u.T @ big_y))
    w_out = w.T
    if not np.all(np.isfinite(w_out)):
        raise TrainingError("non-finite readout weights")
    return ReadoutModel(w_out)


def predict_closed_loop(
    model: ReadoutModel, warm: WarmState, steps: int, cfg: ExperimentConfig
) -> np.ndarray:
    """Autonomous forecast: each output is fed back as the next input.

    Returns a (k, d) array with k <= steps; shorter only if the feedback
    loop diverged past the guard threshold.
    """
    basis = OperatorBasis.build(cfg.reservoir.n)
    rho = warm.rho.copy()
    buf = warm.buffer.copy()
    r = warm.last_r
    out = np.empty((steps, cfg.feature.dim))
    for k in range(steps):
        y = model.predict(r)
        if np.max(np.abs(y)) > DIVERGENCE_LIMIT:
            return out[:k]
        out[k] = y
        buf.push(y)
        h0 = assemble_h0(buf.features(), cfg.template)
        s = amplitude_encode(y, cfg.reservoir.d_in)
        rho, r = _core.step_with_measure(
            rho, s, h0, cfg.reservoir.g, cfg.reservoir.tau, basis.operators
        )
    return out


def valid_horizon(
    pred: np.ndarray, target: np.ndarray, threshold: float
) -> int:
    """Steps until the per-step RMS component error first exceeds threshold."""
    k = min(len(pred), len(target))
    if k == 0:
        return 0
    err = np.sqrt(np.mean((pred[:k] - target[:k]) ** 2, axis=1))
    above = np.nonzero(err > threshold)[0]
    return int(above[0]) if above.size else k


def run_experiment(cfg: ExperimentConfig, compute_metrics: bool = True) -> RunResult:
    """Full pipeline on the configured system; deterministic given the seed."""
    traj = generate_data(cfg)
    big_r, big_y, warm = collect_states(traj, cfg)
    model = train_readout(big_r, big_y, cfg.ridge)
    fit = big_r @ model.w_out.T
    train_err = nrmse_components(fit, big_y)
    pred = predict_closed_loop(model, warm, cfg.test, cfg)
    # pred[0] forecasts the sample right after the last teacher-forced input
    t0 = cfg.washout + cfg.train
    target = traj.states[t0 : t0 + len(pred)]
    horizon = valid_horizon(pred, target, cfg.horizon_threshold)
    test_err = (
        nrmse_components(pred, target)
        if len(pred)
        else np.full(cfg.feature.dim, np.inf)
    )
    tau = cfg.system.tau
    report = MetricsReport(nrmse=test_err)
    if compute_metrics and len(pred) > 2 * cfg.ami_max_lag:
        tgt_x = target[:, 0]
        prd_x = pred[:, 0]
        delay = ami_first_minimum(tgt_x, cfg.ami_max_lag, cfg.ami_bins)
        report.ami_delay = delay
        report.lyapunov_target = lyapunov_rosenstein(
            tgt_x, delay, cfg.embed_dim, sample_dt=tau
        )
        report.lyapunov_predicted = lyapunov_rosenstein(
            prd_x, delay, cfg.embed_dim, sample_dt=tau
        )
        z = cfg.feature.dim - 1
        report.psd1_target = psd_method1(target[:, 0], tau)
        report.psd1_predicted = psd_method1(pred[:, 0], tau)
        report.psd2_target = psd_method2(target[:, z], tau)
        report.psd2_predicted = psd_method2(pred[:, z], tau)
    return RunResult(
        predicted=Trajectory(pred, tau, mean=traj.mean, std=traj.std),
        target=Trajectory(target, tau, mean=traj.mean, std=traj.std),
        train_nrmse=train_err,
        test_nrmse=test_err,
        valid_horizon=horizon,
        metrics=report,
        g=cfg.reservoir.g,
    )


def calibrate_g(
    cfg: ExperimentConfig,
    grid=None,
    holdout: int = 500,
) -> tuple[float, list[tuple[float, int]]]:
    """Pick g from a logarithmic grid by held-out closed-loop horizon.

    The last ``holdout`` training samples are withheld; for each candidate
    the readout is trained on the remainder and the closed-loop valid
    horizon on the holdout is scored.  Returns (best_g, [(g, horizon)]).
    """
    if grid is None:
        grid = np.logspace(-2, 3, 13)
    if holdout >= cfg.train - (cfg.reservoir.n**2 + 1):
        raise ConfigError("holdout leaves too few training samples")
    base = replace(
        cfg,
        train=cfg.train - holdout,
        test=holdout,
    )
    scores = []
    for g in grid:
        trial = replace(
            base, reservoir=replace(base.reservoir, g=float(g))
        )
        res = run_experiment(trial, compute_metrics=False)
        scores.append((float(g), res.valid_horizon))
    best = max(scores, key=lambda t: t[1])
    return best[0], scores
