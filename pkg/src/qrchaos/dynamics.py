"""Chaotic benchmark systems: Lorenz63 and the double-scroll circuit.

Provides the vector fields, a fixed-step RK4 integrator with sub-stepping,
and z-score standardization fitted on a chosen segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import ConfigError, IntegrationError

LORENZ63_PARAMS = {"sigma": 10.0, "r": 28.0, "b": 8.0 / 3.0}
DOUBLESCROLL_PARAMS = {
    "d1": 1.2,
    "d2": 3.44,
    "d3": 0.193,
    "d4": 11.6,
    "d5": 2.25e-5,
}

# |d4 * dV| above this would overflow sinh; standardized attractor data
# stays far below it.
_SINH_GUARD = 700.0

# Escape threshold for the divergence guard, in standardized units.
DIVERGENCE_LIMIT = 1e6

DEFAULT_X0 = {
    "lorenz63": (1.0, 1.0, 1.0),
    "doublescroll": (0.3, 0.1, 0.05),
}


@dataclass(frozen=True)
class SystemSpec:
    """One of the two benchmark systems plus its sampling interval."""

    name: str
    tau: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in ("lorenz63", "doublescroll"):
            raise ConfigError(f"unknown system '{self.name}'")
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        defaults = LORENZ63_PARAMS if self.name == "lorenz63" else DOUBLESCROLL_PARAMS
        merged = {**defaults, **self.params}
        object.__setattr__(self, "params", merged)

    @property
    def dimension(self) -> int:
        return 3

    def rhs(self, state):
        if self.name == "lorenz63":
            return lorenz63_rhs(state, self.params)
        return doublescroll_rhs(state, self.params)


@dataclass
class Trajectory:
    """Sampled system states, optionally standardized.

    ``mean`` / ``std`` hold the per-component statistics of the fit segment
    when the trajectory has been standardized, else None.
    """

    states: np.ndarray
    tau: float
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.tau

    def destandardize(self) -> "Trajectory":
        if self.mean is None:
            return self
        return Trajectory(self.states * self.std + self.mean, self.tau)


def lorenz63_rhs(state, params=LORENZ63_PARAMS) -> np.ndarray:
    """Lorenz63 vector field at ``state`` = (X, Y, Z)."""
    x, y, z = np.asarray(state, dtype=float)
    if not np.isfinite([x, y, z]).all():
        raise ValueError("non-finite state passed to lorenz63_rhs")
    s, r, b = params["sigma"], params["r"], params["b"]
    return np.array([s * (y - x), x * (r - z) - y, x * y - b * z])


def doublescroll_rhs(state, params=DOUBLESCROLL_PARAMS) -> np.ndarray:
    """Double-scroll circuit vector field at ``state`` = (V1, V2, I)."""
    v1, v2, i = np.asarray(state, dtype=float)
    if not np.isfinite([v1, v2, i]).all():
        raise ValueError("non-finite state passed to doublescroll_rhs")
    d1, d2, d3 = params["d1"], params["d2"], params["d3"]
    d4, d5 = params["d4"], params["d5"]
    dv = v1 - v2
    if abs(d4 * dv) > _SINH_GUARD:
        raise ValueError(f"sinh argument {d4 * dv:.3g} would overflow")
    sh = 2.0 * d5 * np.sinh(d4 * dv)
    return np.array([v1 / d1 - dv / d2 - sh, dv / d2 + sh - i, v2 - d3 * i])


def rk4_step(rhs, x, h):
    """One classic 4th-order Runge-Kutta step of size ``h``."""
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h * k2)
    k4 = rhs(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(spec: SystemSpec, x0, n_steps: int, substeps: int = 1) -> Trajectory:
    """Integrate ``spec`` from ``x0`` for ``n_steps`` output samples.

    Output rows are spaced by ``spec.tau``; each output interval is covered
    by ``substeps`` internal RK4 steps of size tau/substeps.  Returns
    ``n_steps + 1`` rows including the initial condition.
    """
    if n_steps < 0:
        raise ConfigError("n_steps must be >= 0")
    if substeps < 1:
        raise ConfigError("substeps must be >= 1")
    x = np.asarray(x0, dtype=float)
    if x.shape != (spec.dimension,):
        raise ConfigError(f"x0 must have shape ({spec.dimension},)")
    h = spec.tau / substeps
    out = np.empty((n_steps + 1, spec.dimension))
    out[0] = x
    rhs = spec.rhs
    for k in range(1, n_steps + 1):
        for _ in range(substeps):
            x = rk4_step(rhs, x, h)
        if np.max(np.abs(x)) > DIVERGENCE_LIMIT:
            raise IntegrationError(f"trajectory diverged at step {k}")
        out[k] = x
    return Trajectory(out, spec.tau)


def standardize(traj: Trajectory, fit_range: tuple[int, int]) -> Trajectory:
    """Z-score each component using statistics from ``fit_range`` only.

    ``fit_range`` is a half-open (start, stop) row interval.  The fitted
    mean/std are applied to the whole trajectory and recorded on the result.
    """
    start, stop = fit_range
    if not (0 <= start < stop <= len(traj)):
        raise ConfigError(f"fit_range {fit_range} out of bounds for T={len(traj)}")
    seg = traj.states[start:stop]
    mean = seg.mean(axis=0)
    std = seg.std(axis=0)
    if np.any(std < 1e-12):
        bad = int(np.argmin(std))
        raise ValueError(f"component {bad} has (near-)zero variance over fit_range")
    return Trajectory((traj.states - mean) / std, traj.tau, mean=mean, std=std)


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write ``t,c0,c1,...`` rows at full double precision."""
    d = traj.states.shape[1]
    header = "t," + ",".join(f"c{i}" for i in range(d))
    data = np.column_stack([traj.times, traj.states])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def trajectory_from_csv(path, tau: float | None = None) -> Trajectory:
    """Read a trajectory CSV written by :func:`trajectory_to_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    if tau is None:
        tau = float(t[1] - t[0]) if len(t) > 1 else 1.0
    return Trajectory(data[:, 1:], tau)
