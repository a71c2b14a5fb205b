"""Quantum reservoir state and its per-step update.

One step: amplitude-encode the input, replace the first tensor factor of
the reservoir state (partial trace + tensor product), then evolve the
product state unitarily under the effective Hamiltonian for one interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, EncodingError, StateError
from .hamiltonian import effective_hamiltonian

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9


@dataclass(frozen=True)
class ReservoirConfig:
    n: int          # total Hilbert-space dimension N
    d_in: int       # padded input dimension d'
    tau: float      # evolution interval
    g: float        # self-potential strength

    def __post_init__(self):
        if self.n % self.d_in != 0:
            raise ConfigError(
                f"N={self.n} must be a multiple of the input dimension {self.d_in}"
            )
        if not self.tau > 0:
            raise ConfigError("tau must be positive")


def initial_state(n: int) -> np.ndarray:
    """Maximally mixed state I/N; the washout erases it."""
    return np.eye(n, dtype=complex) / n


def amplitude_encode(x, d_pad: int) -> np.ndarray:
    """Zero-pad ``x`` to length ``d_pad`` and normalize to a unit vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size > d_pad:
        raise ValueError(f"cannot encode shape {x.shape} into dimension {d_pad}")
    norm = np.linalg.norm(x)
    if norm <= 1e-12:
        raise EncodingError("input norm too small for amplitude encoding")
    out = np.zeros(d_pad, dtype=complex)
    out[: x.size] = x / norm
    return out


def partial_trace_first(rho: np.ndarray, d: int) -> np.ndarray:
    """Trace out the leading d-dimensional factor of an N x N state."""
    n = rho.shape[0]
    if rho.shape != (n, n) or n % d != 0:
        raise ValueError(f"cannot partial-trace shape {rho.shape} over d={d}")
    m = n // d
    return rho.reshape(d, m, d, m).trace(axis1=0, axis2=2)


def inject(rho: np.ndarray, x, cfg: ReservoirConfig) -> np.ndarray:
    """Input replacement: |S_k><S_k| tensor tr_1(rho)."""
    s = amplitude_encode(x, cfg.d_in)
    rho_in = np.outer(s, s.conj())
    return np.kron(rho_in, partial_trace_first(rho, cfg.d_in))


def evolve(rho: np.ndarray, h: np.ndarray, tau: float) -> np.ndarray:
    """Conjugate by exp(-i H tau) via Hermitian eigendecomposition."""
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * tau)) @ v.conj().T
    return u @ rho @ u.conj().T


def _tidy(rho: np.ndarray) -> np.ndarray:
    """Re-Hermitize and renormalize the trace after a step."""
    rho = 0.5 * (rho + rho.conj().T)
    return rho / rho.trace().real


def reservoir_step(
    rho: np.ndarray, x_k, h0: np.ndarray, cfg: ReservoirConfig
) -> np.ndarray:
    """One full update: inject, freeze the self-potential, evolve."""
    rho1 = inject(rho, x_k, cfg)
    h = effective_hamiltonian(h0, rho1.diagonal().real, cfg.g)
    return _tidy(evolve(rho1, h, cfg.tau))


def check_state(rho: np.ndarray, where: str = "") -> None:
    """Raise if ``rho`` violates a density-matrix invariant."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITICITY_TOL:
        raise StateError(f"Hermiticity residual {herm:.3g} {where}")
    tr = rho.trace()
    if abs(tr - 1.0) > TRACE_TOL:
        raise StateError(f"trace {tr:.12g} deviates from 1 {where}")
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < EIGENVALUE_FLOOR:
        raise StateError(f"negative eigenvalue {min_eig:.3g} {where}")
