"""Per-step Hamiltonian assembly.

Feature values fill the upper triangle of an active block row-major
(left to right, top to bottom); leftover slots take a fill constant; the
diagonal comes from the template.  The active block may be embedded with a
zero border inside a larger total matrix.  The effective Hamiltonian adds
the nonlinear self-potential -g * Diag(rho_diag).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError


def active_dimension(q_k: int) -> int:
    """Smallest block size N with (N-1)(N-2)/2 < q_k <= N(N-1)/2."""
    if q_k < 1:
        raise ValueError("q_k must be >= 1")
    n = 2
    while n * (n - 1) // 2 < q_k:
        n += 1
    return n


def default_total_dimension(n_active: int, d_pad: int = 4) -> int:
    """Smallest power of two >= n_active that is a multiple of d_pad."""
    n = 1
    while n < n_active or n % d_pad != 0:
        n *= 2
    return n


@dataclass(frozen=True)
class HamiltonianTemplate:
    """Static layout into which per-step feature values are written."""

    n_features: int
    n_active: int
    n_total: int
    active_offset: int
    diagonal: np.ndarray
    fill_value: float | None = None

    def __post_init__(self):
        n_slots = self.n_active * (self.n_active - 1) // 2
        n_lower = (self.n_active - 1) * (self.n_active - 2) // 2
        if not (n_lower < self.n_features <= n_slots):
            raise ConfigError(
                f"{self.n_features} features do not fit an active block of "
                f"size {self.n_active} (needs ({n_lower}, {n_slots}])"
            )
        if self.n_features < n_slots and self.fill_value is None:
            raise ConfigError(
                f"{n_slots - self.n_features} unused slots require a fill value"
            )
        if self.active_offset < 0 or self.active_offset + self.n_active > self.n_total:
            raise ConfigError("active block does not fit inside the total matrix")
        diag = np.asarray(self.diagonal, dtype=float)
        if diag.shape != (self.n_active,):
            raise ConfigError(
                f"diagonal must have {self.n_active} entries, got {diag.shape}"
            )
        object.__setattr__(self, "diagonal", diag)

    @classmethod
    def for_features(
        cls,
        n_features: int,
        diagonal,
        d_pad: int = 4,
        n_total: int | None = None,
        active_offset: int | None = None,
        fill_value: float | None = None,
    ) -> "HamiltonianTemplate":
        """Derive block/total sizes from the feature count."""
        n_active = active_dimension(n_features)
        if n_total is None:
            n_total = default_total_dimension(n_active, d_pad)
        if active_offset is None:
            active_offset = (n_total - n_active) // 2
        diag = np.asarray(diagonal, dtype=float)
        if diag.ndim == 0:
            diag = np.full(n_active, float(diag))
        return cls(n_features, n_active, n_total, active_offset, diag, fill_value)

    def slot_positions(self) -> np.ndarray:
        """(row, col) of the upper-triangle slots in row-major fill order."""
        pos = [
            (i, j)
            for i in range(self.n_active)
            for j in range(i + 1, self.n_active)
        ]
        return np.array(pos, dtype=np.intp)


def assemble_h0(features: np.ndarray, tmpl: HamiltonianTemplate) -> np.ndarray:
    """Build the symmetric H0 for one step's feature vector."""
    features = np.asarray(features, dtype=float)
    if features.shape != (tmpl.n_features,):
        raise ConfigError(
            f"feature vector has {features.shape} entries, template expects "
            f"{tmpl.n_features}"
        )
    na = tmpl.n_active
    n_slots = na * (na - 1) // 2
    vals = np.empty(n_slots)
    vals[: tmpl.n_features] = features
    if n_slots > tmpl.n_features:
        vals[tmpl.n_features :] = tmpl.fill_value
    block = np.zeros((na, na))
    iu, ju = np.triu_indices(na, k=1)
    block[iu, ju] = vals
    block += block.T
    block[np.diag_indices(na)] = tmpl.diagonal
    h0 = np.zeros((tmpl.n_total, tmpl.n_total))
    o = tmpl.active_offset
    h0[o : o + na, o : o + na] = block
    return h0


def effective_hamiltonian(h0: np.ndarray, rho_diag: np.ndarray, g: float) -> np.ndarray:
    """H = H0 - g * Diag(rho_diag), the frozen nonlinear self-potential."""
    rho_diag = np.asarray(rho_diag, dtype=float)
    if rho_diag.shape != (h0.shape[0],):
        raise ValueError("rho_diag length does not match H0")
    if rho_diag.min() < -1e-10 or rho_diag.max() > 1 + 1e-10:
        raise ValueError("rho_diag entries outside [0, 1]")
    if abs(rho_diag.sum() - 1.0) > 1e-8:
        raise ValueError(f"rho_diag sums to {rho_diag.sum():.12g}, expected 1")
    h = h0.astype(float, copy=True)
    np.fill_diagonal(h, np.diag(h0) - g * rho_diag)
    return h
