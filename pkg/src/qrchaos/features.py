"""Constant/linear/nonlinear feature vectors built from a sliding window.

The linear block concatenates the current input with ``u - 1`` delayed
copies spaced ``q`` samples apart (newest first).  Each nonlinear block of
order ``s`` lists every distinct degree-s monomial over the linear block,
ordered by non-decreasing index tuple.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from .exceptions import ConfigError


@dataclass(frozen=True)
class FeatureConfig:
    dim: int
    taps: int = 2
    stride: int = 1
    orders: tuple[int, ...] = (2,)
    include_constant: bool = True
    constant_value: float = 1.0

    def __post_init__(self):
        if self.dim < 1 or self.taps < 1 or self.stride < 1:
            raise ConfigError("dim, taps and stride must all be >= 1")
        orders = tuple(self.orders)
        if any(s < 2 for s in orders):
            raise ConfigError("polynomial orders must be >= 2")
        if list(orders) != sorted(set(orders)):
            raise ConfigError("orders must be strictly increasing")
        object.__setattr__(self, "orders", orders)

    @property
    def n_linear(self) -> int:
        return self.dim * self.taps

    def n_nonlinear(self, order: int) -> int:
        # number of degree-s multisets over d*u variables
        return comb(self.n_linear + order - 1, order)

    @property
    def n_total(self) -> int:
        n = int(self.include_constant) + self.n_linear
        return n + sum(self.n_nonlinear(s) for s in self.orders)

    @property
    def warmup(self) -> int:
        """Samples that must be buffered before a window is available."""
        return (self.taps - 1) * self.stride + 1


def monomial_indices(n_vars: int, order: int) -> list[tuple[int, ...]]:
    """Index tuples (i1 <= i2 <= ... <= is) of all degree-``order`` monomials."""
    return list(combinations_with_replacement(range(n_vars), order))


_INDEX_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _monomial_index_array(n_vars: int, order: int) -> np.ndarray:
    key = (n_vars, order)
    if key not in _INDEX_CACHE:
        _INDEX_CACHE[key] = np.array(monomial_indices(n_vars, order), dtype=np.intp)
    return _INDEX_CACHE[key]


def linear_features(window: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    """Concatenate the ``u`` tapped states, newest first.

    ``window`` has shape (u, d) with row 0 the current input and row i the
    input ``i * q`` steps back.
    """
    window = np.asarray(window, dtype=float)
    if window.shape != (cfg.taps, cfg.dim):
        raise ValueError(
            f"window shape {window.shape} != ({cfg.taps}, {cfg.dim}); "
            "feature buffer not yet filled?"
        )
    return window.reshape(-1)


def nonlinear_features(linear: np.ndarray, order: int) -> np.ndarray:
    """All distinct degree-``order`` monomials of the linear block."""
    if order < 2:
        raise ValueError("order must be >= 2")
    linear = np.asarray(linear, dtype=float)
    idx = _monomial_index_array(linear.size, order)
    return np.prod(linear[idx], axis=1)


def assemble_features(window: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    """Full feature vector: [constant] ++ linear ++ nonlinear blocks."""
    lin = linear_features(window, cfg)
    parts = []
    if cfg.include_constant:
        parts.append(np.array([cfg.constant_value]))
    parts.append(lin)
    for s in cfg.orders:
        parts.append(nonlinear_features(lin, s))
    return np.concatenate(parts)


class FeatureBuffer:
    """Rolling buffer of recent inputs from which windows are sliced."""

    def __init__(self, cfg: FeatureConfig):
        self.cfg = cfg
        self._buf: deque[np.ndarray] = deque(maxlen=cfg.warmup)

    def push(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cfg.dim,):
            raise ValueError(f"expected a {self.cfg.dim}-vector, got shape {x.shape}")
        self._buf.append(x)

    @property
    def ready(self) -> bool:
        return len(self._buf) == self.cfg.warmup

    def window(self) -> np.ndarray:
        """Current (u, d) window, newest first."""
        if not self.ready:
            raise ValueError(
                f"feature buffer holds {len(self._buf)} of {self.cfg.warmup} samples"
            )
        q = self.cfg.stride
        rows = [self._buf[-1 - i * q] for i in range(self.cfg.taps)]
        return np.stack(rows)

    def features(self) -> np.ndarray:
        return assemble_features(self.window(), self.cfg)

    def copy(self) -> "FeatureBuffer":
        clone = FeatureBuffer(self.cfg)
        clone._buf = deque(self._buf, maxlen=self.cfg.warmup)
        return clone
