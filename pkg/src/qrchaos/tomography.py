"""SU(d) operator basis, expectation-value measurement, and reconstruction.

The basis is the identity followed by the d^2 - 1 generalized Gell-Mann
generators: for each l = 2..d and j = 1..l-1 a symmetric and an
antisymmetric off-diagonal pair, and for each l a diagonal generator,
placed at indices (l-1)^2 + 2(j-1), (l-1)^2 + 2j - 1 and l^2 - 1.  For
d = 3 this is exactly the standard Gell-Mann ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import StateError


def su_generators(d: int) -> np.ndarray:
    """The d^2 - 1 traceless Hermitian generators of SU(d), stacked."""
    if d < 2:
        raise ValueError("d must be >= 2")
    gens = np.zeros((d * d - 1, d, d), dtype=complex)
    for l in range(2, d + 1):
        for j in range(1, l):
            sym = np.zeros((d, d), dtype=complex)
            sym[l - 1, j - 1] = 1.0
            sym[j - 1, l - 1] = 1.0
            gens[(l - 1) ** 2 + 2 * (j - 1) - 1] = sym
            anti = np.zeros((d, d), dtype=complex)
            anti[l - 1, j - 1] = -1.0j
            anti[j - 1, l - 1] = 1.0j
            gens[(l - 1) ** 2 + 2 * j - 1 - 1] = anti
        n = l - 1
        diag = np.zeros(d)
        diag[:n] = 1.0
        diag[n] = -n
        gens[l * l - 1 - 1] = np.sqrt(2.0 / (n * (n + 1))) * np.diag(diag)
    return gens


@dataclass(frozen=True)
class OperatorBasis:
    """Identity plus SU(d) generators; d^2 operators, identity first."""

    dim: int
    operators: np.ndarray  # (d^2, d, d) complex

    @classmethod
    @lru_cache(maxsize=None)
    def build(cls, d: int) -> "OperatorBasis":
        ops = np.empty((d * d, d, d), dtype=complex)
        ops[0] = np.eye(d)
        ops[1:] = su_generators(d)
        ops.setflags(write=False)
        return cls(d, ops)

    def __len__(self) -> int:
        return self.dim * self.dim


def measure_all(rho: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Expectation values tr(lambda_o rho) for every basis operator."""
    rho = np.asarray(rho)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(f"rho shape {rho.shape} does not match basis dim {basis.dim}")
    vals = np.einsum("oij,ji->o", basis.operators, rho)
    imag = np.max(np.abs(vals.imag))
    if imag > 1e-8:
        raise StateError(f"measurement has imaginary residue {imag:.3g}")
    return vals.real


def reconstruct(r: np.ndarray, basis: OperatorBasis) -> np.ndarray:
    """Inverse of :func:`measure_all`: rho = I/d + (1/2) sum r[m] lambda_m.

    Test utility; positivity is not enforced.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (len(basis),):
        raise ValueError(f"expected {len(basis)} coefficients, got {r.shape}")
    if abs(r[0] - 1.0) > 1e-8:
        raise ValueError(f"identity expectation must be 1, got {r[0]!r}")
    d = basis.dim
    rho = np.eye(d, dtype=complex) / d
    rho += 0.5 * np.einsum("o,oij->ij", r[1:], basis.operators[1:])
    return rho
