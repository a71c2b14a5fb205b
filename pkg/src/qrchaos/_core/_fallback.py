"""Numpy reference implementation of the reservoir-step kernels.

Semantics must match ``_kernels.pyx`` exactly; the parity tests compare
the two step by step.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def step_with_measure(rho, s, h0, g, tau, basis_ops):
    """One reservoir step plus full tomographic measurement.

    Parameters
    ----------
    rho : (N, N) complex density matrix
    s : (d',) complex unit vector (already amplitude-encoded)
    h0 : (N, N) real symmetric Hamiltonian for this step
    g, tau : self-potential strength and evolution interval
    basis_ops : (N^2, N, N) complex stacked measurement operators

    Returns (rho_next, r) with r the N^2 real expectation values.
    """
    n = rho.shape[0]
    d = s.shape[0]
    m = n // d
    # input replacement
    sigma = rho.reshape(d, m, d, m).trace(axis1=0, axis2=2)
    rho1 = np.kron(np.outer(s, s.conj()), sigma)
    # frozen self-potential
    h = h0.astype(complex, copy=True)
    np.fill_diagonal(h, np.diag(h0) - g * rho1.diagonal().real)
    # unitary evolution
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * tau)) @ v.conj().T
    rho2 = u @ rho1 @ u.conj().T
    rho2 = 0.5 * (rho2 + rho2.conj().T)
    rho2 /= rho2.trace().real
    r = np.einsum("oij,ji->o", basis_ops, rho2).real
    return rho2, r


def chain_teacher(rho, s_stack, h0_stack, g, tau, basis_ops):
    """Run a teacher-forced chain of steps, collecting all measurements.

    ``s_stack`` is (M, d') complex, ``h0_stack`` is (M, N, N) real.
    Returns (rho_final, R) with R of shape (M, N^2).
    """
    steps = s_stack.shape[0]
    n = rho.shape[0]
    out = np.empty((steps, n * n))
    for k in range(steps):
        rho, out[k] = step_with_measure(rho, s_stack[k], h0_stack[k], g, tau, basis_ops)
    return rho, out
