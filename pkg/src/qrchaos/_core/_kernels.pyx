# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled reservoir-step kernels.

Mirrors ``_fallback.py``: input replacement, frozen-self-potential
Hermitian evolution via LAPACK zheevd, and tomographic measurement.
Matrix dimensions are small (N <= 16), so plain C loops are used for the
products instead of BLAS calls.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin
from libc.stdlib cimport free, malloc
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

BACKEND = "compiled"


cdef struct Work:
    double complex *h       # N*N, matrix handed to zheevd (column-major)
    double complex *u       # N*N evolution operator, row-major
    double complex *tmp     # N*N scratch
    double complex *rho1    # N*N post-injection state
    double complex *lwork_buf
    double *w               # N eigenvalues
    double *rwork
    int *iwork
    int lwork
    int lrwork
    int liwork


cdef int _work_alloc(Work *wk, int n) except -1:
    wk.lwork = 2 * n + n * n
    wk.lrwork = 1 + 5 * n + 2 * n * n
    wk.liwork = 3 + 5 * n
    wk.h = <double complex *> malloc(n * n * sizeof(double complex))
    wk.u = <double complex *> malloc(n * n * sizeof(double complex))
    wk.tmp = <double complex *> malloc(n * n * sizeof(double complex))
    wk.rho1 = <double complex *> malloc(n * n * sizeof(double complex))
    wk.lwork_buf = <double complex *> malloc(wk.lwork * sizeof(double complex))
    wk.w = <double *> malloc(n * sizeof(double))
    wk.rwork = <double *> malloc(wk.lrwork * sizeof(double))
    wk.iwork = <int *> malloc(wk.liwork * sizeof(int))
    if (wk.h == NULL or wk.u == NULL or wk.tmp == NULL or wk.rho1 == NULL or
            wk.lwork_buf == NULL or wk.w == NULL or wk.rwork == NULL or
            wk.iwork == NULL):
        raise MemoryError()
    return 0


cdef void _work_free(Work *wk) noexcept:
    free(wk.h)
    free(wk.u)
    free(wk.tmp)
    free(wk.rho1)
    free(wk.lwork_buf)
    free(wk.w)
    free(wk.rwork)
    free(wk.iwork)


cdef int _step(const double complex[:, ::1] rho,
               const double complex[::1] s,
               const double[:, ::1] h0,
               double g,
               double tau,
               const double complex[:, :, ::1] ops,
               double complex[:, ::1] rho_out,
               double[::1] r_out,
               Work *wk) except -1:
    cdef int n = rho.shape[0]
    cdef int d = s.shape[0]
    cdef int m = n // d
    cdef int i, j, k, a, b, o, info
    cdef double complex acc, sab, ph
    cdef double tr, c, sn

    # rho1 = |s><s| (x) tr_1(rho); sigma computed inline
    for a in range(d):
        for b in range(d):
            sab = s[a] * s[b].conjugate()
            for i in range(m):
                for j in range(m):
                    acc = 0
                    for k in range(d):
                        acc = acc + rho[k * m + i, k * m + j]
                    wk.rho1[(a * m + i) * n + b * m + j] = sab * acc

    # H (column-major for LAPACK); H is real symmetric so the layout is moot
    for i in range(n):
        for j in range(n):
            wk.h[i * n + j] = h0[i, j]
        wk.h[i * n + i] = h0[i, i] - g * wk.rho1[i * n + i].real

    cdef char jobz = b'V'
    cdef char uplo = b'L'
    zheevd(&jobz, &uplo, &n, wk.h, &n, wk.w, wk.lwork_buf, &wk.lwork,
           wk.rwork, &wk.lrwork, wk.iwork, &wk.liwork, &info)
    if info != 0:
        raise RuntimeError(f"zheevd failed with info={info}")

    # Column-major Z holds eigenvectors of H^T = conj(H), so
    # U = exp(-iHtau) = conj(Z) diag(e^{-iwt}) Z^T, i.e.
    # U[i,j] = sum_k conj(Z[i,k]) e^{-i w_k tau} Z[j,k]
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                c = wk.w[k] * tau
                ph = cos(c) - 1j * sin(c)
                acc = acc + wk.h[k * n + i].conjugate() * ph * wk.h[k * n + j]
            wk.u[i * n + j] = acc

    # rho2 = U rho1 U^H
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + wk.u[i * n + k] * wk.rho1[k * n + j]
            wk.tmp[i * n + j] = acc
    for i in range(n):
        for j in range(n):
            acc = 0
            for k in range(n):
                acc = acc + wk.tmp[i * n + k] * wk.u[j * n + k].conjugate()
            rho_out[i, j] = acc

    # hermitize + renormalize
    tr = 0
    for i in range(n):
        for j in range(i, n):
            acc = 0.5 * (rho_out[i, j] + rho_out[j, i].conjugate())
            rho_out[i, j] = acc
            rho_out[j, i] = acc.conjugate()
        tr = tr + rho_out[i, i].real
    for i in range(n):
        for j in range(n):
            rho_out[i, j] = rho_out[i, j] / tr

    # r[o] = Re tr(ops[o] rho2)
    for o in range(n * n):
        acc = 0
        for i in range(n):
            for j in range(n):
                acc = acc + ops[o, i, j] * rho_out[j, i]
        r_out[o] = acc.real
    return 0


def step_with_measure(rho, s, h0, double g, double tau, basis_ops):
    """One reservoir step plus measurement; see the fallback docstring."""
    cdef const double complex[:, ::1] rho_v = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef const double complex[::1] s_v = np.ascontiguousarray(s, dtype=np.complex128)
    cdef const double[:, ::1] h0_v = np.ascontiguousarray(h0, dtype=np.float64)
    cdef const double complex[:, :, ::1] ops_v = np.ascontiguousarray(
        basis_ops, dtype=np.complex128)
    cdef int n = rho_v.shape[0]
    rho_out = np.empty((n, n), dtype=np.complex128)
    r_out = np.empty(n * n, dtype=np.float64)
    cdef double complex[:, ::1] rho_out_v = rho_out
    cdef double[::1] r_out_v = r_out
    cdef Work wk
    _work_alloc(&wk, n)
    try:
        _step(rho_v, s_v, h0_v, g, tau, ops_v, rho_out_v, r_out_v, &wk)
    finally:
        _work_free(&wk)
    return rho_out, r_out


def chain_teacher(rho, s_stack, h0_stack, double g, double tau, basis_ops):
    """Teacher-forced chain; see the fallback docstring."""
    cdef const double complex[:, ::1] s_v = np.ascontiguousarray(
        s_stack, dtype=np.complex128)
    cdef const double[:, :, ::1] h0_v = np.ascontiguousarray(h0_stack, dtype=np.float64)
    cdef const double complex[:, :, ::1] ops_v = np.ascontiguousarray(
        basis_ops, dtype=np.complex128)
    cdef int steps = s_v.shape[0]
    cdef int n = rho.shape[0]
    cur = np.ascontiguousarray(rho, dtype=np.complex128).copy()
    nxt = np.empty((n, n), dtype=np.complex128)
    out = np.empty((steps, n * n), dtype=np.float64)
    cdef double complex[:, ::1] cur_v = cur
    cdef double complex[:, ::1] nxt_v = nxt
    cdef double[:, ::1] out_v = out
    cdef int k
    cdef Work wk
    _work_alloc(&wk, n)
    try:
        for k in range(steps):
            _step(cur_v, s_v[k], h0_v[k], g, tau, ops_v, nxt_v, out_v[k], &wk)
            cur, nxt = nxt, cur
            cur_v, nxt_v = nxt_v, cur_v
    finally:
        _work_free(&wk)
    return np.asarray(cur_v).copy(), out
