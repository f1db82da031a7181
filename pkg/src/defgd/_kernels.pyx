# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-column kernels: fused least squares + gradient accumulation.

Same contracts as ``defgd.kernels.reference``; the loops over columns and
the small Householder solves run in C, avoiding per-column Python and
allocation overhead.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

from .numerics import RANK_TOL, RankDeficientError

cnp.import_array()

cdef double _RANK_TOL = RANK_TOL


cdef int _householder_ls(double* qr, double* rhs, double* sol, double* v,
                         Py_ssize_t m, Py_ssize_t r, double rank_tol) noexcept nogil:
    """In-place Householder QR least squares on an m x r system (m >= r).

    ``qr`` (m*r, row-major) and ``rhs`` (m) are destroyed; the solution is
    written to ``sol`` (r).  Returns -1 on success or the index of the first
    numerically rank-deficient column (checked against the largest diagonal
    of the full factorization, matching the reference backend).
    """
    cdef Py_ssize_t i, j, c
    cdef Py_ssize_t bad = -1
    cdef double norm2, norm, alpha, vtv, coef, s
    cdef double diag_max = 0.0

    for j in range(r):
        norm2 = 0.0
        for i in range(j, m):
            norm2 += qr[i * r + j] * qr[i * r + j]
        norm = sqrt(norm2)
        if norm > diag_max:
            diag_max = norm
        if qr[j * r + j] >= 0.0:
            alpha = -norm
        else:
            alpha = norm
        # Householder vector for this column; reflection is I - 2 v vᵀ / vᵀv.
        for i in range(j, m):
            v[i] = qr[i * r + j]
        v[j] -= alpha
        vtv = 0.0
        for i in range(j, m):
            vtv += v[i] * v[i]
        qr[j * r + j] = alpha
        if vtv > 0.0:
            for c in range(j + 1, r):
                coef = 0.0
                for i in range(j, m):
                    coef += v[i] * qr[i * r + c]
                coef = 2.0 * coef / vtv
                for i in range(j, m):
                    qr[i * r + c] -= coef * v[i]
            coef = 0.0
            for i in range(j, m):
                coef += v[i] * rhs[i]
            coef = 2.0 * coef / vtv
            for i in range(j, m):
                rhs[i] -= coef * v[i]

    for j in range(r):
        norm = qr[j * r + j]
        if norm < 0.0:
            norm = -norm
        if norm <= rank_tol * diag_max:
            if bad < 0:
                bad = j
    if bad >= 0:
        return <int> bad

    for j in range(r - 1, -1, -1):
        s = rhs[j]
        for c in range(j + 1, r):
            s -= qr[j * r + c] * sol[c]
        sol[j] = s / qr[j * r + j]
    return -1


def ls_gradient(double[:, :, ::1] a, double[:, ::1] y, double[:, ::1] u,
                double sign=1.0):
    """Compiled twin of ``reference.ls_gradient``; see that docstring."""
    cdef Py_ssize_t k = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t n = a.shape[2]
    cdef Py_ssize_t r = u.shape[1]
    if u.shape[0] != n or y.shape[0] != k or y.shape[1] != m:
        raise ValueError("inconsistent kernel input shapes")
    if m < r:
        raise ValueError(f"need m >= r, got m={m}, r={r}")

    b_arr = np.empty((k, r), dtype=np.float64)
    psi_arr = np.zeros((n, r), dtype=np.float64)
    cdef double[:, ::1] b = b_arr
    cdef double[:, ::1] psi = psi_arr

    cdef double* au = <double*> malloc(m * r * sizeof(double))
    cdef double* rhs = <double*> malloc(m * sizeof(double))
    cdef double* sol = <double*> malloc(r * sizeof(double))
    cdef double* hv = <double*> malloc(m * sizeof(double))
    cdef double* res = <double*> malloc(m * sizeof(double))
    cdef double* work_n = <double*> malloc(n * sizeof(double))
    if au == NULL or rhs == NULL or sol == NULL or hv == NULL \
            or res == NULL or work_n == NULL:
        free(au); free(rhs); free(sol); free(hv); free(res); free(work_n)
        raise MemoryError()

    cdef Py_ssize_t kk, i, j, c
    cdef double s
    cdef int bad = -1
    cdef Py_ssize_t bad_k = -1
    try:
        with nogil:
            for kk in range(k):
                # au = a[kk] @ u (destroyed by the factorization below)
                for i in range(m):
                    for c in range(r):
                        s = 0.0
                        for j in range(n):
                            s += a[kk, i, j] * u[j, c]
                        au[i * r + c] = s
                    rhs[i] = y[kk, i]
                bad = _householder_ls(au, rhs, sol, hv, m, r, _RANK_TOL)
                if bad >= 0:
                    bad_k = kk
                    break
                # work_n = u @ sol, then res = sign * (a[kk] @ work_n - y[kk])
                for j in range(n):
                    s = 0.0
                    for c in range(r):
                        s += u[j, c] * sol[c]
                    work_n[j] = s
                for i in range(m):
                    s = 0.0
                    for j in range(n):
                        s += a[kk, i, j] * work_n[j]
                    res[i] = sign * (s - y[kk, i])
                # psi += (a[kk]ᵀ res) solᵀ
                for j in range(n):
                    s = 0.0
                    for i in range(m):
                        s += a[kk, i, j] * res[i]
                    work_n[j] = s
                for j in range(n):
                    for c in range(r):
                        psi[j, c] += work_n[j] * sol[c]
                for c in range(r):
                    b[kk, c] = sol[c]
    finally:
        free(au); free(rhs); free(sol); free(hv); free(res); free(work_n)

    if bad >= 0:
        raise RankDeficientError(
            bad, f"rank-deficient projected operator at measurement column "
            f"{bad_k} (basis column {bad})")
    return b_arr, psi_arr


def truncated_operator_share(double[:, :, ::1] a, double[:, ::1] y,
                             double[:, ::1] u_prev, double thresh,
                             double inv_m):
    """Compiled twin of ``reference.truncated_operator_share``."""
    cdef Py_ssize_t k = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t n = a.shape[2]
    cdef Py_ssize_t r = u_prev.shape[1]
    if u_prev.shape[0] != n or y.shape[0] != k or y.shape[1] != m:
        raise ValueError("inconsistent kernel input shapes")

    out_arr = np.zeros((n, r), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double* v = <double*> malloc(n * sizeof(double))
    cdef double* vtu = <double*> malloc(r * sizeof(double))
    if v == NULL or vtu == NULL:
        free(v); free(vtu)
        raise MemoryError()

    cdef Py_ssize_t kk, i, j, c
    cdef double s, w
    try:
        with nogil:
            for kk in range(k):
                for j in range(n):
                    v[j] = 0.0
                for i in range(m):
                    w = y[kk, i]
                    if w * w <= thresh:
                        for j in range(n):
                            v[j] += a[kk, i, j] * w
                for j in range(n):
                    v[j] *= inv_m
                for c in range(r):
                    s = 0.0
                    for j in range(n):
                        s += v[j] * u_prev[j, c]
                    vtu[c] = s
                for j in range(n):
                    for c in range(r):
                        out[j, c] += v[j] * vtu[c]
    finally:
        free(v)
        free(vtu)
    return out_arr
