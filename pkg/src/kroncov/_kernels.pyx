# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; mirrors the API of kroncov._kernels_py.

Same symmetry contract as the fallback: the norm kernels scan rows instead of
strided columns, which is valid because every matrix fed to them is symmetric.
The power-iteration kernels skip masked-out rows entirely, which is where the
band structure pays off.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, sqrt

cnp.import_array()

BACKEND = "c"

OK = 0
NO_CONVERGENCE = 1
ZERO_INPUT = 2


cdef double _nrm2(const double[::1] x) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return sqrt(s)


cdef void _wmatvec(const double[:, ::1] R, const double[::1] wrow, const double[::1] wcol,
                   const double[::1] v, double[::1] wv, double[::1] out) noexcept nogil:
    # out = wrow * (R @ (wcol * v)); rows with wrow == 0 are skipped
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nr = R.shape[0], nc = R.shape[1]
    cdef double s
    for j in range(nc):
        wv[j] = wcol[j] * v[j]
    for i in range(nr):
        if wrow[i] == 0.0:
            out[i] = 0.0
            continue
        s = 0.0
        for j in range(nc):
            s += R[i, j] * wv[j]
        out[i] = wrow[i] * s


cdef void _wrmatvec(const double[:, ::1] R, const double[::1] wrow, const double[::1] wcol,
                    const double[::1] u, double[::1] out) noexcept nogil:
    # out = wcol * (R.T @ (wrow * u)), accumulated row-wise for contiguity
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nr = R.shape[0], nc = R.shape[1]
    cdef double t
    for j in range(nc):
        out[j] = 0.0
    for i in range(nr):
        t = wrow[i] * u[i]
        if t == 0.0:
            continue
        for j in range(nc):
            out[j] += t * R[i, j]
    for j in range(nc):
        out[j] *= wcol[j]


def rank1_power_weighted(const double[:, ::1] R, const double[::1] wrow, const double[::1] wcol,
                         const double[::1] v0, double tol, int max_iter):
    """Leading singular triple of R * outer(wrow, wcol).

    Returns (sigma, u, v, iters, resid, status) with R.T-side residual zero by
    construction and the R-side residual <= tol * sigma when status == OK.
    """
    cdef Py_ssize_t nr = R.shape[0], nc = R.shape[1]
    u_arr = np.empty(nr)
    v_arr = np.empty(nc)
    uraw_arr = np.empty(nr)
    vraw_arr = np.empty(nc)
    wv_arr = np.empty(nc)
    cdef double[::1] u = u_arr, v = v_arr, u_raw = uraw_arr, v_raw = vraw_arr
    cdef double[::1] wv = wv_arr
    cdef double nrm, su, sv, resid, d
    cdef Py_ssize_t i, j
    cdef int total = 0, attempt, it, converged = 0, have_sv = 0

    nrm = _nrm2(v0)
    if nrm == 0.0:
        return 0.0, None, None, 0, np.inf, ZERO_INPUT
    for j in range(nc):
        v[j] = v0[j] / nrm

    resid = np.inf
    sv = 0.0
    with nogil:
        for attempt in range(2):
            _wmatvec(R, wrow, wcol, v, wv, u_raw)
            for it in range(max_iter):
                total += 1
                su = _nrm2(u_raw)
                if su == 0.0:
                    break
                for i in range(nr):
                    u[i] = u_raw[i] / su
                _wrmatvec(R, wrow, wcol, u, v_raw)
                sv = _nrm2(v_raw)
                if sv == 0.0:
                    break
                have_sv = 1
                for j in range(nc):
                    v[j] = v_raw[j] / sv
                _wmatvec(R, wrow, wcol, v, wv, u_raw)
                resid = 0.0
                for i in range(nr):
                    d = u_raw[i] - sv * u[i]
                    resid += d * d
                resid = sqrt(resid)
                if resid <= tol * sv:
                    converged = 1
                    break
            if converged:
                break
            if attempt == 0:
                # fixed perturbed restart on stagnation / null-space starts
                if sv == 0.0:
                    for j in range(nc):
                        v[j] = v0[j]
                for j in range(nc):
                    v[j] = v[j] + 1e-3 * cos(<double> j)
                nrm = _nrm2(v)
                if nrm == 0.0:
                    for j in range(nc):
                        v[j] = cos(<double> j)
                    nrm = _nrm2(v)
                for j in range(nc):
                    v[j] = v[j] / nrm

    if converged:
        return sv, u_arr, v_arr, total, resid, OK
    if have_sv == 0 or sv == 0.0:
        return 0.0, None, None, total, resid, ZERO_INPUT
    return sv, u_arr, v_arr, total, resid, NO_CONVERGENCE


def rank1_power(const double[:, ::1] R, const double[::1] v0, double tol, int max_iter):
    """Leading singular triple of a dense matrix R (nr x nc)."""
    ones_r = np.ones(R.shape[0])
    ones_c = np.ones(R.shape[1])
    return rank1_power_weighted(R, ones_r, ones_c, v0, tol, max_iter)


def kron_diff_l1(const double[:, ::1] B, const double[:, ::1] C, const double[:, ::1] D):
    """Max absolute column sum of B (x) C - D for symmetric B, C, D."""
    cdef Py_ssize_t q = B.shape[0], p = C.shape[0]
    cdef Py_ssize_t m2, m1, l2, l1, row
    cdef double best = 0.0, s, b
    with nogil:
        for m2 in range(q):
            for m1 in range(p):
                row = m2 * p + m1
                s = 0.0
                for l2 in range(q):
                    b = B[m2, l2]
                    for l1 in range(p):
                        s += fabs(b * C[m1, l1] - D[row, l2 * p + l1])
                if s > best:
                    best = s
    return best


def kron_diff_fro(const double[:, ::1] B, const double[:, ::1] C, const double[:, ::1] D):
    """Frobenius norm of B (x) C - D."""
    cdef Py_ssize_t q = B.shape[0], p = C.shape[0]
    cdef Py_ssize_t m2, m1, l2, l1, row
    cdef double acc = 0.0, d, b
    with nogil:
        for m2 in range(q):
            for m1 in range(p):
                row = m2 * p + m1
                for l2 in range(q):
                    b = B[m2, l2]
                    for l1 in range(p):
                        d = b * C[m1, l1] - D[row, l2 * p + l1]
                        acc += d * d
    return sqrt(acc)


def kron_diff_max(const double[:, ::1] B, const double[:, ::1] C, const double[:, ::1] D):
    """Max absolute entry of B (x) C - D."""
    cdef Py_ssize_t q = B.shape[0], p = C.shape[0]
    cdef Py_ssize_t m2, m1, l2, l1, row
    cdef double best = 0.0, d, b
    with nogil:
        for m2 in range(q):
            for m1 in range(p):
                row = m2 * p + m1
                for l2 in range(q):
                    b = B[m2, l2]
                    for l1 in range(p):
                        d = fabs(b * C[m1, l1] - D[row, l2 * p + l1])
                        if d > best:
                            best = d
    return best


def kron_kron_diff_l1(const double[:, ::1] B, const double[:, ::1] C,
                      const double[:, ::1] S2, const double[:, ::1] S1):
    """Max absolute column sum of B (x) C - S2 (x) S1 (all symmetric)."""
    cdef Py_ssize_t q = B.shape[0], p = C.shape[0]
    cdef Py_ssize_t m2, m1, l2, l1
    cdef double best = 0.0, s, b, t
    with nogil:
        for m2 in range(q):
            for m1 in range(p):
                s = 0.0
                for l2 in range(q):
                    b = B[m2, l2]
                    t = S2[m2, l2]
                    for l1 in range(p):
                        s += fabs(b * C[m1, l1] - t * S1[m1, l1])
                if s > best:
                    best = s
    return best


def kron_kron_diff_max(const double[:, ::1] B, const double[:, ::1] C,
                       const double[:, ::1] S2, const double[:, ::1] S1):
    """Max absolute entry of B (x) C - S2 (x) S1."""
    cdef Py_ssize_t q = B.shape[0], p = C.shape[0]
    cdef Py_ssize_t m2, m1, l2, l1
    cdef double best = 0.0, d, b, t
    with nogil:
        for m2 in range(q):
            for m1 in range(p):
                for l2 in range(q):
                    b = B[m2, l2]
                    t = S2[m2, l2]
                    for l1 in range(p):
                        d = fabs(b * C[m1, l1] - t * S1[m1, l1])
                        if d > best:
                            best = d
    return best


def dense_diff_l1(const double[:, ::1] A, const double[:, ::1] D):
    """Max absolute column sum of A - D (both symmetric)."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t i, j
    cdef double best = 0.0, s
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += fabs(A[i, j] - D[i, j])
            if s > best:
                best = s
    return best


def kron_diff_l11(const double[:, ::1] B, const double[:, ::1] C,
                  const double[:, ::1] D):
    """Entrywise absolute sum of B (x) C - D (symmetric inputs; the sum is
    taken as diagonal + twice the upper triangle)."""
    cdef Py_ssize_t q = B.shape[0], p = C.shape[0]
    cdef Py_ssize_t m2, m1, l2, l1, row
    cdef double acc = 0.0, s, b
    with nogil:
        for m2 in range(q):
            for m1 in range(p):
                row = m2 * p + m1
                acc += fabs(B[m2, m2] * C[m1, m1] - D[row, row])
                s = 0.0
                b = B[m2, m2]
                for l1 in range(m1 + 1, p):
                    s += fabs(b * C[m1, l1] - D[row, m2 * p + l1])
                for l2 in range(m2 + 1, q):
                    b = B[m2, l2]
                    for l1 in range(p):
                        s += fabs(b * C[m1, l1] - D[row, l2 * p + l1])
                acc += 2.0 * s
    return acc


def dense_diff_l11(const double[:, ::1] A, const double[:, ::1] D):
    """Entrywise absolute sum of A - D (symmetric inputs)."""
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, s
    with nogil:
        for i in range(n):
            acc += fabs(A[i, i] - D[i, i])
            s = 0.0
            for j in range(i + 1, n):
                s += fabs(A[i, j] - D[i, j])
            acc += 2.0 * s
    return acc
