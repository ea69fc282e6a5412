# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled CSR batch kernels.

These are the hot loops behind every finite-sum oracle: row-subset margins
(a_i'x for i in a batch) and weighted row accumulation (sum_i w_i * a_i).
Semantics and summation order match kernels/fallback.py bitwise.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_rows_dot(const long long[::1] indptr,
                 const int[::1] indices,
                 const double[::1] data,
                 const long long[::1] rows,
                 const double[::1] x):
    """out[j] = <a_rows[j], x> for each row in the batch."""
    cdef Py_ssize_t b = rows.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(b, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t j, l, lo, hi
    cdef long long r
    cdef double acc
    for j in range(b):
        r = rows[j]
        lo = indptr[r]
        hi = indptr[r + 1]
        acc = 0.0
        for l in range(lo, hi):
            acc += data[l] * x[indices[l]]
        ov[j] = acc
    return out


def csr_rows_weighted_sum(const long long[::1] indptr,
                          const int[::1] indices,
                          const double[::1] data,
                          const long long[::1] rows,
                          const double[::1] w,
                          Py_ssize_t n):
    """out = sum_j w[j] * a_rows[j], accumulated in batch order."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t b = rows.shape[0]
    cdef Py_ssize_t j, l, lo, hi
    cdef long long r
    cdef double wj
    for j in range(b):
        r = rows[j]
        lo = indptr[r]
        hi = indptr[r + 1]
        wj = w[j]
        for l in range(lo, hi):
            ov[indices[l]] += wj * data[l]
    return out


def csr_rows_sq_dot(const long long[::1] indptr,
                    const int[::1] indices,
                    const double[::1] data,
                    const long long[::1] rows,
                    const double[::1] x):
    """out[j] = <a_rows[j]^2, x> (elementwise-squared row); used for diagonal curvature."""
    cdef Py_ssize_t b = rows.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(b, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t j, l, lo, hi
    cdef long long r
    cdef double acc
    for j in range(b):
        r = rows[j]
        lo = indptr[r]
        hi = indptr[r + 1]
        acc = 0.0
        for l in range(lo, hi):
            acc += data[l] * data[l] * x[indices[l]]
        ov[j] = acc
    return out
