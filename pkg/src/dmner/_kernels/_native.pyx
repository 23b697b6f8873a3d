# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: plain left-to-right dot products, no BLAS.

Each output element accumulates over the vector dimension in index
order (and the build disables FMA contraction), so results are
bit-identical across platforms and thread counts; parallelism is only
over independent output rows.
"""

from cython.parallel import prange
from libc.math cimport INFINITY

import numpy as np

NAME = "native"


def matvec(const double[:, ::1] mat, const double[::1] vec):
    cdef Py_ssize_t m = mat.shape[0]
    cdef Py_ssize_t d = mat.shape[1]
    cdef Py_ssize_t i, k
    cdef double s
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            s = 0.0
            for k in range(d):
                s += mat[i, k] * vec[k]
            o[i] = s
    return out


def nearest_scan(const double[:, ::1] queries, const double[:, ::1] entries):
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t n = entries.shape[0]
    cdef Py_ssize_t d = queries.shape[1]
    cdef Py_ssize_t i, j, k, best_j
    cdef double s, best
    idx = np.empty(m, dtype=np.int64)
    sims = np.empty(m, dtype=np.float64)
    cdef long long[::1] idx_v = idx
    cdef double[::1] sim_v = sims
    for i in prange(m, nogil=True, schedule="static"):
        best = -INFINITY
        best_j = 0
        for j in range(n):
            s = 0.0
            for k in range(d):
                s = s + queries[i, k] * entries[j, k]
            if s > best:  # strict: first index wins ties
                best = s
                best_j = j
        idx_v[i] = best_j
        sim_v[i] = best
    return idx, sims
