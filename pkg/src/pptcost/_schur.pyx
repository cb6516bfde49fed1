# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Schur-complement assembly for one PSD block."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def schur_block(const double[:, ::1] x, const double[:, ::1] zi,
                const long long[:, ::1] rows, const long long[:, ::1] cols,
                const double[:, ::1] vals, const long long[::1] counts):
    """Return ``M[i, j] = Tr(A_i X A_j Zi)`` for the padded sparse ``A_i``."""
    cdef Py_ssize_t m = rows.shape[0]
    cdef Py_ssize_t i, j, k, l
    cdef long long ci, ri, ni, nj
    cdef double vi, s
    out = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] mv = out
    with nogil:
        for i in range(m):
            ni = counts[i]
            for j in range(i, m):
                nj = counts[j]
                s = 0.0
                for k in range(ni):
                    ri = rows[i, k]
                    ci = cols[i, k]
                    vi = vals[i, k]
                    for l in range(nj):
                        s = s + vi * vals[j, l] * x[ci, rows[j, l]] * zi[cols[j, l], ri]
                mv[i, j] = s
                mv[j, i] = s
    return out
