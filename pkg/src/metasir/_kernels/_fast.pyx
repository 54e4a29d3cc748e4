# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled per-link interference product: no (m, n) temporaries, one pass."""

import numpy as np

from libc.math cimport exp, log1p, pow, sqrt

BACKEND = "cython"


def ps_products(double[:, ::1] rx, double[::1] R, double[::1] p0,
                double[:, ::1] tx, double[::1] px, long[::1] own,
                double theta, double alpha):
    """See metasir._kernels._ref.ps_products for the contract."""
    cdef Py_ssize_t m = rx.shape[0]
    cdef Py_ssize_t n = tx.shape[0]
    cdef Py_ssize_t k, j, skip
    cdef double acc, dx, dy, d2, scale, half_alpha
    # libm pow dominates the loop; the two path-loss exponents the model
    # actually sweeps get closed forms
    cdef bint quartic = alpha == 4.0
    cdef bint cubic = alpha == 3.0
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    half_alpha = 0.5 * alpha
    for k in range(m):
        acc = 0.0
        scale = theta * pow(R[k] * R[k], half_alpha) / p0[k]
        skip = own[k]
        for j in range(n):
            if j == skip:
                continue
            dx = rx[k, 0] - tx[j, 0]
            dy = rx[k, 1] - tx[j, 1]
            d2 = dx * dx + dy * dy
            if quartic:
                acc += log1p(scale * px[j] / (d2 * d2))
            elif cubic:
                acc += log1p(scale * px[j] / (d2 * sqrt(d2)))
            else:
                acc += log1p(scale * px[j] / pow(d2, half_alpha))
        ov[k] = exp(-acc)
    return out
