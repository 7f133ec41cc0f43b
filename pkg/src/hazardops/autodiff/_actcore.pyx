# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled exact GELU and its derivative (libm erf and exp)."""

import numpy as np

from libc.math cimport erf, exp

cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327


def gelu_forward(v):
    """``(x * Phi(x), Phi(x))`` elementwise."""
    x = np.ascontiguousarray(v, dtype=np.float64)
    y_ = np.empty_like(x)
    cdf_ = np.empty_like(x)
    cdef const double[::1] xv = x.reshape(-1)
    cdef double[::1] yv = y_.reshape(-1)
    cdef double[::1] cv = cdf_.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double c
    with nogil:
        for i in range(n):
            c = 0.5 * (1.0 + erf(xv[i] * INV_SQRT2))
            cv[i] = c
            yv[i] = xv[i] * c
    return y_, cdf_


def gelu_backward(v, cdf, g):
    """``g * (Phi(x) + x * phi(x))`` elementwise."""
    x = np.ascontiguousarray(v, dtype=np.float64)
    c = np.ascontiguousarray(cdf, dtype=np.float64)
    gg = np.ascontiguousarray(np.broadcast_to(g, x.shape), dtype=np.float64)
    out_ = np.empty_like(x)
    cdef const double[::1] xv = x.reshape(-1)
    cdef const double[::1] cv = c.reshape(-1)
    cdef const double[::1] gv = gg.reshape(-1)
    cdef double[::1] ov = out_.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * (cv[i] + xv[i] * INV_SQRT_2PI * exp(-0.5 * xv[i] * xv[i]))
    return out_
