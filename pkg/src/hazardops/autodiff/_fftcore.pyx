# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled complex FFT for lengths whose prime factors are all <= 64.

Recursive decimation in time, one row at a time, with radix-2/3/4/5
butterflies and a dense DFT for the remaining small primes. Real
transforms of even length ``n`` run a half-length complex transform on the
row reinterpreted as ``n/2`` complex values and then split the even and odd
parts; :mod:`hazardops.autodiff.fft` holds the general fallbacks.
"""

from functools import lru_cache

import numpy as np

from libc.stdlib cimport free, malloc

cdef double complex C3 = -0.5 - 0.8660254037844386j  # exp(-2 pi i / 3)
cdef double complex C5A = 0.30901699437494745 - 0.9510565162951535j  # exp(-2 pi i / 5)
cdef double complex C5B = -0.8090169943749475 - 0.5877852522924731j  # exp(-4 pi i / 5)


cdef inline void butterfly(double complex* out, int p, int m, int k2, const double complex* tw,
                           Py_ssize_t step, double complex* tmp) noexcept nogil:
    cdef int r, k1, j, jm
    cdef double complex a0, a1, a2, a3, a4, t1, t2, t3, t4, acc
    if p == 2:
        a0 = out[k2]
        a1 = out[m + k2] * tw[k2 * step]
        out[k2] = a0 + a1
        out[m + k2] = a0 - a1
    elif p == 4:
        a0 = out[k2]
        a1 = out[m + k2] * tw[k2 * step]
        a2 = out[2 * m + k2] * tw[2 * k2 * step]
        a3 = out[3 * m + k2] * tw[3 * k2 * step]
        t1 = a0 + a2
        t2 = a0 - a2
        t3 = a1 + a3
        t4 = (a1 - a3) * (-1j)
        out[k2] = t1 + t3
        out[m + k2] = t2 + t4
        out[2 * m + k2] = t1 - t3
        out[3 * m + k2] = t2 - t4
    elif p == 3:
        a0 = out[k2]
        a1 = out[m + k2] * tw[k2 * step]
        a2 = out[2 * m + k2] * tw[2 * k2 * step]
        out[k2] = a0 + a1 + a2
        out[m + k2] = a0 + a1 * C3 + a2 * C3.conjugate()
        out[2 * m + k2] = a0 + a1 * C3.conjugate() + a2 * C3
    elif p == 5:
        a0 = out[k2]
        a1 = out[m + k2] * tw[k2 * step]
        a2 = out[2 * m + k2] * tw[2 * k2 * step]
        a3 = out[3 * m + k2] * tw[3 * k2 * step]
        a4 = out[4 * m + k2] * tw[4 * k2 * step]
        out[k2] = a0 + a1 + a2 + a3 + a4
        out[m + k2] = a0 + a1 * C5A + a2 * C5B + a3 * C5B.conjugate() + a4 * C5A.conjugate()
        out[2 * m + k2] = a0 + a1 * C5B + a2 * C5A.conjugate() + a3 * C5A + a4 * C5B.conjugate()
        out[3 * m + k2] = a0 + a1 * C5B.conjugate() + a2 * C5A + a3 * C5A.conjugate() + a4 * C5B
        out[4 * m + k2] = a0 + a1 * C5A.conjugate() + a2 * C5B.conjugate() + a3 * C5B + a4 * C5A
    else:
        # exp(-2 pi i j / p) = tw[j * m * step]
        for r in range(p):
            tmp[r] = out[r * m + k2] * tw[(r * k2) * step]
        jm = m * step
        for k1 in range(p):
            acc = tmp[0]
            j = 0
            for r in range(1, p):
                j += k1
                if j >= p:
                    j -= p
                acc = acc + tmp[r] * tw[j * jm]
            out[k1 * m + k2] = acc


cdef void rec(const double complex* x, Py_ssize_t s, double complex* out, int n,
              const int* fac, const double complex* tw, Py_ssize_t step, double complex* tmp) noexcept nogil:
    cdef int p, m, r, k2
    if n == 1:
        out[0] = x[0]
        return
    p = fac[0]
    m = n // p
    if m == 1:
        for r in range(p):
            out[r] = x[r * s]
    else:
        for r in range(p):
            rec(x + r * s, s * p, out + r * m, m, fac + 1, tw, step * p, tmp)
    # tw[j * step] = exp(-2 pi i j / n)
    for k2 in range(m):
        butterfly(out, p, m, k2, tw, step, tmp)


@lru_cache(maxsize=None)
def _plan(int n):
    f = []
    m = n
    while m % 4 == 0:
        f.append(4)
        m //= 4
    if m % 2 == 0:
        f.append(2)
        m //= 2
    q = 3
    while m > 1:
        while m % q == 0:
            f.append(q)
            m //= q
        q += 2
        if q > 64 and m > 1:
            return None
    k = np.arange(n)
    tw = np.exp(-2j * np.pi * k / n)
    return np.array(f + [1], dtype=np.intc), np.ascontiguousarray(tw)


def supported(int n):
    return n >= 1 and _plan(n) is not None


def fft_rows(x):
    """Forward complex DFT along the last axis of ``x`` (any leading shape)."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    cdef int n = x.shape[x.ndim - 1]
    plan = _plan(n)
    if plan is None:
        raise ValueError(f"length {n} has a prime factor above 64")
    fac_, tw_ = plan
    out_ = np.empty_like(x)
    cdef const double complex[:, ::1] xv = x.reshape(-1, n)
    cdef double complex[:, ::1] ov = out_.reshape(-1, n)
    cdef const int[::1] fac = fac_
    cdef const double complex[::1] tw = tw_
    cdef Py_ssize_t rows = xv.shape[0], i
    cdef double complex* tmp = <double complex*>malloc(65 * sizeof(double complex))
    if tmp == NULL:
        raise MemoryError()
    with nogil:
        for i in range(rows):
            rec(&xv[i, 0], 1, &ov[i, 0], n, &fac[0], &tw[0], 1, tmp)
    free(tmp)
    return out_


@lru_cache(maxsize=None)
def _rplan(int n):
    if n < 4 or n % 2:
        return None
    plan = _plan(n // 2)
    if plan is None:
        return None
    k = np.arange(n // 2 + 1)
    return plan[0], plan[1], np.ascontiguousarray(np.exp(-2j * np.pi * k / n))


def real_supported(int n):
    return _rplan(n) is not None


def rfft_rows(x, int keep):
    """Lowest ``keep`` bins of the one-sided DFT of real rows (even length)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    cdef int n = x.shape[x.ndim - 1]
    plan = _rplan(n)
    if plan is None:
        raise ValueError(f"no compiled real transform for length {n}")
    cdef int h = n // 2
    if keep < 1 or keep > h + 1:
        raise ValueError(f"keep must lie in [1, {h + 1}], got {keep}")
    fac_, tw_, twn_ = plan
    lead = x.shape[:x.ndim - 1]
    out_ = np.empty(lead + (keep,), dtype=np.complex128)
    cdef const double[:, ::1] xv = x.reshape(-1, n)
    cdef double complex[:, ::1] ov = out_.reshape(-1, keep)
    cdef const int[::1] fac = fac_
    cdef const double complex[::1] tw = tw_
    cdef const double complex[::1] twn = twn_
    cdef Py_ssize_t rows = xv.shape[0], i
    cdef int k, a, b
    cdef double complex zk, zc, e, o
    cdef double complex* tmp = <double complex*>malloc(65 * sizeof(double complex))
    cdef double complex* z = <double complex*>malloc(h * sizeof(double complex))
    if tmp == NULL or z == NULL:
        free(tmp)
        free(z)
        raise MemoryError()
    with nogil:
        for i in range(rows):
            rec(<const double complex*>&xv[i, 0], 1, z, h, &fac[0], &tw[0], 1, tmp)
            for k in range(keep):
                a = k if k < h else 0
                b = h - k if k > 0 else 0
                zk = z[a]
                zc = z[b].conjugate()
                e = 0.5 * (zk + zc)
                o = -0.5j * (zk - zc)
                ov[i, k] = e + twn[k] * o
    free(tmp)
    free(z)
    return out_


def irfft_rows(X, int n):
    """Real length-``n`` rows from one-sided spectra; absent high bins are zero.

    Imaginary parts of the DC bin and of the Nyquist bin are ignored.
    """
    X = np.ascontiguousarray(X, dtype=np.complex128)
    plan = _rplan(n)
    if plan is None:
        raise ValueError(f"no compiled real transform for length {n}")
    cdef int h = n // 2
    cdef int nf = X.shape[X.ndim - 1]
    if nf > h + 1:
        raise ValueError(f"spectrum has {nf} bins, more than the {h + 1} of a length-{n} signal")
    fac_, tw_, twn_ = plan
    lead = X.shape[:X.ndim - 1]
    out_ = np.empty(lead + (n,), dtype=np.float64)
    cdef const double complex[:, ::1] xv = X.reshape(-1, nf)
    cdef double[:, ::1] ov = out_.reshape(-1, n)
    cdef const int[::1] fac = fac_
    cdef const double complex[::1] tw = tw_
    cdef const double complex[::1] twn = twn_
    cdef Py_ssize_t rows = xv.shape[0], i
    cdef int k, j
    cdef double complex xk, xj, e, o
    cdef double complex* res
    cdef double scale = 1.0 / h
    cdef double complex* tmp = <double complex*>malloc(65 * sizeof(double complex))
    cdef double complex* buf = <double complex*>malloc(h * sizeof(double complex))
    if tmp == NULL or buf == NULL:
        free(tmp)
        free(buf)
        raise MemoryError()
    with nogil:
        for i in range(rows):
            for k in range(h):
                j = h - k
                xk = xv[i, k] if k < nf else 0.0
                xj = xv[i, j] if j < nf else 0.0
                if k == 0:
                    xk = xk.real
                    xj = xj.real
                e = 0.5 * (xk + xj.conjugate())
                o = 0.5 * (xk - xj.conjugate()) * twn[k].conjugate()
                buf[k] = (e + 1j * o).conjugate()
            res = <double complex*>&ov[i, 0]
            rec(buf, 1, res, h, &fac[0], &tw[0], 1, tmp)
            for k in range(h):
                res[k] = res[k].conjugate() * scale
    free(tmp)
    free(buf)
    return out_
