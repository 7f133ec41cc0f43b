"""Mixed-radix FFT over the last axis, vectorized with numpy.

Lengths are split into prime factors, smallest first. Prime factors up to
``DIRECT_MAX`` are transformed with a dense DFT matrix; larger primes fall
back to Bluestein's chirp-z algorithm on a power-of-two grid. Any length
works without padding, including the 5980-point records of the seismic
pipeline (2 * 2 * 5 * 13 * 23).
"""

from functools import lru_cache

import numpy as np

DIRECT_MAX = 64


@lru_cache(maxsize=None)
def _smallest_factor(n):
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


@lru_cache(maxsize=256)
def _dft_matrix(p):
    k = np.arange(p)
    # reduce the exponent modulo p before scaling to keep the phase exact
    return np.exp(-2j * np.pi * (np.outer(k, k) % p) / p)


@lru_cache(maxsize=256)
def _twiddle(n, p):
    m = n // p
    return np.exp(-2j * np.pi * (np.outer(np.arange(p), np.arange(m)) % n) / n)


@lru_cache(maxsize=64)
def _bluestein_plan(n):
    size = 1
    while size < 2 * n - 1:
        size *= 2
    k = np.arange(n)
    chirp = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    kernel = np.zeros(size, dtype=complex)
    kernel[:n] = np.conj(chirp)
    kernel[size - n + 1:] = np.conj(chirp[1:][::-1])
    return size, chirp, _fft(kernel, size)


def _bluestein(x, n):
    size, chirp, kernel_hat = _bluestein_plan(n)
    a = np.zeros(x.shape[:-1] + (size,), dtype=complex)
    a[..., :n] = x * chirp
    conv = _ifft(_fft(a, size) * kernel_hat, size)
    return conv[..., :n] * chirp


def _fft(x, n):
    if n == 1:
        return x.copy()
    p = _smallest_factor(n)
    if p == n:
        if n <= DIRECT_MAX:
            return x @ _dft_matrix(n)
        return _bluestein(x, n)
    m = n // p
    lead = x.shape[:-1]
    # x[..., j*p + r] -> sub[..., r, j]
    sub = x.reshape(lead + (m, p)).swapaxes(-1, -2)
    y = _fft(sub, m) * _twiddle(n, p)
    if p <= DIRECT_MAX:
        out = _dft_matrix(p) @ y
    else:
        out = _bluestein(y.swapaxes(-1, -2), p).swapaxes(-1, -2)
    return out.reshape(lead + (n,))


def _ifft(x, n):
    return np.conj(_fft(np.conj(x), n)) / n


def fft(x):
    """Complex forward DFT along the last axis."""
    x = np.asarray(x, dtype=complex)
    return _fft(x, x.shape[-1])


def ifft(x):
    """Complex inverse DFT along the last axis (1/n normalization)."""
    x = np.asarray(x, dtype=complex)
    return _ifft(x, x.shape[-1])


@lru_cache(maxsize=64)
def _half_twiddle(n):
    return np.exp(-2j * np.pi * np.arange(n // 2 + 1) / n)


def _default_cfft(z):
    return _fft(z, z.shape[-1])


def rfft(x, n=None, cfft=None):
    """One-sided DFT of real input along the last axis.

    Returns ``n // 2 + 1`` complex bins. When ``n`` exceeds the input length
    the signal is zero-padded; shorter ``n`` truncates. ``cfft`` swaps in
    another complex FFT over the last axis (the compiled kernel).
    """
    cfft = cfft or _default_cfft
    x = np.asarray(x, dtype=float)
    if n is None:
        n = x.shape[-1]
    if n != x.shape[-1]:
        x = _fit_length(x, n)
    if n % 2 or n < 4:
        return cfft(x.astype(complex))[..., : n // 2 + 1]
    h = n // 2
    z = cfft(x[..., 0::2] + 1j * x[..., 1::2])
    z = np.concatenate([z, z[..., :1]], axis=-1)
    zc = np.conj(z[..., ::-1])
    even = 0.5 * (z + zc)
    odd = -0.5j * (z - zc)
    return even + _half_twiddle(n) * odd


def irfft(spectrum, n, cfft=None):
    """Inverse of :func:`rfft` for a length-``n`` real signal.

    Imaginary parts of the DC bin (and of the Nyquist bin for even ``n``)
    do not contribute, matching the adjoint used by the autodiff layer.
    """
    cfft = cfft or _default_cfft
    X = np.array(spectrum, dtype=complex)
    nf = n // 2 + 1
    if X.shape[-1] < nf:
        pad = np.zeros(X.shape[:-1] + (nf - X.shape[-1],), dtype=complex)
        X = np.concatenate([X, pad], axis=-1)
    else:
        X = X[..., :nf]
    X[..., 0] = X[..., 0].real
    if n % 2 == 0:
        X[..., -1] = X[..., -1].real
    if n % 2 or n < 4:
        full = np.concatenate([X, np.conj(X[..., 1:n - nf + 1][..., ::-1])], axis=-1)
        return (np.conj(cfft(np.conj(full))) / n).real
    h = n // 2
    Xc = np.conj(X[..., ::-1])
    even = 0.5 * (X + Xc)
    odd = 0.5 * (X - Xc) * np.conj(_half_twiddle(n))
    z = np.conj(cfft(np.conj((even + 1j * odd)[..., :h]))) / h
    out = np.empty(X.shape[:-1] + (n,))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def _fit_length(x, n):
    if n < x.shape[-1]:
        return x[..., :n]
    pad = np.zeros(x.shape[:-1] + (n - x.shape[-1],))
    return np.concatenate([x, pad], axis=-1)
