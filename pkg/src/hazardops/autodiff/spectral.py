"""Differentiable real FFT pair and the per-mode spectral weight product.

A :class:`ComplexSpectrum` stores real and imaginary parts in one tensor
with a trailing axis of size 2, so a single tape node carries both.
"""

import numpy as np

from hazardops.autodiff import backend
from hazardops.autodiff.tensor import Tensor, _make, as_tensor
from hazardops.errors import ConfigurationError, DimensionError


class ComplexSpectrum:
    """One-sided spectrum of a length-``n`` real signal along the last axis."""

    def __init__(self, data, n):
        self.data = data
        self.n = int(n)

    @property
    def shape(self):
        return self.data.shape[:-1]

    @property
    def n_freq(self):
        return self.data.shape[-2]

    @property
    def real(self):
        return self.data.values[..., 0]

    @property
    def imag(self):
        return self.data.values[..., 1]

    def to_complex(self):
        return self.real + 1j * self.imag

    @classmethod
    def from_complex(cls, z, n, requires_grad=False):
        z = np.asarray(z)
        return cls(Tensor(np.stack([z.real, z.imag], axis=-1), requires_grad=requires_grad), n)


def _stack(z):
    """``(..., n)`` complex to ``(..., n, 2)`` float, sharing memory when contiguous."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    return z.view(np.float64).reshape(z.shape + (2,))


def _as_complex(a):
    """``(..., n, 2)`` float to ``(..., n)`` complex, sharing memory when contiguous."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    return a.view(np.complex128)[..., 0]


def _fit(a, n):
    if a.shape[-1] == n:
        return a
    if a.shape[-1] > n:
        return a[..., :n]
    pad = np.zeros(a.shape[:-1] + (n - a.shape[-1],))
    return np.concatenate([a, pad], axis=-1)


def rfft(x, n=None, modes=None):
    """Forward one-sided FFT along the last axis; ``n`` pads or truncates.

    ``modes`` keeps only the lowest bins, which spares the tape the copies
    of bins a truncated spectral product would discard anyway.
    """
    x = as_tensor(x)
    length = x.shape[-1]
    n = length if n is None else int(n)
    if n < 2:
        raise DimensionError(f"rfft needs at least 2 points, got {n}")
    full = n // 2 + 1
    keep = full if modes is None else int(modes)
    if not 1 <= keep <= full:
        raise DimensionError(f"modes must lie in [1, {full}] for a length-{n} signal, got {keep}")
    spec = backend.rfft(_fit(x.values, n), keep=keep)
    out = None

    def bw():
        g = _as_complex(out.grad).copy()
        stop = min(n // 2 if n % 2 == 0 else n // 2 + 1, keep)
        g[..., 1:stop] *= 0.5
        # adjoint of the one-sided transform: x_j <- Re sum_k g_k e^{+2 pi i jk/n}
        x._accumulate(_fit(n * backend.irfft(g, n), length))

    out = _make(_stack(spec), (x,), "rfft", bw)
    return ComplexSpectrum(out, n)


def irfft(spectrum, n=None):
    """Inverse of :func:`rfft`; missing high bins are treated as zero."""
    n = spectrum.n if n is None else int(n)
    data = spectrum.data
    nf = data.shape[-2]
    full = n // 2 + 1
    if nf > full:
        raise DimensionError(f"spectrum has {nf} bins, more than the {full} of a length-{n} signal")
    values = backend.irfft(_as_complex(data.values), n)
    out = None

    def bw():
        gs = backend.rfft(out.grad, keep=nf) / n
        weight = np.full(nf, 2.0)
        weight[0] = 1.0
        if n % 2 == 0 and nf == full:
            weight[-1] = 1.0
        gs = gs * weight
        gs[..., 0] = gs[..., 0].real
        if n % 2 == 0 and nf == full:
            gs[..., -1] = gs[..., -1].real
        data._accumulate(_stack(gs))

    out = _make(values, (data,), "irfft", bw)
    return out


def spectral_multiply(spectrum, weight_real, weight_imag):
    """Multiply the lowest modes channel-wise by learned complex matrices.

    ``spectrum`` has shape ``(..., d_in, n_freq)`` and the weights
    ``(k_max, d_in, d_out)``. Mode ``k < k_max`` maps as
    ``out[..., o, k] = sum_i h[..., i, k] * R[k, i, o]``; higher modes are
    zeroed. The result keeps all ``n_freq`` bins.
    """
    wr, wi = as_tensor(weight_real), as_tensor(weight_imag)
    if wr.shape != wi.shape or wr.ndim != 3:
        raise ConfigurationError(f"weights must share a (k_max, d_in, d_out) shape, got {wr.shape}, {wi.shape}")
    k_max, d_in, d_out = wr.shape
    data = spectrum.data
    lead = data.shape[:-3]
    if data.shape[-3] != d_in:
        raise DimensionError(f"spectrum has {data.shape[-3]} channels, weights expect {d_in}")
    nf = data.shape[-2]
    if k_max > nf:
        raise ConfigurationError(f"k_max={k_max} exceeds the {nf} available modes")
    flat = data.values.reshape((-1, d_in, nf, 2))
    hk = (flat[:, :, :k_max, 0] + 1j * flat[:, :, :k_max, 1]).transpose(2, 0, 1)  # (k, P, i)
    w = wr.values + 1j * wi.values
    yk = hk @ w  # (k, P, o)
    result = np.zeros((flat.shape[0], d_out, nf, 2))
    result[:, :, :k_max, 0] = yk.real.transpose(1, 2, 0)
    result[:, :, :k_max, 1] = yk.imag.transpose(1, 2, 0)
    out = None

    def bw():
        g = out.grad.reshape((-1, d_out, nf, 2))
        gk = (g[:, :, :k_max, 0] + 1j * g[:, :, :k_max, 1]).transpose(2, 0, 1)  # (k, P, o)
        if data.requires_grad:
            gh = gk @ np.conj(w).transpose(0, 2, 1)  # (k, P, i)
            full = np.zeros((flat.shape[0], d_in, nf, 2))
            full[:, :, :k_max, 0] = gh.real.transpose(1, 2, 0)
            full[:, :, :k_max, 1] = gh.imag.transpose(1, 2, 0)
            data._accumulate(full.reshape(data.shape))
        if wr.requires_grad or wi.requires_grad:
            gw = np.conj(hk).transpose(0, 2, 1) @ gk  # (k, i, o)
            if wr.requires_grad:
                wr._accumulate(gw.real)
            if wi.requires_grad:
                wi._accumulate(gw.imag)

    out = _make(result.reshape(lead + (d_out, nf, 2)), (data, wr, wi), "spectral_multiply", bw)
    return ComplexSpectrum(out, spectrum.n)
