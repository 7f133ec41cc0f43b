"""FFT kernels used by the differentiable spectral ops."""

import numpy as np

from hazardops._backend import load_compiled
from hazardops.autodiff import fft as _py

_core = load_compiled("autodiff._fftcore")


def _compiled_cfft(z):
    if _core.supported(z.shape[-1]):
        return _core.fft_rows(z)
    return _py.fft(z)


if _core is not None:
    NAME = "compiled"
    cfft = _compiled_cfft
else:
    NAME = "python"
    cfft = _py.fft


def rfft(x, n=None, keep=None):
    """One-sided DFT along the last axis, optionally only the lowest ``keep`` bins."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] if n is None else int(n)
    full = n // 2 + 1
    keep = full if keep is None else int(keep)
    if _core is not None and _core.real_supported(n):
        if x.shape[-1] != n:
            x = _py._fit_length(x, n)
        return _core.rfft_rows(x, keep)
    return _py.rfft(x, n, cfft=cfft)[..., :keep]


def irfft(spectrum, n):
    """Length-``n`` real signal from a one-sided spectrum; missing bins are zero."""
    spectrum = np.asarray(spectrum)
    if _core is not None and _core.real_supported(n) and spectrum.shape[-1] <= n // 2 + 1:
        return _core.irfft_rows(spectrum, n)
    return _py.irfft(spectrum, n, cfft=cfft)
