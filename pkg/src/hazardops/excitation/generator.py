"""Synthesis of ground-acceleration records from counter-based white noise.

A record is ``a(t_k) = q(t_k) * y_k / sigma_k`` with the filtered sum
``y_k = sum_{j <= k} h(t_k - t_j | t_j) w_j``. ``sigma_k`` is the exact
standard deviation of ``y_k`` for unit-variance noise, so the normalized
core has unit variance at every step before it is modulated by the
envelope.

Two evaluations of the filtered sum are provided. The direct one builds
the lower-triangular kernel matrix, O(n_t^2). The spectral one, used above
``FFT_THRESHOLD`` points, interpolates the impulse response linearly in the
impulse time between ``N_NODES`` equally spaced nodes. Each node's
contribution is then a plain convolution, evaluated by FFT.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from hazardops.autodiff import backend as fftb
from hazardops.errors import DimensionError, ParameterError
from hazardops.excitation.envelope import calibrate_envelope
from hazardops.excitation.filters import damped_sine

FFT_THRESHOLD = 2000
N_NODES = 65
ENVELOPE_FLOOR = 1e-12
_CHUNK = 4


def white_noise(seed, n, stream=0):
    """``n`` standard normal draws keyed by ``(seed, stream)``.

    Philox-4x64 in counter mode; each raw 64-bit word becomes a uniform on
    the midpoints of a 2**-53 grid, mapped through the normal inverse CDF.
    Draw ``i`` depends only on ``(seed, stream, i)``.
    """
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ParameterError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    gen = np.random.Philox(key=np.array([seed, int(stream)], dtype=np.uint64))
    raw = gen.random_raw(int(n))
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


def _good_size(m):
    best = None
    p2 = 1
    while p2 < 2 * m:
        p3 = p2
        while p3 < 2 * m:
            p5 = p3
            while p5 < m:
                p5 *= 5
            if best is None or p5 < best:
                best = p5
            p3 *= 3
        p2 *= 2
    return best


class _DirectPlan:
    def __init__(self, params, keep_matrix):
        self.params = params
        n = params.n_t
        t = params.time_grid()
        self.omega = params.filter_frequency(t)
        self.keep = keep_matrix
        self.H = self._rows(0, n) if keep_matrix else None
        if keep_matrix:
            s2 = np.einsum("kj,kj->k", self.H, self.H)
        else:
            s2 = np.concatenate([np.einsum("kj,kj->k", b, b) for _, b in self._blocks()])
        self.sigma = np.sqrt(s2)

    def _rows(self, lo, hi):
        p = self.params
        k = np.arange(lo, hi)[:, None]
        j = np.arange(p.n_t)[None, :]
        return damped_sine((k - j) * p.dt, self.omega[None, :], p.filter_damping)

    def _blocks(self, size=400):
        for lo in range(0, self.params.n_t, size):
            hi = min(self.params.n_t, lo + size)
            yield lo, self._rows(lo, hi)

    def filtered_sum(self, noise):
        # one matrix-vector product per record: a batched product may round
        # differently with the batch size, and records must not depend on
        # which other seeds share their batch
        lead = noise.shape[:-1]
        flat = noise.reshape(-1, self.params.n_t)
        out = np.empty(flat.shape)
        blocks = [(0, self.H)] if self.keep else self._blocks()
        for lo, b in blocks:
            for i, row in enumerate(flat):
                out[i, lo:lo + b.shape[0]] = b @ row
        return out.reshape(lead + (self.params.n_t,))


class _SpectralPlan:
    def __init__(self, params, n_nodes=N_NODES):
        n = params.n_t
        dt = params.dt
        self.n = n
        self.L = _good_size(2 * n - 1)
        t = params.time_grid()
        nodes = np.linspace(0.0, t[-1], n_nodes)
        pos = t / (nodes[1] - nodes[0])
        # hat weights: impulse at t_j uses (1 - th) h_b + th h_{b+1}
        self.C = np.maximum(0.0, 1.0 - np.abs(pos[None, :] - np.arange(n_nodes)[:, None]))
        lag = np.arange(n) * dt
        Hn = damped_sine(lag[None, :], params.filter_frequency(nodes)[:, None], params.filter_damping)
        self.FH = fftb.rfft(Hn, self.L)
        s2 = (fftb.rfft(self.C * self.C, self.L) * fftb.rfft(Hn * Hn, self.L)).sum(axis=0)
        s2 += 2.0 * (fftb.rfft(self.C[:-1] * self.C[1:], self.L) * fftb.rfft(Hn[:-1] * Hn[1:], self.L)).sum(axis=0)
        s2 = fftb.irfft(s2, self.L)[:n]
        s2[0] = 0.0
        self.sigma = np.sqrt(np.maximum(s2, 0.0))

    def filtered_sum(self, noise):
        lead = noise.shape[:-1]
        flat = noise.reshape(-1, self.n)
        out = np.empty(flat.shape)
        for lo in range(0, flat.shape[0], _CHUNK):
            w = flat[lo:lo + _CHUNK]
            spec = fftb.rfft(w[:, None, :] * self.C[None], self.L)
            out[lo:lo + _CHUNK] = fftb.irfft((spec * self.FH[None]).sum(axis=1), self.L)[:, : self.n]
        return out.reshape(lead + (self.n,))


@lru_cache(maxsize=8)
def _plan(params, method):
    if method == "direct":
        return _DirectPlan(params, keep_matrix=params.n_t <= FFT_THRESHOLD)
    return _SpectralPlan(params)


def _resolve(params, method):
    if method == "auto":
        return "direct" if params.n_t <= FFT_THRESHOLD else "fft"
    if method not in ("direct", "fft"):
        raise ParameterError(f"unknown convolution method '{method}' (use auto, direct or fft)")
    return method


def filter_std(params, method="auto"):
    """Standard deviation ``sigma_k`` of the filtered sum for unit white noise."""
    return _plan(params, _resolve(params, method)).sigma


def normalized_core(params, noise, method="auto"):
    """Filtered and variance-normalized noise, before the envelope.

    ``noise`` has shape ``(..., n_t)``. Step 0 (no past impulses) is zero.
    """
    noise = np.asarray(noise, dtype=float)
    if noise.shape[-1] != params.n_t:
        raise DimensionError(f"noise has {noise.shape[-1]} points, model grid needs {params.n_t}")
    plan = _plan(params, _resolve(params, method))
    y = plan.filtered_sum(noise)
    sigma = plan.sigma
    safe = np.where(sigma > 0, sigma, 1.0)
    return np.where(sigma > 0, y / safe, 0.0)


def _modulate(params, core):
    q = calibrate_envelope(params)(params.time_grid())
    return np.where(q < ENVELOPE_FLOOR, 0.0, q * core)


@dataclass
class GroundMotionRecord:
    time: np.ndarray
    acceleration: np.ndarray
    seed: int

    @property
    def dt(self):
        return float(self.time[1] - self.time[0])

    def arias_intensity(self, gravity):
        return arias_intensity(self.acceleration, self.dt, gravity)


def generate(params, seed, noise=None, method="auto"):
    """One record for ``seed``; ``noise`` overrides the generator (test hook)."""
    if noise is None:
        noise = white_noise(seed, params.n_t)
    core = normalized_core(params, noise, method)
    return GroundMotionRecord(params.time_grid(), _modulate(params, core), int(seed))


def generate_many(params, seeds, method="auto"):
    """Stacked accelerations ``(len(seeds), n_t)``; row i equals ``generate(params, seeds[i])``."""
    noise = np.stack([white_noise(s, params.n_t) for s in seeds]) if len(seeds) else np.zeros((0, params.n_t))
    return _modulate(params, normalized_core(params, noise, method))


def arias_intensity(accel, dt, gravity):
    """``pi / (2 g) * integral(a^2 dt)`` along the last axis, trapezoidal."""
    a2 = np.asarray(accel, dtype=float) ** 2
    return np.pi / (2.0 * gravity) * dt * (a2.sum(axis=-1) - 0.5 * (a2[..., 0] + a2[..., -1]))


def trim_and_downsample(record, drop_head=21, stride=1, axis=0):
    """Drop the first ``drop_head`` samples, then keep every ``stride``-th one.

    ``record`` is a :class:`GroundMotionRecord` or an array whose time axis
    is ``axis``.
    """
    x = record.acceleration if isinstance(record, GroundMotionRecord) else np.asarray(record)
    n = x.shape[axis]
    if drop_head < 0 or stride < 1:
        raise DimensionError(f"need drop_head >= 0 and stride >= 1, got {drop_head}, {stride}")
    if drop_head + stride > n:
        raise DimensionError(f"drop_head + stride = {drop_head + stride} exceeds the {n} available points")
    index = [slice(None)] * x.ndim
    index[axis] = slice(drop_head, None, stride)
    out = x[tuple(index)]
    if out.shape[axis] == 0:
        raise DimensionError("trimming leaves no samples")
    return out
