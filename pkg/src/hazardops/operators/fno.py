"""Fourier neural operator over time with a vectorized multi-channel head.

Each Fourier layer computes
``h <- sigma(W h + irfft(R * rfft(h)) + c)``, where ``R`` multiplies the
lowest ``k_max`` modes by a learned complex ``d_v x d_v`` matrix and drops
the rest. A lifting map ``P`` takes the input channels to ``d_v`` and a
shallow network ``Q`` projects back to the ``n_ch`` outputs, one per floor.
"""

import numpy as np

from hazardops.autodiff import Tensor, activation, concat, irfft, matmul, rfft, spectral_multiply
from hazardops.errors import ConfigurationError
from hazardops.operators.base import OperatorModel, channels_first
from hazardops.operators.layers import MLP

DEFAULTS = dict(n_in=1, n_ch=1, d_v=64, n_layers=4, k_max=16, activation="gelu", lift_hidden=(),
                proj_hidden=(128,), padding=0, grid=False, seed=0)


class FourierLayer:
    def __init__(self, d_v, k_max, rng):
        scale = 1.0 / (d_v * d_v)
        self.weight_real = Tensor(scale * rng.random((k_max, d_v, d_v)), requires_grad=True)
        self.weight_imag = Tensor(scale * rng.random((k_max, d_v, d_v)), requires_grad=True)
        limit = 1.0 / np.sqrt(d_v)
        self.w = Tensor(rng.uniform(-limit, limit, (d_v, d_v)), requires_grad=True)
        self.c = Tensor(np.zeros((d_v, 1)), requires_grad=True)

    def __call__(self, h, kind):
        n = h.shape[-1]
        spec = spectral_multiply(rfft(h, modes=self.weight_real.shape[0]), self.weight_real, self.weight_imag)
        return activation(matmul(self.w, h) + irfft(spec, n) + self.c, kind)

    def parameters(self, prefix):
        return [(f"{prefix}.R_real", self.weight_real), (f"{prefix}.R_imag", self.weight_imag),
                (f"{prefix}.W", self.w), (f"{prefix}.c", self.c)]


class FNO(OperatorModel):
    """Fourier neural operator mapping ``(M, n_t, n_in)`` to ``(M, n_t, n_ch)``.

    ``grid=True`` appends normalized time as an extra lifted channel.
    ``padding`` zero-extends the lifted signal before the Fourier layers and
    crops it after, which keeps late inputs from wrapping onto early
    outputs through the periodic transform.
    """

    kind = "fno"

    def __init__(self, **config):
        cfg = dict(DEFAULTS)
        unknown = set(config) - set(cfg)
        if unknown:
            raise ConfigurationError(f"unknown FNO options: {sorted(unknown)}")
        cfg.update(config)
        cfg["lift_hidden"] = [int(w) for w in cfg["lift_hidden"]]
        cfg["proj_hidden"] = [int(w) for w in cfg["proj_hidden"]]
        for key in ("n_in", "n_ch", "d_v", "n_layers", "k_max", "padding"):
            cfg[key] = int(cfg[key])
        if cfg["k_max"] < 1 or cfg["d_v"] < 1 or cfg["n_layers"] < 0 or cfg["padding"] < 0:
            raise ConfigurationError("FNO sizes must be positive")
        super().__init__(cfg)
        rng = np.random.default_rng(cfg["seed"])
        d_v, kind = cfg["d_v"], cfg["activation"]
        lift_in = cfg["n_in"] + (1 if cfg["grid"] else 0)
        self.lift = MLP([lift_in] + cfg["lift_hidden"] + [d_v], kind, rng)
        self.layers = [FourierLayer(d_v, cfg["k_max"], rng) for _ in range(cfg["n_layers"])]
        self.proj = MLP([d_v] + cfg["proj_hidden"] + [cfg["n_ch"]], kind, rng)

    def parameters(self):
        out = self.lift.parameters("lift")
        for j, layer in enumerate(self.layers):
            out += layer.parameters(f"layer{j}")
        return out + self.proj.parameters("proj")

    def check_length(self, n_t):
        n = n_t + self.config["padding"]
        if self.config["k_max"] > n // 2 + 1:
            raise ConfigurationError(
                f"k_max={self.config['k_max']} exceeds the {n // 2 + 1} modes of a {n}-point signal")

    def forward(self, x):
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=float))
        if x.ndim != 3 or x.shape[-1] != self.n_in:
            raise ConfigurationError(f"FNO expects inputs (M, n_t, {self.n_in}), got {x.shape}")
        m, n_t, _ = x.shape
        self.check_length(n_t)
        h = channels_first(x)  # (M, n_in, n_t)
        if self.config["grid"]:
            grid = np.broadcast_to(np.linspace(0.0, 1.0, n_t), (m, 1, n_t))
            h = concat([h, Tensor(grid)], axis=1)
        h = self.lift(h)
        pad = self.config["padding"]
        if pad:
            h = concat([h, Tensor(np.zeros((m, self.config["d_v"], pad)))], axis=-1)
        for layer in self.layers:
            h = layer(h, self.config["activation"])
        if pad:
            h = h[..., :n_t]
        return channels_first(self.proj(h))


def fno_forward(model, X):
    """Evaluate on standardized inputs ``(n_t, n_in)`` or ``(M, n_t, n_in)``."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    out = model.forward(X[None] if single else X).values
    return out[0] if single else out
