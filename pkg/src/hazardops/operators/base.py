"""Common plumbing for trainable operator models."""

import numpy as np

from hazardops.autodiff import Tensor, no_grad
from hazardops.errors import ConfigurationError
from hazardops.operators.normalization import Standardizer


class OperatorModel:
    """Parameters, normalization statistics and the raw-data prediction path.

    Subclasses implement :meth:`forward` on standardized, time-major inputs
    ``(M, n_t, n_in)`` and return a tensor ``(M, n_t, n_ch)``.
    """

    kind = None

    def __init__(self, config):
        self.config = dict(config)
        self.input_norm = Standardizer.identity(self.n_in)
        self.output_norm = Standardizer.identity(self.n_ch)
        self.trained = False

    @property
    def n_in(self):
        return int(self.config.get("n_in", 1))

    @property
    def n_ch(self):
        return int(self.config["n_ch"])

    def parameters(self):
        raise NotImplementedError

    def forward(self, x):
        raise NotImplementedError

    def trainable(self):
        return [t for _, t in self.parameters()]

    def state(self):
        return {name: t.values.copy() for name, t in self.parameters()}

    def load_state(self, state):
        params = dict(self.parameters())
        if set(params) != set(state):
            missing = sorted(set(params) ^ set(state))
            raise ConfigurationError(f"parameter sets differ: {missing[:5]}")
        for name, t in params.items():
            value = np.asarray(state[name], dtype=float)
            if value.shape != t.shape:
                raise ConfigurationError(f"parameter {name} has shape {value.shape}, model expects {t.shape}")
            t.values = value.copy()

    def as_inputs(self, excitation):
        """Time-major raw input ``(M, n_t, n_in)`` from ``(M, n_t)`` or ``(M, n_t, n_in)``."""
        x = np.asarray(excitation, dtype=float)
        if x.ndim == 1:
            x = x[None, :, None]
        elif x.ndim == 2:
            x = x[:, :, None]
        if x.shape[-1] != self.n_in:
            raise ConfigurationError(f"inputs have {x.shape[-1]} channels, model expects {self.n_in}")
        return x

    def predict(self, excitation, batch_size=64):
        """De-standardized predictions ``(M, n_t, n_ch)`` for raw excitations."""
        x = self.input_norm.transform(self.as_inputs(excitation))
        out = []
        with no_grad():
            for lo in range(0, x.shape[0], batch_size):
                out.append(self.forward(x[lo:lo + batch_size]).values)
        return self.output_norm.inverse(np.concatenate(out, axis=0))

    def header(self):
        return {"kind": self.kind, "config": self.config,
                "input_norm": self.input_norm.to_dict(), "output_norm": self.output_norm.to_dict()}


def channels_first(x):
    """Time-major numpy array or tensor ``(M, n_t, c)`` to ``(M, c, n_t)``."""
    if isinstance(x, Tensor):
        return x.swapaxes(-1, -2)
    return np.swapaxes(np.asarray(x, dtype=float), -1, -2)
