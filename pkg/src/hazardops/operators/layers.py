"""Dense building blocks shared by the operator architectures.

Layers act on channel-first arrays: an input of shape ``(..., d_in, n)``
maps to ``(..., d_out, n)`` with ``W @ x + b``. Time-major data is
transposed once at the model boundary.
"""

import numpy as np

from hazardops.autodiff import Tensor, activation, matmul
from hazardops.autodiff.tensor import ACTIVATIONS
from hazardops.errors import ConfigurationError


def glorot(rng, d_out, d_in):
    limit = np.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-limit, limit, size=(d_out, d_in))


class Dense:
    """Affine map over the channel axis (second to last)."""

    def __init__(self, d_in, d_out, rng=None, weight=None, bias=None):
        if weight is None:
            weight = glorot(rng, d_out, d_in)
        if bias is None:
            bias = np.zeros((d_out, 1))
        self.weight = Tensor(np.array(weight, dtype=float).reshape(d_out, d_in), requires_grad=True)
        self.bias = Tensor(np.array(bias, dtype=float).reshape(d_out, 1), requires_grad=True)

    def __call__(self, x):
        return matmul(self.weight, x) + self.bias

    def parameters(self, prefix):
        return [(f"{prefix}.weight", self.weight), (f"{prefix}.bias", self.bias)]


class MLP:
    """Stack of :class:`Dense` layers; activation between layers, none after the last."""

    def __init__(self, widths, kind="tanh", rng=None):
        if len(widths) < 2:
            raise ConfigurationError(f"an MLP needs at least input and output widths, got {widths}")
        if kind not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation '{kind}'")
        self.widths = [int(w) for w in widths]
        self.kind = kind
        self.layers = [Dense(a, b, rng) for a, b in zip(self.widths[:-1], self.widths[1:])]

    def __call__(self, x):
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = activation(x, self.kind)
        return x

    def parameters(self, prefix):
        out = []
        for i, layer in enumerate(self.layers):
            out += layer.parameters(f"{prefix}.{i}")
        return out
