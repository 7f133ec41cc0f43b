"""Deep operator network: branch encodes the input function, trunk the time."""

import numpy as np

from hazardops.autodiff import Tensor, activation, matmul
from hazardops.errors import ConfigurationError
from hazardops.operators.base import OperatorModel
from hazardops.operators.layers import MLP

DEFAULTS = dict(n_t=None, n_ch=1, p=64, branch_hidden=(128, 128), trunk_hidden=(128, 128),
                activation="tanh", seed=0)


class DeepONet(OperatorModel):
    """``G(F)(t)[c] = sum_i b[c, i](F) * c_i(t) + bias[c]``.

    The branch output of width ``p * n_ch`` is split into ``n_ch`` blocks of
    ``p`` coefficients, one per output channel; all channels share the trunk
    basis. The trunk sees normalized time ``t / T`` on ``[0, 1]`` and keeps
    its activation on the last layer.
    """

    kind = "deeponet"

    def __init__(self, **config):
        cfg = dict(DEFAULTS)
        unknown = set(config) - set(cfg)
        if unknown:
            raise ConfigurationError(f"unknown DeepONet options: {sorted(unknown)}")
        cfg.update(config)
        if cfg["n_t"] is None:
            raise ConfigurationError("DeepONet needs the branch input width n_t")
        cfg["branch_hidden"] = [int(w) for w in cfg["branch_hidden"]]
        cfg["trunk_hidden"] = [int(w) for w in cfg["trunk_hidden"]]
        cfg["n_in"] = 1
        super().__init__(cfg)
        rng = np.random.default_rng(cfg["seed"])
        p, n_ch, kind = int(cfg["p"]), int(cfg["n_ch"]), cfg["activation"]
        self.branch = MLP([cfg["n_t"]] + cfg["branch_hidden"] + [p * n_ch], kind, rng)
        self.trunk = MLP([1] + cfg["trunk_hidden"] + [p], kind, rng)
        self.bias = Tensor(np.zeros((n_ch, 1)), requires_grad=True)
        self.times = np.linspace(0.0, 1.0, cfg["n_t"])

    @property
    def p(self):
        return int(self.config["p"])

    def parameters(self):
        return self.branch.parameters("branch") + self.trunk.parameters("trunk") + [("bias", self.bias)]

    def basis(self, times=None):
        """Trunk outputs ``(p, n_t)`` at normalized times."""
        t = self.times if times is None else np.asarray(times, dtype=float)
        return activation(self.trunk(Tensor(t[None, :])), self.config["activation"])

    def coefficients(self, x):
        """Branch outputs ``(M, n_ch, p)`` for standardized inputs ``(M, n_t, 1)``."""
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=float))
        if x.shape[-2] != self.config["n_t"] or x.shape[-1] != 1:
            raise ConfigurationError(
                f"branch expects inputs of shape (M, {self.config['n_t']}, 1), got {x.shape}")
        b = self.branch(x)  # (M, p * n_ch, 1)
        return b.reshape(x.shape[0], self.n_ch, self.p)

    def forward(self, x, times=None):
        coef = self.coefficients(x)
        out = matmul(coef, self.basis(times)) + self.bias  # (M, n_ch, n_t)
        return out.swapaxes(-1, -2)


def deeponet_forward(model, F, times=None):
    """Evaluate on standardized excitation ``F`` (``(n_t,)`` or ``(M, n_t)``).

    Returns ``(n_t, n_ch)`` for a single sample, else ``(M, n_t, n_ch)``.
    """
    F = np.asarray(F, dtype=float)
    single = F.ndim == 1
    x = F.reshape(1, -1, 1) if single else F[:, :, None]
    out = model.forward(x, times).values
    return out[0] if single else out
