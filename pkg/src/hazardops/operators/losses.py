"""Training losses and self-adaptive per-time-point weights.

Both losses reduce as ``(1/M) sum_i sum_j mean_c (residual)^2`` over
samples ``i``, time points ``j`` and output channels ``c``. The
self-adaptive loss multiplies each time point by ``g(lambda_j)``.
"""

import numpy as np

from hazardops.autodiff import Tensor, as_tensor
from hazardops.errors import ConfigurationError, DimensionError


def _residual(pred, truth):
    pred = as_tensor(pred)
    truth = as_tensor(truth)
    if pred.shape != truth.shape:
        raise DimensionError(f"prediction {pred.shape} and truth {truth.shape} differ")
    if pred.ndim != 3:
        raise DimensionError(f"expected (M, n_t, n_ch) arrays, got {pred.shape}")
    return pred - truth


def standard_loss(pred, truth):
    r = _residual(pred, truth)
    m, _, n_ch = r.shape
    return (r * r).sum() * (1.0 / (m * n_ch))


MASKS = ("square",)


class SAWeights:
    """Trainable multipliers, one per output time point (optionally per channel).

    ``g(lambda) = lambda^2`` keeps every weight non-negative and increasing
    for the positive values produced by ascent from ``lambda0 > 0``.
    """

    def __init__(self, n_t, n_ch=1, per_channel=False, lr=1e-2, init=1.0, mask="square"):
        if mask not in MASKS:
            raise ConfigurationError(f"unknown mask function '{mask}'")
        if not init > 0:
            raise ConfigurationError("self-adaptive weights must start positive")
        shape = (int(n_t), int(n_ch)) if per_channel else (int(n_t), 1)
        self.lam = Tensor(np.full(shape, float(init)), requires_grad=True)
        self.lr = float(lr)
        self.per_channel = bool(per_channel)
        self.mask = mask

    @property
    def values(self):
        return self.lam.values

    def g(self):
        return self.lam * self.lam

    def g_prime(self):
        return 2.0 * self.lam.values

    def ascend(self):
        """Apply ``lambda <- lambda + lr * dL/dlambda`` from the stored tape gradient."""
        if self.lam.grad is not None:
            self.lam.values = self.lam.values + self.lr * self.lam.grad
        self.lam.grad = None

    def to_dict(self):
        return {"lr": self.lr, "per_channel": self.per_channel, "mask": self.mask}


def sa_loss(pred, truth, sa):
    r = _residual(pred, truth)
    m, n_t, n_ch = r.shape
    if sa.lam.shape[0] != n_t or sa.lam.shape[1] not in (1, n_ch):
        raise DimensionError(f"lambda has shape {sa.lam.shape}, residuals have {n_t} points x {n_ch} channels")
    return (sa.g() * (r * r)).sum() * (1.0 / (m * n_ch))


def lambda_ascent_step(sa, pred, truth):
    """One gradient-ascent step on ``lambda`` with the analytic gradient.

    ``dL/dlambda_j = g'(lambda_j) * (1/M) sum_i mean_c r_ijc^2``; the model
    parameters are not touched.
    """
    pred = np.asarray(pred.values if isinstance(pred, Tensor) else pred, dtype=float)
    truth = np.asarray(truth.values if isinstance(truth, Tensor) else truth, dtype=float)
    if pred.shape != truth.shape:
        raise DimensionError(f"prediction {pred.shape} and truth {truth.shape} differ")
    r2 = (pred - truth) ** 2
    m, _, n_ch = r2.shape
    if sa.per_channel:
        grad = sa.g_prime() * r2.sum(axis=0) / (m * n_ch)
    else:
        grad = sa.g_prime() * r2.sum(axis=(0, 2))[:, None] / (m * n_ch)
    sa.lam.values = sa.lam.values + sa.lr * grad
