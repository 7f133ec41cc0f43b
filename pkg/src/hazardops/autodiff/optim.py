"""Adam with bias correction; moment buffers live on the optimizer."""

import numpy as np

from hazardops.errors import StateError


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        adam_step(self.params, self.lr, self.beta1, self.beta2, self.eps, self.t, self.m, self.v)


def adam_step(params, lr, beta1, beta2, eps, t, m, v):
    """Apply one in-place Adam update to ``params`` at step index ``t >= 1``.

    ``m`` and ``v`` are the per-parameter first/second moment buffers and are
    updated in place.
    """
    if t < 1:
        raise StateError(f"Adam step index must be >= 1, got {t}")
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, mi, vi in zip(params, m, v):
        if p.grad is None:
            raise StateError(f"parameter {p!r} has no gradient; run backward first")
        g = p.grad
        mi *= beta1
        mi += (1.0 - beta1) * g
        vi *= beta2
        vi += (1.0 - beta2) * g * g
        p.values -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
