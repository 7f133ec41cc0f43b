"""Error metrics over paired truth/prediction arrays.

Pooled metrics reduce over every entry of the compared arrays; the
``per_sample_*`` variants reduce over each sample's entries (all axes but
the first).
"""

import numpy as np

from hazardops.errors import DimensionError


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise DimensionError(f"truth {y.shape} and prediction {y_hat.shape} differ in shape")
    return y, y_hat


def abs_err(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return np.abs(y - y_hat)


def mse(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def rel_l2(y, y_hat):
    """``||y - y_hat|| / ||y||``; infinite when ``y`` is zero and the prediction is not."""
    y, y_hat = _pair(y, y_hat)
    num = np.sqrt(np.sum((y - y_hat) ** 2))
    den = np.sqrt(np.sum(y ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(num / den)


def per_sample_mse(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    return ((y - y_hat) ** 2).reshape(y.shape[0], -1).mean(axis=1)


def per_sample_rel_l2(y, y_hat):
    y, y_hat = _pair(y, y_hat)
    num = np.sqrt(((y - y_hat) ** 2).reshape(y.shape[0], -1).sum(axis=1))
    den = np.sqrt((y ** 2).reshape(y.shape[0], -1).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(den > 0, out, np.where(num > 0, np.inf, 0.0))
