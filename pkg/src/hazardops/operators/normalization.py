"""Per-channel standardization with training-set statistics."""

import numpy as np

from hazardops.errors import ConfigurationError


class Standardizer:
    """Zero-mean, unit-variance scaling of the trailing channel axis.

    Arrays are time-major, ``(..., n_t, n_ch)``.
    """

    def __init__(self, mean, std):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.std = np.atleast_1d(np.asarray(std, dtype=float))
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ConfigurationError("mean and std must be matching 1-D arrays")
        if np.any(self.std <= 0):
            raise ConfigurationError("standard deviations must be positive")

    @classmethod
    def fit(cls, data):
        data = np.asarray(data, dtype=float)
        flat = data.reshape(-1, data.shape[-1])
        std = flat.std(axis=0)
        return cls(flat.mean(axis=0), np.where(std > 0, std, 1.0))

    @classmethod
    def identity(cls, n_ch):
        return cls(np.zeros(n_ch), np.ones(n_ch))

    @property
    def n_ch(self):
        return self.mean.size

    def _check(self, x):
        if x.shape[-1] != self.n_ch:
            raise ConfigurationError(f"data has {x.shape[-1]} channels, statistics cover {self.n_ch}")

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        self._check(x)
        return (x - self.mean) / self.std

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        self._check(x)
        return x * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mean"], d["std"])

    def __eq__(self, other):
        return (isinstance(other, Standardizer) and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.std, other.std))
