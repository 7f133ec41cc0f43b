"""Parameters of the non-stationary filtered-white-noise ground motion model."""

from dataclasses import asdict, dataclass

import numpy as np

from hazardops.errors import ParameterError
from hazardops.structural.model import GRAVITY


@dataclass(frozen=True)
class GroundMotionParams:
    """Six model parameters plus the sampling grid.

    Defaults are the Loma Prieta calibration used for the six-story
    building. ``arias_intensity`` is the target of
    ``pi / (2 g) * integral(q(t)^2 dt)`` in the kip-inch-second system, i.e.
    in/s with ``g = 386.4 in/s^2``. A value quoted in g-s converts by
    multiplying with ``gravity``.

    :param effective_duration: time between 5% and 95% of Arias intensity (s)
    :param t_mid: time at which 45% of Arias intensity is reached (s)
    :param omega_mid: filter circular frequency at ``t_mid`` (rad/s)
    :param omega_prime: rate of change of the filter frequency (rad/s per s)
    :param filter_damping: filter damping ratio
    """

    arias_intensity: float = 0.045
    effective_duration: float = 12.62
    t_mid: float = 4.73
    omega_mid: float = 2 * np.pi * 3.27
    omega_prime: float = -2 * np.pi * 0.08
    filter_damping: float = 0.48
    dt: float = 0.005
    n_t: int = 6001
    gravity: float = GRAVITY

    def __post_init__(self):
        if not self.arias_intensity > 0:
            raise ParameterError(f"arias_intensity must be positive, got {self.arias_intensity}")
        if not self.effective_duration > 0:
            raise ParameterError(f"effective_duration must be positive, got {self.effective_duration}")
        if not self.t_mid > 0:
            raise ParameterError(f"t_mid must be positive, got {self.t_mid}")
        if not 0.0 < self.filter_damping < 1.0:
            raise ParameterError(f"filter_damping must lie in (0, 1), got {self.filter_damping}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ParameterError(f"n_t must be an integer >= 2, got {self.n_t}")
        lo = min(self.filter_frequency(0.0), self.filter_frequency(self.duration))
        if not lo > 0:
            raise ParameterError(
                f"filter frequency drops to {lo:.4g} rad/s inside [0, {self.duration:g}] s; "
                "reduce |omega_prime| or the record length"
            )

    @property
    def duration(self):
        return (self.n_t - 1) * self.dt

    def time_grid(self):
        return np.arange(self.n_t) * self.dt

    def filter_frequency(self, tau):
        """Filter circular frequency for an impulse applied at ``tau``."""
        return self.omega_mid + self.omega_prime * (np.asarray(tau, dtype=float) - self.t_mid)

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return GroundMotionParams(**data)
