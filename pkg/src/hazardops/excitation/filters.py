"""Impulse response of the time-varying second-order filter."""

import numpy as np

from hazardops.errors import ParameterError


def damped_sine(lag, omega, zeta):
    """``omega / sqrt(1 - zeta^2) * exp(-zeta omega lag) * sin(omega_d lag)`` for lag >= 0, else 0.

    ``lag`` and ``omega`` broadcast against each other.
    """
    lag = np.asarray(lag, dtype=float)
    omega = np.asarray(omega, dtype=float)
    root = np.sqrt(1.0 - zeta * zeta)
    pos = np.maximum(lag, 0.0)
    h = omega / root * np.exp(-zeta * omega * pos) * np.sin(omega * root * pos)
    return np.where(lag >= 0.0, h, 0.0)


def filter_impulse_response(params, t, tau):
    """Response at ``t`` to a unit impulse applied at ``tau`` (zero for t < tau).

    The filter frequency is frozen at its value at the impulse time,
    ``omega_f(tau) = omega_mid + omega_prime * (tau - t_mid)``.
    """
    omega = params.filter_frequency(tau)
    if np.any(omega <= 0):
        raise ParameterError(f"filter frequency is non-positive at tau = {tau}")
    return damped_sine(np.asarray(t, dtype=float) - np.asarray(tau, dtype=float), omega, params.filter_damping)
