"""Fully non-stationary stochastic ground motion (filtered white noise)."""

from hazardops.excitation.envelope import (
    EnvelopeShape,
    arias_fraction_times,
    calibrate_envelope,
    modulating_envelope,
)
from hazardops.excitation.filters import damped_sine, filter_impulse_response
from hazardops.excitation.generator import (
    FFT_THRESHOLD,
    GroundMotionRecord,
    arias_intensity,
    filter_std,
    generate,
    generate_many,
    normalized_core,
    trim_and_downsample,
    white_noise,
)
from hazardops.excitation.params import GroundMotionParams

__all__ = [
    "EnvelopeShape", "FFT_THRESHOLD", "GroundMotionParams", "GroundMotionRecord", "arias_fraction_times",
    "arias_intensity", "calibrate_envelope", "damped_sine", "filter_impulse_response", "filter_std",
    "generate", "generate_many", "modulating_envelope", "normalized_core", "trim_and_downsample",
    "white_noise",
]
