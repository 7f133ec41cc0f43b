"""Minimal reverse-mode autodiff with a differentiable real FFT pair."""

from hazardops.autodiff.optim import Adam, adam_step
from hazardops.autodiff.spectral import ComplexSpectrum, irfft, rfft, spectral_multiply
from hazardops.autodiff.tensor import (
    ACTIVATIONS,
    Tensor,
    activation,
    as_tensor,
    backward,
    concat,
    exp,
    matmul,
    mean,
    no_grad,
    reshape,
    tape,
    transpose,
    tsum,
)

__all__ = [
    "ACTIVATIONS", "Adam", "ComplexSpectrum", "Tensor", "activation", "adam_step", "as_tensor",
    "backward", "concat", "exp", "irfft", "matmul", "mean", "no_grad", "reshape", "rfft",
    "spectral_multiply", "tape", "transpose", "tsum",
]
