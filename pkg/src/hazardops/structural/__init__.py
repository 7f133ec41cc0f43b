"""Nonlinear shear-building simulator used as the high-fidelity oracle."""

from hazardops.structural.hysteresis import MPSpringState, mp_force
from hazardops.structural.model import (
    GRAVITY,
    ShearBuildingModel,
    assemble_linear_matrices,
    modal_analysis,
    rayleigh_damping,
)
from hazardops.structural.newmark import (
    BACKEND,
    NewmarkConfig,
    ResponseHistory,
    damping_matrix,
    dissipation_at_unloaded_states,
    energy_balance,
    hysteretic_dissipation,
    simulate,
)

__all__ = [
    "BACKEND", "GRAVITY", "MPSpringState", "NewmarkConfig", "ResponseHistory", "ShearBuildingModel",
    "assemble_linear_matrices", "damping_matrix", "dissipation_at_unloaded_states", "energy_balance", "hysteretic_dissipation",
    "modal_analysis", "mp_force", "rayleigh_damping", "simulate",
]
