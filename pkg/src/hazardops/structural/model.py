"""Shear-building description and its linear (initial-stiffness) properties.

Units are kip, inch, second throughout.
"""

from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg

from hazardops.errors import NumericalError, ParameterError

GRAVITY = 386.4  # in/s^2


@dataclass(frozen=True)
class ShearBuildingModel:
    """Uniform N-story shear building with Menegotto-Pinto story springs.

    Defaults are the six-story mid-rise steel building: 100 in stories,
    60 kip floors, 300 kip/in initial story stiffness, 10% post-yield ratio,
    R0 = 15. ``yield_force`` is a story shear in kips.
    """

    n_stories: int = 6
    story_height: float = 100.0
    floor_weight: float = 60.0
    initial_stiffness: float = 300.0
    post_yield_ratio: float = 0.1
    yield_force: float = 20.0
    r0: float = 15.0
    cr1: float = 0.925
    cr2: float = 0.15
    damping_ratio: float = 0.05
    gravity: float = GRAVITY

    def __post_init__(self):
        if int(self.n_stories) != self.n_stories or self.n_stories < 1:
            raise ParameterError(f"n_stories must be a positive integer, got {self.n_stories}")
        for name in ("story_height", "floor_weight", "initial_stiffness", "yield_force", "r0", "gravity"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if not 0.0 < self.post_yield_ratio < 1.0:
            raise ParameterError(f"post_yield_ratio must lie in (0, 1), got {self.post_yield_ratio}")
        if not 0.0 <= self.damping_ratio < 1.0:
            raise ParameterError(f"damping_ratio must lie in [0, 1), got {self.damping_ratio}")
        if self.cr1 < 0 or self.cr2 <= 0:
            raise ParameterError("curvature degradation constants must satisfy cr1 >= 0, cr2 > 0")

    @property
    def floor_mass(self):
        return self.floor_weight / self.gravity

    @property
    def yield_drift(self):
        return self.yield_force / self.initial_stiffness

    def masses(self):
        return np.full(self.n_stories, self.floor_mass)

    def stiffnesses(self):
        return np.full(self.n_stories, float(self.initial_stiffness))

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        data = self.to_dict()
        data.update(changes)
        return ShearBuildingModel(**data)


def tridiagonal_stiffness(k):
    """Shear-building stiffness matrix from per-story spring stiffnesses.

    Story ``i`` connects floor ``i`` to floor ``i - 1`` (the ground for i = 0).
    """
    k = np.asarray(k, dtype=float)
    n = k.size
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] += k[i]
        if i > 0:
            K[i - 1, i - 1] += k[i]
            K[i - 1, i] -= k[i]
            K[i, i - 1] -= k[i]
    return K


def assemble_linear_matrices(model):
    """Diagonal mass matrix and initial tridiagonal stiffness matrix."""
    M = np.diag(model.masses())
    K0 = tridiagonal_stiffness(model.stiffnesses())
    return M, K0


def modal_analysis(model=None, M=None, K=None):
    """Ascending circular frequencies (rad/s) and mass-normalized mode shapes.

    Shapes are the columns of the returned matrix, scaled so that
    ``phi.T @ M @ phi = I``.
    """
    if M is None or K is None:
        M, K = assemble_linear_matrices(model)
    try:
        w2, phi = scipy.linalg.eigh(K, M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"generalized eigenproblem failed: {exc}") from exc
    if np.any(w2 <= 0):
        raise NumericalError("stiffness matrix is not positive definite")
    # fix the sign so the top-floor component is positive
    phi = phi * np.sign(phi[-1, :])
    return np.sqrt(w2), phi


def rayleigh_coefficients(omega1, omega2, zeta):
    """(a0, a1) such that a0*M + a1*K gives ratio ``zeta`` at both frequencies."""
    return 2.0 * zeta * omega1 * omega2 / (omega1 + omega2), 2.0 * zeta / (omega1 + omega2)


def rayleigh_damping(M, K0, zeta, modes=(1, 2)):
    """Rayleigh damping matrix matched to ``zeta`` at two natural frequencies.

    ``modes`` are 1-based mode numbers. A single-DOF system has only one
    frequency, which is used for both anchors (giving ``c = 2 zeta omega m``).
    """
    omega, _ = modal_analysis(M=np.atleast_2d(M), K=np.atleast_2d(K0))
    if omega.size == 1:
        w1 = w2 = omega[0]
    else:
        w1, w2 = omega[modes[0] - 1], omega[modes[1] - 1]
        if abs(w2 - w1) <= 1e-12 * max(w1, w2):
            raise NumericalError(f"anchor frequencies coincide ({w1} rad/s); Rayleigh system is singular")
    a0, a1 = rayleigh_coefficients(w1, w2, zeta)
    return a0 * np.atleast_2d(M) + a1 * np.atleast_2d(K0), (a0, a1)
