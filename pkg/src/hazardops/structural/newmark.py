"""Nonlinear time-history analysis of a shear building under base excitation.

Solves ``M u'' + C u' + f_NL(u) = -M 1 ag(t)`` for floor displacements
relative to the ground, with the Newmark average-acceleration rule and
Newton-Raphson equilibrium iterations at every step.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from hazardops import io as hio
from hazardops._backend import load_compiled
from hazardops.errors import ConvergenceError, DimensionError, ParameterError
from hazardops.structural import _newmark_py
from hazardops.structural.model import assemble_linear_matrices, rayleigh_damping

_compiled = load_compiled("structural._newmark")
BACKEND = "compiled" if _compiled is not None else "python"


@dataclass(frozen=True)
class NewmarkConfig:
    dt: float = 0.005
    duration: float = 30.0
    gamma: float = 0.5
    beta: float = 0.25
    nr_tolerance: float = 1e-8
    nr_max_iters: int = 50
    max_halvings: int = 4

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.nr_max_iters < 1:
            raise ParameterError("nr_max_iters must be >= 1")
        if not self.duration > 0:
            raise ParameterError(f"duration must be positive, got {self.duration}")

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt)) + 1

    def time_grid(self):
        return np.arange(self.n_steps) * self.dt


@dataclass
class ResponseHistory:
    """Floor response on one time grid; arrays are ``(n_t, n_stories)``."""

    time: np.ndarray
    displacement: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    story_force: np.ndarray
    story_tangent: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def story_drift(self):
        u = self.displacement
        return np.diff(np.concatenate([np.zeros((u.shape[0], 1)), u], axis=1), axis=1)

    COLUMNS = ("displacement", "velocity", "acceleration", "story_force", "story_tangent")

    def save(self, path):
        """Write binary blocks plus a JSON sidecar; returns the sidecar path."""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        hio.write_block(path / "time.f64", self.time)
        for name in self.COLUMNS:
            hio.write_block(path / f"{name}.f64", getattr(self, name))
        n_t, n = self.displacement.shape
        sidecar = {
            "format": "hazardops.response/1",
            "shape": [n_t, n],
            "dt": float(self.time[1] - self.time[0]) if n_t > 1 else None,
            "units": {"time": "s", "displacement": "in", "velocity": "in/s",
                      "acceleration": "in/s^2 (relative to ground)", "story_force": "kip",
                      "story_tangent": "kip/in"},
            "columns": {name: f"{name}.f64: rows are time steps, column j is floor/story j+1"
                        for name in self.COLUMNS},
            "stats": self.stats,
        }
        (path / "response.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
        return path / "response.json"

    @classmethod
    def load(cls, path):
        path = Path(path)
        meta = json.loads((path / "response.json").read_text())
        arrays = {name: hio.read_block(path / f"{name}.f64") for name in cls.COLUMNS}
        return cls(time=hio.read_block(path / "time.f64"), stats=meta.get("stats", {}), **arrays)

    def to_csv(self, path, column="displacement"):
        data = np.column_stack([self.time, getattr(self, column)])
        header = "time," + ",".join(f"floor{j + 1}" for j in range(data.shape[1] - 1))
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def damping_matrix(model):
    M, K0 = assemble_linear_matrices(model)
    if model.damping_ratio == 0.0:
        return np.zeros_like(M), (0.0, 0.0)
    return rayleigh_damping(M, K0, model.damping_ratio)


def simulate(model, cfg, ground_accel, substeps=1, backend=None):
    """Integrate the equations of motion for one ground-acceleration record.

    ``ground_accel`` (in/s^2) is sampled on ``cfg``'s grid. ``substeps``
    splits each output step into equal sub-steps with linearly interpolated
    excitation (used for time-step convergence checks). Steps whose
    Newton-Raphson iterations stall are retried with the step halved, up to
    ``cfg.max_halvings`` times.
    """
    ag = np.ascontiguousarray(ground_accel, dtype=np.float64)
    if ag.ndim != 1:
        raise DimensionError(f"ground_accel must be 1-D, got shape {ag.shape}")
    if ag.size != cfg.n_steps:
        raise DimensionError(f"ground_accel has {ag.size} points, grid needs {cfg.n_steps}")
    C, _ = damping_matrix(model)
    n = model.n_stories
    args = (
        model.masses(), model.stiffnesses(),
        np.full(n, float(model.yield_force)), np.full(n, float(model.post_yield_ratio)),
        float(model.r0), float(model.cr1), float(model.cr2),
        np.array(np.diag(C)), np.array(np.diag(C, 1)) if n > 1 else np.zeros(1),
        ag, float(cfg.dt), float(cfg.gamma), float(cfg.beta), float(cfg.nr_tolerance),
        int(cfg.nr_max_iters), int(cfg.max_halvings), int(substeps),
    )
    kernel = _pick(backend)
    status, step, U, V, A, F, T, iters, halvings = kernel(*args)
    if status != 0:
        raise ConvergenceError(
            f"Newton-Raphson did not converge at step {step} (t = {step * cfg.dt:.4f} s) "
            f"after {cfg.max_halvings} step halvings"
        )
    return ResponseHistory(
        time=cfg.time_grid(), displacement=U, velocity=V, acceleration=A,
        story_force=F, story_tangent=T,
        stats={"nr_iterations": int(iters), "halvings": int(halvings),
               "backend": kernel.__module__.rsplit(".", 1)[-1]},
    )


def _pick(backend):
    if backend is None:
        backend = BACKEND
    if backend == "python":
        return _newmark_py.run_newmark
    if backend == "compiled":
        if _compiled is None:
            raise ParameterError("compiled Newmark kernel is not built")
        return _compiled.run_newmark
    raise ParameterError(f"unknown backend '{backend}'")


def _trapezoid_cumulative(rate, dt):
    out = np.zeros_like(rate)
    out[1:] = np.cumsum(0.5 * (rate[1:] + rate[:-1]) * dt)
    return out


def energy_balance(model, history, ground_accel):
    """Cumulative energy terms and the relative balance residual.

    Input energy is ``-sum m_i ag u'_i dt`` (trapezoidal). The restoring
    term integrates story force over drift increments, so it holds both
    recoverable strain energy and hysteretic dissipation.
    """
    M, _ = assemble_linear_matrices(model)
    C, _ = damping_matrix(model)
    dt = history.time[1] - history.time[0]
    v = history.velocity
    m = np.diag(M)
    ag = np.asarray(ground_accel, dtype=float)
    e_input = _trapezoid_cumulative(-(v @ m) * ag, dt)
    e_kinetic = 0.5 * np.einsum("ti,i,ti->t", v, m, v)
    e_damped = _trapezoid_cumulative(np.einsum("ti,ij,tj->t", v, C, v), dt)
    f = history.story_force
    ddrift = np.diff(history.story_drift, axis=0)
    e_restoring = np.zeros(len(v))
    e_restoring[1:] = np.cumsum((0.5 * (f[1:] + f[:-1]) * ddrift).sum(axis=1))
    residual = e_input - (e_kinetic + e_damped + e_restoring)
    scale = max(abs(e_input[-1]), 1e-300)
    return {
        "input": e_input, "kinetic": e_kinetic, "damped": e_damped, "restoring": e_restoring,
        "residual": residual, "relative_residual": float(abs(residual[-1]) / scale),
    }


def hysteretic_dissipation(model, history):
    """Per-story dissipated energy, ``(n_t, n_stories)``.

    Work done on each spring minus the elastic energy it could release if
    unloaded along the initial stiffness.
    """
    f = history.story_force
    ddrift = np.diff(history.story_drift, axis=0)
    work = np.zeros_like(f)
    work[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * ddrift, axis=0)
    return work - f ** 2 / (2.0 * model.initial_stiffness)


def dissipation_at_unloaded_states(model, history):
    """Hysteretic dissipation sampled where each story force crosses zero.

    Between steps ``W - f^2/(2 K_e)`` can dip slightly while a spring
    unloads along the curved Menegotto-Pinto branch. At zero force nothing
    is stored elastically, so there the dissipation equals the cumulative
    work exactly. Returns one 1-D array per story, linearly interpolated to
    the crossing instants.
    """
    f = history.story_force
    d = hysteretic_dissipation(model, history)
    out = []
    for j in range(f.shape[1]):
        fj, dj = f[:, j], d[:, j]
        k = np.nonzero(fj[:-1] * fj[1:] < 0.0)[0]
        w = fj[k] / (fj[k] - fj[k + 1])
        out.append(dj[k] + w * (dj[k + 1] - dj[k]))
    return out


def config_dict(cfg):
    return asdict(cfg)
