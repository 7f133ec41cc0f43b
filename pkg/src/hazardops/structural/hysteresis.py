"""Giuffre-Menegotto-Pinto story spring in the Steel02 formulation.

The law is written for force/drift instead of stress/strain. Isotropic
hardening is off, so the asymptotes never shift. The transition exponent
degrades with the plastic excursion ``xi`` as
``R = R0 * (1 - cR1 * xi / (cR2 + xi))``.

The committed-state layout below is shared with the compiled kernel; keep
both in sync.
"""

from dataclasses import dataclass, fields

# slots in the packed state vector
EPSMIN, EPSMAX, EPSPL, EPSS0, SIGS0, EPSR, SIGR, KON, EPS, SIG, TANGENT = range(11)
STATE_SIZE = 11

_TINY = 10.0 * 2.220446049250313e-16


@dataclass
class MPSpringState:
    """Committed state of one story spring."""

    min_drift: float = 0.0
    max_drift: float = 0.0
    plastic_drift: float = 0.0
    asymptote_drift: float = 0.0
    asymptote_force: float = 0.0
    reversal_drift: float = 0.0
    reversal_force: float = 0.0
    direction: int = 0  # 0 virgin, 1 loading up, 2 loading down, 3 at rest
    drift: float = 0.0
    force: float = 0.0
    tangent: float = 0.0

    @classmethod
    def initial(cls, initial_stiffness):
        return cls(tangent=float(initial_stiffness))

    def pack(self):
        return [float(getattr(self, f.name)) for f in fields(self)]

    @classmethod
    def unpack(cls, values):
        vals = list(values)
        vals[KON] = int(vals[KON])
        return cls(*vals)


def steel02_trial(s, eps, E0, Fy, b, R0, cR1, cR2):
    """Trial force and tangent at drift ``eps`` from packed committed state ``s``.

    Returns ``(force, tangent, trial_state)``; ``s`` is not modified.
    """
    t = list(s)
    epsP = s[EPS]
    sigP = s[SIG]
    deps = eps - epsP
    Esh = b * E0
    epsy = Fy / E0
    kon = int(s[KON])
    if kon == 0 or kon == 3:
        if abs(deps) < _TINY:
            t[EPS] = eps
            t[SIG] = 0.0
            t[TANGENT] = E0
            t[KON] = 3
            return 0.0, E0, t
        t[EPSMAX] = epsy
        t[EPSMIN] = -epsy
        if deps < 0.0:
            kon = 2
            t[EPSS0] = -epsy
            t[SIGS0] = -Fy
            t[EPSPL] = -epsy
        else:
            kon = 1
            t[EPSS0] = epsy
            t[SIGS0] = Fy
            t[EPSPL] = epsy
    if kon == 2 and deps > 0.0:
        kon = 1
        t[EPSR] = epsP
        t[SIGR] = sigP
        if epsP < t[EPSMIN]:
            t[EPSMIN] = epsP
        t[EPSS0] = (Fy - Esh * epsy - sigP + E0 * epsP) / (E0 - Esh)
        t[SIGS0] = Fy + Esh * (t[EPSS0] - epsy)
        t[EPSPL] = t[EPSMAX]
    elif kon == 1 and deps < 0.0:
        kon = 2
        t[EPSR] = epsP
        t[SIGR] = sigP
        if epsP > t[EPSMAX]:
            t[EPSMAX] = epsP
        t[EPSS0] = (-Fy + Esh * epsy - sigP + E0 * epsP) / (E0 - Esh)
        t[SIGS0] = -Fy + Esh * (t[EPSS0] + epsy)
        t[EPSPL] = t[EPSMIN]
    t[KON] = kon
    epsr = t[EPSR]
    sigr = t[SIGR]
    span = t[EPSS0] - epsr
    if span == 0.0:
        sig = sigr + E0 * (eps - epsr)
        e = E0
    else:
        xi = abs((t[EPSPL] - t[EPSS0]) / epsy)
        R = R0 * (1.0 - (cR1 * xi) / (cR2 + xi))
        epsrat = (eps - epsr) / span
        dum1 = 1.0 + abs(epsrat) ** R
        dum2 = dum1 ** (1.0 / R)
        sig = (b * epsrat + (1.0 - b) * epsrat / dum2) * (t[SIGS0] - sigr) + sigr
        e = (b + (1.0 - b) / (dum1 * dum2)) * (t[SIGS0] - sigr) / span
    t[EPS] = eps
    t[SIG] = sig
    t[TANGENT] = e
    return sig, e, t


def mp_force(state, new_drift, model):
    """Evaluate one story spring of ``model`` at ``new_drift``.

    Returns ``(force, tangent, new_state)``; the new state is what would be
    committed if the drift is accepted.
    """
    force, tangent, packed = steel02_trial(
        state.pack(), float(new_drift), model.initial_stiffness, model.yield_force,
        model.post_yield_ratio, model.r0, model.cr1, model.cr2,
    )
    return force, tangent, MPSpringState.unpack(packed)
