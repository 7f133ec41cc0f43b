"""Pure-Python Newmark / Newton-Raphson kernel for shear buildings.

Mirrors ``_newmark.pyx`` operation for operation so both backends give the
same histories. Status codes: 0 ok, 1 Newton-Raphson failed after every
allowed step halving.
"""

import numpy as np

from hazardops.structural.hysteresis import SIG, STATE_SIZE, TANGENT, steel02_trial


def _solve_tridiagonal(d, o, rhs):
    n = len(d)
    cp = [0.0] * n
    dp = [0.0] * n
    cp[0] = o[0] / d[0] if n > 1 else 0.0
    dp[0] = rhs[0] / d[0]
    for i in range(1, n):
        den = d[i] - o[i - 1] * cp[i - 1]
        cp[i] = o[i] / den if i < n - 1 else 0.0
        dp[i] = (rhs[i] - o[i - 1] * dp[i - 1]) / den
    x = [0.0] * n
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _substep(st, u, v, a, ag1, h, p):
    mass, k0, fy, b = p["mass"], p["k0"], p["fy"], p["b"]
    r0, cr1, cr2 = p["r0"], p["cr1"], p["cr2"]
    cd, co = p["c_diag"], p["c_off"]
    gamma, beta, tol, max_iter = p["gamma"], p["beta"], p["tol"], p["max_iter"]
    n = len(mass)
    c0 = 1.0 / (beta * h * h)
    c1 = gamma / (beta * h)
    c2 = 1.0 / (beta * h)
    c3 = 0.5 / beta - 1.0
    un = list(u)
    for it in range(max_iter + 1):
        an = [c0 * (un[i] - u[i]) - c2 * v[i] - c3 * a[i] for i in range(n)]
        vn = [v[i] + h * ((1.0 - gamma) * a[i] + gamma * an[i]) for i in range(n)]
        trial = []
        force = [0.0] * n
        kt = [0.0] * n
        for i in range(n):
            drift = un[i] - (un[i - 1] if i > 0 else 0.0)
            force[i], kt[i], ts = steel02_trial(st[i], drift, k0[i], fy[i], b[i], r0, cr1, cr2)
            trial.append(ts)
        r = [0.0] * n
        norm = 0.0
        for i in range(n):
            fnl = force[i] - (force[i + 1] if i < n - 1 else 0.0)
            cv = cd[i] * vn[i]
            if i > 0:
                cv += co[i - 1] * vn[i - 1]
            if i < n - 1:
                cv += co[i] * vn[i + 1]
            r[i] = mass[i] * (an[i] + ag1) + cv + fnl
            norm = max(norm, abs(r[i]))
        if norm < tol:
            return True, it, un, vn, an, trial
        if it == max_iter:
            break
        d = [0.0] * n
        o = [0.0] * max(n - 1, 1)
        for i in range(n):
            d[i] = kt[i] + (kt[i + 1] if i < n - 1 else 0.0) + c0 * mass[i] + c1 * cd[i]
            if i < n - 1:
                o[i] = -kt[i + 1] + c1 * co[i]
        du = _solve_tridiagonal(d, o, [-x for x in r])
        un = [un[i] + du[i] for i in range(n)]
    return False, max_iter, un, None, None, None


def run_newmark(mass, k0, fy, b, r0, cr1, cr2, c_diag, c_off, ag, dt, gamma, beta,
                tol, max_iter, max_halvings, substeps):
    n = len(mass)
    nt = len(ag)
    p = dict(
        mass=[float(x) for x in mass], k0=[float(x) for x in k0], fy=[float(x) for x in fy],
        b=[float(x) for x in b], r0=float(r0), cr1=float(cr1), cr2=float(cr2),
        c_diag=[float(x) for x in c_diag], c_off=[float(x) for x in c_off],
        gamma=float(gamma), beta=float(beta), tol=float(tol), max_iter=int(max_iter),
    )
    U = np.zeros((nt, n))
    V = np.zeros((nt, n))
    A = np.zeros((nt, n))
    F = np.zeros((nt, n))
    T = np.zeros((nt, n))
    st = [[0.0] * STATE_SIZE for _ in range(n)]
    for i in range(n):
        st[i][TANGENT] = p["k0"][i]
    T[0, :] = p["k0"]
    u = [0.0] * n
    v = [0.0] * n
    # initial equilibrium with zero displacement and velocity
    a = [-float(ag[0])] * n
    A[0, :] = a
    iters = 0
    halvings = 0
    for k in range(nt - 1):
        ag0 = float(ag[k])
        ag1 = float(ag[k + 1])
        ok = False
        for level in range(max_halvings + 1):
            nsub = substeps << level
            h = dt / nsub
            su, sv, sa, sst = list(u), list(v), list(a), [list(s) for s in st]
            ok = True
            for s in range(nsub):
                agb = ag0 + (ag1 - ag0) * (s + 1) / nsub
                conv, it, un, vn, an, trial = _substep(sst, su, sv, sa, agb, h, p)
                iters += it
                if not conv:
                    ok = False
                    break
                su, sv, sa, sst = un, vn, an, trial
            if ok:
                halvings += level
                u, v, a, st = su, sv, sa, sst
                break
        if not ok:
            return 1, k + 1, U, V, A, F, T, iters, halvings
        U[k + 1, :] = u
        V[k + 1, :] = v
        A[k + 1, :] = a
        F[k + 1, :] = [s[SIG] for s in st]
        T[k + 1, :] = [s[TANGENT] for s in st]
    return 0, nt - 1, U, V, A, F, T, iters, halvings
