# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Newmark / Newton-Raphson kernel for shear buildings.

Operation-for-operation twin of ``_newmark_py.py``; keep the two in sync.
"""

import numpy as np

from libc.math cimport fabs, pow
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

DEF NS = 11
DEF EPSMIN = 0
DEF EPSMAX = 1
DEF EPSPL = 2
DEF EPSS0 = 3
DEF SIGS0 = 4
DEF EPSR = 5
DEF SIGR = 6
DEF KON = 7
DEF EPS = 8
DEF SIG = 9
DEF TANGENT = 10

cdef double TINY = 10.0 * 2.220446049250313e-16


cdef inline void steel02(const double* s, double* t, double eps, double E0, double Fy, double b,
                         double R0, double cR1, double cR2) noexcept nogil:
    cdef double epsP = s[EPS]
    cdef double sigP = s[SIG]
    cdef double deps = eps - epsP
    cdef double Esh = b * E0
    cdef double epsy = Fy / E0
    cdef int kon = <int>s[KON]
    cdef double epsr, sigr, span, xi, R, epsrat, dum1, dum2, sig, e
    memcpy(t, s, NS * sizeof(double))
    if kon == 0 or kon == 3:
        if fabs(deps) < TINY:
            t[EPS] = eps
            t[SIG] = 0.0
            t[TANGENT] = E0
            t[KON] = 3
            return
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
        xi = fabs((t[EPSPL] - t[EPSS0]) / epsy)
        R = R0 * (1.0 - (cR1 * xi) / (cR2 + xi))
        epsrat = (eps - epsr) / span
        dum1 = 1.0 + pow(fabs(epsrat), R)
        dum2 = pow(dum1, 1.0 / R)
        sig = (b * epsrat + (1.0 - b) * epsrat / dum2) * (t[SIGS0] - sigr) + sigr
        e = (b + (1.0 - b) / (dum1 * dum2)) * (t[SIGS0] - sigr) / span
    t[EPS] = eps
    t[SIG] = sig
    t[TANGENT] = e


cdef struct Work:
    int n
    const double* mass
    const double* k0
    const double* fy
    const double* b
    const double* cd
    const double* co
    double r0, cr1, cr2, gamma, beta, tol
    int max_iter
    # scratch
    double* un
    double* an
    double* vn
    double* force
    double* kt
    double* r
    double* d
    double* o
    double* cp
    double* dp
    double* trial


cdef int substep(Work* w, double* st, double* u, double* v, double* a, double ag1, double h,
                 long* iters) noexcept nogil:
    """Advance one sub-step; on success u, v, a, st hold the new state."""
    cdef int n = w.n
    cdef int i, it
    cdef double c0 = 1.0 / (w.beta * h * h)
    cdef double c1 = w.gamma / (w.beta * h)
    cdef double c2 = 1.0 / (w.beta * h)
    cdef double c3 = 0.5 / w.beta - 1.0
    cdef double drift, norm, fnl, cv, den
    for i in range(n):
        w.un[i] = u[i]
    for it in range(w.max_iter + 1):
        for i in range(n):
            w.an[i] = c0 * (w.un[i] - u[i]) - c2 * v[i] - c3 * a[i]
        for i in range(n):
            w.vn[i] = v[i] + h * ((1.0 - w.gamma) * a[i] + w.gamma * w.an[i])
        for i in range(n):
            drift = w.un[i] - (w.un[i - 1] if i > 0 else 0.0)
            steel02(st + i * NS, w.trial + i * NS, drift, w.k0[i], w.fy[i], w.b[i], w.r0, w.cr1, w.cr2)
            w.force[i] = w.trial[i * NS + SIG]
            w.kt[i] = w.trial[i * NS + TANGENT]
        norm = 0.0
        for i in range(n):
            fnl = w.force[i] - (w.force[i + 1] if i < n - 1 else 0.0)
            cv = w.cd[i] * w.vn[i]
            if i > 0:
                cv += w.co[i - 1] * w.vn[i - 1]
            if i < n - 1:
                cv += w.co[i] * w.vn[i + 1]
            w.r[i] = w.mass[i] * (w.an[i] + ag1) + cv + fnl
            if fabs(w.r[i]) > norm:
                norm = fabs(w.r[i])
        if norm < w.tol:
            iters[0] += it
            for i in range(n):
                u[i] = w.un[i]
                v[i] = w.vn[i]
                a[i] = w.an[i]
            memcpy(st, w.trial, n * NS * sizeof(double))
            return 1
        if it == w.max_iter:
            break
        for i in range(n):
            w.d[i] = w.kt[i] + (w.kt[i + 1] if i < n - 1 else 0.0) + c0 * w.mass[i] + c1 * w.cd[i]
            if i < n - 1:
                w.o[i] = -w.kt[i + 1] + c1 * w.co[i]
        # Thomas algorithm on J du = -r
        w.cp[0] = w.o[0] / w.d[0] if n > 1 else 0.0
        w.dp[0] = -w.r[0] / w.d[0]
        for i in range(1, n):
            den = w.d[i] - w.o[i - 1] * w.cp[i - 1]
            w.cp[i] = w.o[i] / den if i < n - 1 else 0.0
            w.dp[i] = (-w.r[i] - w.o[i - 1] * w.dp[i - 1]) / den
        w.un[n - 1] += w.dp[n - 1]
        for i in range(n - 2, -1, -1):
            w.dp[i] = w.dp[i] - w.cp[i] * w.dp[i + 1]
            w.un[i] += w.dp[i]
    iters[0] += w.max_iter
    return 0


def run_newmark(const double[::1] mass, const double[::1] k0, const double[::1] fy, const double[::1] b,
                double r0, double cr1, double cr2, const double[::1] c_diag, const double[::1] c_off,
                const double[::1] ag, double dt, double gamma, double beta, double tol,
                int max_iter, int max_halvings, int substeps):
    cdef int n = mass.shape[0]
    cdef Py_ssize_t nt = ag.shape[0]
    U_ = np.zeros((nt, n))
    V_ = np.zeros((nt, n))
    A_ = np.zeros((nt, n))
    F_ = np.zeros((nt, n))
    T_ = np.zeros((nt, n))
    cdef double[:, ::1] U = U_
    cdef double[:, ::1] V = V_
    cdef double[:, ::1] A = A_
    cdef double[:, ::1] F = F_
    cdef double[:, ::1] T = T_
    cdef Work w
    cdef int i, level, s, nsub, ok = 1, status = 0
    cdef Py_ssize_t k, fail_step = nt - 1
    cdef long iters = 0, halvings = 0
    cdef double ag0, ag1, agb, h
    cdef double* buf = <double*>malloc((16 * n + 4 * n * NS + 8) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* u = buf
    cdef double* v = buf + n
    cdef double* a = buf + 2 * n
    cdef double* su = buf + 3 * n
    cdef double* sv = buf + 4 * n
    cdef double* sa = buf + 5 * n
    w.un = buf + 6 * n
    w.an = buf + 7 * n
    w.vn = buf + 8 * n
    w.force = buf + 9 * n
    w.kt = buf + 10 * n
    w.r = buf + 11 * n
    w.d = buf + 12 * n
    w.o = buf + 13 * n
    w.cp = buf + 14 * n
    w.dp = buf + 15 * n
    cdef double* st = buf + 16 * n
    cdef double* sst = st + n * NS
    w.trial = sst + n * NS
    w.n = n
    w.mass = &mass[0]
    w.k0 = &k0[0]
    w.fy = &fy[0]
    w.b = &b[0]
    w.cd = &c_diag[0]
    w.co = &c_off[0]
    w.r0 = r0
    w.cr1 = cr1
    w.cr2 = cr2
    w.gamma = gamma
    w.beta = beta
    w.tol = tol
    w.max_iter = max_iter
    with nogil:
        for i in range(n * NS):
            st[i] = 0.0
        for i in range(n):
            st[i * NS + TANGENT] = k0[i]
            T[0, i] = k0[i]
            u[i] = 0.0
            v[i] = 0.0
            a[i] = -ag[0]
            A[0, i] = a[i]
        for k in range(nt - 1):
            ag0 = ag[k]
            ag1 = ag[k + 1]
            ok = 0
            for level in range(max_halvings + 1):
                nsub = substeps << level
                h = dt / nsub
                memcpy(su, u, n * sizeof(double))
                memcpy(sv, v, n * sizeof(double))
                memcpy(sa, a, n * sizeof(double))
                memcpy(sst, st, n * NS * sizeof(double))
                ok = 1
                for s in range(nsub):
                    agb = ag0 + (ag1 - ag0) * (s + 1) / nsub
                    if not substep(&w, sst, su, sv, sa, agb, h, &iters):
                        ok = 0
                        break
                if ok:
                    halvings += level
                    memcpy(u, su, n * sizeof(double))
                    memcpy(v, sv, n * sizeof(double))
                    memcpy(a, sa, n * sizeof(double))
                    memcpy(st, sst, n * NS * sizeof(double))
                    break
            if not ok:
                status = 1
                fail_step = k + 1
                break
            for i in range(n):
                U[k + 1, i] = u[i]
                V[k + 1, i] = v[i]
                A[k + 1, i] = a[i]
                F[k + 1, i] = st[i * NS + SIG]
                T[k + 1, i] = st[i * NS + TANGENT]
    free(buf)
    return status, fail_step, U_, V_, A_, F_, T_, iters, halvings
