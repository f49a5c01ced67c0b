# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: profile shooting and explicit PDE stepping.

Mirrors ``_kernels_py`` function for function.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, INFINITY, NAN, isfinite, fmax, fmin

cnp.import_array()

REACHED = 0
TURNED = 1
GROWING = 2
FAILED = 3

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176
cdef double A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784
cdef double B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40


cdef struct Ctx:
    double c
    double m
    double mm1
    double a
    double b
    double chi
    const double *xs
    const double *e1
    const double *e2
    Py_ssize_t n
    Py_ssize_t k


cdef inline void coeffs(Ctx *ctx, double t, double *ce1, double *ce2) noexcept nogil:
    cdef Py_ssize_t k, n = ctx.n
    cdef double w
    if ctx.chi == 0.0:
        ce1[0] = 0.0
        ce2[0] = 0.0
        return
    if t <= ctx.xs[0]:
        ce1[0] = ctx.chi * ctx.e1[0]
        ce2[0] = ctx.chi * ctx.e2[0]
        return
    if t >= ctx.xs[n - 1]:
        ce1[0] = ctx.chi * ctx.e1[n - 1]
        ce2[0] = ctx.chi * ctx.e2[n - 1]
        return
    k = ctx.k
    while k > 0 and ctx.xs[k] > t:
        k -= 1
    while k < n - 2 and ctx.xs[k + 1] <= t:
        k += 1
    ctx.k = k
    w = (t - ctx.xs[k]) / (ctx.xs[k + 1] - ctx.xs[k])
    ce1[0] = ctx.chi * (ctx.e1[k] + w * (ctx.e1[k + 1] - ctx.e1[k]))
    ce2[0] = ctx.chi * (ctx.e2[k] + w * (ctx.e2[k + 1] - ctx.e2[k]))


cdef inline void rhs(Ctx *ctx, double t, double phi, double psi,
                     double *da, double *db) noexcept nogil:
    cdef double q, ce1, ce2
    if not phi > 0.0:
        da[0] = NAN
        db[0] = NAN
        return
    q = psi / (ctx.m * pow(phi, ctx.mm1))
    coeffs(ctx, t, &ce1, &ce2)
    da[0] = q
    db[0] = (ctx.c + ce1) * q + ctx.b * phi * phi - (ctx.a - ce2) * phi


cdef inline double hermite(double t0, double h, double y0, double y1,
                           double f0, double f1, double t) noexcept nogil:
    cdef double s = (t - t0) / h
    cdef double s2 = s * s
    cdef double s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)


cdef double root_in_step(double t0, double h, double y0, double y1,
                         double f0, double f1, double level) noexcept nogil:
    cdef double lo = t0, hi = t0 + h, g_lo = y0 - level
    cdef double prev_t = lo, prev_g = g_lo, ti, gi, mid, gm
    cdef int i, n_scan = 8
    for i in range(1, n_scan + 1):
        ti = t0 + h * i / n_scan
        gi = hermite(t0, h, y0, y1, f0, f1, ti) - level
        if (gi >= 0) != (prev_g >= 0) or gi == 0.0:
            lo = prev_t
            hi = ti
            g_lo = prev_g
            break
        prev_t = ti
        prev_g = gi
    for i in range(60):
        mid = 0.5 * (lo + hi)
        gm = hermite(t0, h, y0, y1, f0, f1, mid) - level
        if (gm >= 0) == (g_lo >= 0) and gm != 0.0:
            lo = mid
            g_lo = gm
        else:
            hi = mid
    return hi


def shoot(double c, double m, double a, double b, double chi,
          const double[::1] xs, const double[::1] eta1, const double[::1] eta2,
          double t0, double phi0, double psi0, double t_max,
          double rtol, double atol, double cap, double cap_tol, Py_ssize_t max_steps):
    """See ``_kernels_py.shoot``."""
    cdef Ctx ctx
    ctx.c = c
    ctx.m = m
    ctx.mm1 = m - 1.0
    ctx.a = a
    ctx.b = b
    ctx.chi = chi
    ctx.xs = &xs[0]
    ctx.e1 = &eta1[0]
    ctx.e2 = &eta2[0]
    ctx.n = xs.shape[0]
    ctx.k = 0

    cdef double target = cap - cap_tol
    cdef double atol_phi = fmin(atol, rtol * fabs(phi0))
    cdef double atol_psi = fmin(atol, rtol * fabs(psi0))

    cdef Py_ssize_t size = 1024, n = 0, it
    cdef cnp.ndarray[cnp.float64_t, ndim=2] buf = np.empty((4, size))
    cdef double[:, ::1] bv = buf

    cdef double t = t0, y1 = phi0, y2 = psi0, h = 0.01 * t0
    cdef double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b, k5a, k5b, k6a, k6b, k7a, k7b
    cdef double n1, n2, e1, e2, s1, s2, err, te, t_ev, pe, qe, da, db, fac
    cdef int code = GROWING, ev
    cdef Py_ssize_t n_rej = 0
    cdef bint done = False

    rhs(&ctx, t, y1, y2, &k1a, &k1b)
    bv[0, 0] = t
    bv[1, 0] = y1
    bv[2, 0] = y2
    bv[3, 0] = k1a
    n = 1

    for it in range(max_steps):
        if t >= t_max:
            code = GROWING
            done = True
            break
        if h > t_max - t:
            h = t_max - t
        rhs(&ctx, t + C2 * h, y1 + h * A21 * k1a, y2 + h * A21 * k1b, &k2a, &k2b)
        rhs(&ctx, t + C3 * h, y1 + h * (A31 * k1a + A32 * k2a),
            y2 + h * (A31 * k1b + A32 * k2b), &k3a, &k3b)
        rhs(&ctx, t + C4 * h, y1 + h * (A41 * k1a + A42 * k2a + A43 * k3a),
            y2 + h * (A41 * k1b + A42 * k2b + A43 * k3b), &k4a, &k4b)
        rhs(&ctx, t + C5 * h,
            y1 + h * (A51 * k1a + A52 * k2a + A53 * k3a + A54 * k4a),
            y2 + h * (A51 * k1b + A52 * k2b + A53 * k3b + A54 * k4b), &k5a, &k5b)
        rhs(&ctx, t + h,
            y1 + h * (A61 * k1a + A62 * k2a + A63 * k3a + A64 * k4a + A65 * k5a),
            y2 + h * (A61 * k1b + A62 * k2b + A63 * k3b + A64 * k4b + A65 * k5b), &k6a, &k6b)
        n1 = y1 + h * (B1 * k1a + B3 * k3a + B4 * k4a + B5 * k5a + B6 * k6a)
        n2 = y2 + h * (B1 * k1b + B3 * k3b + B4 * k4b + B5 * k5b + B6 * k6b)
        rhs(&ctx, t + h, n1, n2, &k7a, &k7b)
        e1 = h * (E1 * k1a + E3 * k3a + E4 * k4a + E5 * k5a + E6 * k6a + E7 * k7a)
        e2 = h * (E1 * k1b + E3 * k3b + E4 * k4b + E5 * k5b + E6 * k6b + E7 * k7b)
        s1 = atol_phi + rtol * fmax(fabs(y1), fabs(n1))
        s2 = atol_psi + rtol * fmax(fabs(y2), fabs(n2))
        err = sqrt(0.5 * ((e1 / s1) * (e1 / s1) + (e2 / s2) * (e2 / s2)))
        if not isfinite(err):
            n_rej += 1
            h *= 0.25
            if h < 1e-14 * fmax(t, 1e-300):
                code = FAILED
                done = True
                break
            continue
        if err > 1.0:
            n_rej += 1
            h *= fmax(0.2, 0.9 * pow(err, -0.2))
            if h < 1e-14 * fmax(t, 1e-300):
                code = FAILED
                done = True
                break
            continue
        if n + 1 >= size:
            size *= 2
            buf = np.concatenate([buf, np.empty((4, size - buf.shape[1]))], axis=1)
            bv = buf
        t_ev = INFINITY
        ev = GROWING
        if n1 >= target:
            te = root_in_step(t, h, y1, n1, k1a, k7a, target)
            if te < t_ev:
                t_ev = te
                ev = REACHED
        if n2 <= 0.0:
            te = root_in_step(t, h, y2, n2, k1b, k7b, 0.0)
            if te < t_ev:
                t_ev = te
                ev = TURNED
        if ev != GROWING:
            pe = hermite(t, h, y1, n1, k1a, k7a, t_ev)
            qe = hermite(t, h, y2, n2, k1b, k7b, t_ev)
            if ev == TURNED:
                qe = 0.0
            else:
                pe = target
            rhs(&ctx, t_ev, pe, fmax(qe, 0.0), &da, &db)
            bv[0, n] = t_ev
            bv[1, n] = pe
            bv[2, n] = qe
            bv[3, n] = da if isfinite(da) else 0.0
            n += 1
            code = ev
            done = True
            break
        t = t + h
        y1 = n1
        y2 = n2
        k1a = k7a
        k1b = k7b
        bv[0, n] = t
        bv[1, n] = y1
        bv[2, n] = y2
        bv[3, n] = k1a
        n += 1
        if err == 0.0:
            fac = 5.0
        else:
            fac = fmin(5.0, fmax(0.2, 0.9 * pow(err, -0.2)))
        h *= fac
    if not done:
        code = FAILED
    out = buf[:, :n].copy()
    return (code, out[0], out[1], out[2], out[3], n_rej)


def thomas_factor(Py_ssize_t n, double h):
    """Factor ``-v'' + v`` (zero-flux ends, cell-centred) for repeated solves."""
    cdef double off = -1.0 / (h * h)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cp = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] den = np.empty(n)
    cdef Py_ssize_t i
    cdef double d
    for i in range(n):
        d = 2.0 / (h * h) + 1.0
        if i == 0 or i == n - 1:
            d = 1.0 / (h * h) + 1.0
        if i == 0:
            den[0] = d
        else:
            den[i] = d - off * cp[i - 1]
        cp[i] = off / den[i]
    return cp, den, off


cdef void thomas_solve(const double *cp, const double *den, double off,
                       const double *rhs, double *y, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    y[0] = rhs[0] / den[0]
    for i in range(1, n):
        y[i] = (rhs[i] - off * y[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        y[i] -= cp[i] * y[i + 1]


cdef double stable_bound(const double *u, const double *v, Py_ssize_t n, double h, double m,
                         double chi, double a, double b, double tau) noexcept nogil:
    cdef double umax = 0.0, vxmax = 0.0, diff, bound, d
    cdef Py_ssize_t i
    for i in range(n):
        if u[i] > umax:
            umax = u[i]
    if chi > 0:
        for i in range(n - 1):
            d = fabs(v[i + 1] - v[i])
            if d > vxmax:
                vxmax = d
        vxmax /= h
    if m != 1.0:
        diff = m * pow(umax, m - 1.0)
    else:
        diff = 1.0
    bound = 0.4 * h * h / (diff + chi * vxmax * h + h * h * fmax(a, b * umax))
    if tau > 0:
        bound = fmin(bound, 0.4 * tau * h * h)
    return bound


def stable_dt(const double[::1] u, const double[::1] v, double h, double m, double chi,
              double a, double b, double tau):
    """Explicit step bound for the current state."""
    return stable_bound(&u[0], &v[0], u.shape[0], h, m, chi, a, b, tau)


def pde_advance(double[::1] u, double[::1] v, double h, double m, double chi,
                double a, double b, double tau, double t_total, double dt_max,
                bint strict, factor):
    """See ``_kernels_py.pde_advance``; ``factor`` comes from ``thomas_factor``."""
    cdef Py_ssize_t n = u.shape[0], i
    cdef double elapsed = 0.0, dt, bound, vx, up, ui
    cdef Py_ssize_t steps = 0
    cdef double[::1] cp, den
    cdef double off = 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flux_a = np.zeros(n + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_a = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vn_a = np.empty(n)
    cdef double[::1] flux = flux_a, w = w_a, vn = vn_a
    cdef bint linear = (m == 1.0)
    cdef double ih = 1.0 / h, ih2 = 1.0 / (h * h)
    if tau == 0.0:
        cp = factor[0]
        den = factor[1]
        off = factor[2]
        thomas_solve(&cp[0], &den[0], off, &u[0], &v[0], n)
    with nogil:
        while elapsed < t_total * (1 - 1e-12):
            bound = stable_bound(&u[0], &v[0], n, h, m, chi, a, b, tau)
            if strict and dt_max > bound:
                with gil:
                    return elapsed, steps, 1
            dt = fmin(dt_max, fmin(bound, t_total - elapsed))
            for i in range(n):
                w[i] = u[i] if linear else pow(u[i], m)
            for i in range(n - 1):
                vx = (v[i + 1] - v[i]) * ih
                up = u[i] if vx > 0 else u[i + 1]
                flux[i + 1] = (w[i + 1] - w[i]) * ih - chi * vx * up
            if tau > 0:
                for i in range(n):
                    if i == 0:
                        vx = v[1] - v[0]
                    elif i == n - 1:
                        vx = v[n - 2] - v[n - 1]
                    else:
                        vx = v[i + 1] - 2 * v[i] + v[i - 1]
                    vn[i] = v[i] + dt / tau * (vx * ih2 - v[i] + u[i])
                for i in range(n):
                    v[i] = vn[i]
            for i in range(n):
                ui = u[i]
                ui = ui + dt * ih * (flux[i + 1] - flux[i]) + dt * ui * (a - b * ui)
                u[i] = ui if ui > 0.0 else 0.0
            if tau == 0.0:
                thomas_solve(&cp[0], &den[0], off, &u[0], &v[0], n)
            elapsed += dt
            steps += 1
    return elapsed, steps, 0
