"""Pure-Python kernels; the reference for the compiled ``_kernels`` extension.

Both modules expose the same functions with the same signatures and must
produce the same numbers up to floating-point reassociation.
"""

import math

import numpy as np

# shot outcome codes
REACHED = 0
TURNED = 1
GROWING = 2
FAILED = 3

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


class _Coeffs:
    """Linear interpolation of chi*eta' and chi*eta'' with a moving search hint."""

    def __init__(self, xs, e1, e2, chi):
        self.xs = xs
        self.e1 = e1
        self.e2 = e2
        self.chi = chi
        self.n = len(xs)
        self.k = 0

    def __call__(self, t):
        if self.chi == 0.0:
            return 0.0, 0.0
        xs = self.xs
        n = self.n
        if t <= xs[0]:
            return self.chi * self.e1[0], self.chi * self.e2[0]
        if t >= xs[n - 1]:
            return self.chi * self.e1[n - 1], self.chi * self.e2[n - 1]
        k = self.k
        while k > 0 and xs[k] > t:
            k -= 1
        while k < n - 2 and xs[k + 1] <= t:
            k += 1
        self.k = k
        w = (t - xs[k]) / (xs[k + 1] - xs[k])
        return (self.chi * (self.e1[k] + w * (self.e1[k + 1] - self.e1[k])),
                self.chi * (self.e2[k] + w * (self.e2[k + 1] - self.e2[k])))


def _hermite(t0, h, y0, y1, f0, f1, t):
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)


def _root_in_step(t0, h, y0, y1, f0, f1, level):
    """First t in [t0, t0+h] where the Hermite cubic crosses ``level``."""
    lo, hi = t0, t0 + h
    g_lo = y0 - level
    # coarse scan guards against a cubic that crosses twice
    n_scan = 8
    prev_t, prev_g = lo, g_lo
    for i in range(1, n_scan + 1):
        ti = t0 + h * i / n_scan
        gi = _hermite(t0, h, y0, y1, f0, f1, ti) - level
        if (gi >= 0) != (prev_g >= 0) or gi == 0.0:
            lo, hi, g_lo = prev_t, ti, prev_g
            break
        prev_t, prev_g = ti, gi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        gm = _hermite(t0, h, y0, y1, f0, f1, mid) - level
        if (gm >= 0) == (g_lo >= 0) and gm != 0.0:
            lo, g_lo = mid, gm
        else:
            hi = mid
    return hi


def shoot(c, m, a, b, chi, xs, eta1, eta2, t0, phi0, psi0, t_max,
          rtol, atol, cap, cap_tol, max_steps):
    """Integrate phi' = psi/(m phi^(m-1)), psi' = lam phi' + b phi^2 - mu phi.

    ``lam = c + chi eta'(t)`` and ``mu = a - chi eta''(t)``. Stops when phi
    reaches ``cap - cap_tol`` (REACHED), psi reaches 0 (TURNED) or t reaches
    ``t_max`` (GROWING). Returns ``(code, t, phi, psi, dphi, n_rejected)``
    where the arrays hold accepted step end points including the terminal
    event point.
    """
    coef = _Coeffs(xs, eta1, eta2, chi)
    mm1 = m - 1.0
    target = cap - cap_tol
    atol_phi = min(atol, rtol * abs(phi0))
    atol_psi = min(atol, rtol * abs(psi0))

    def rhs(t, phi, psi):
        if not phi > 0.0:
            return math.nan, math.nan
        q = psi / (m * phi ** mm1)
        ce1, ce2 = coef(t)
        return q, (c + ce1) * q + b * phi * phi - (a - ce2) * phi

    ts = [t0]
    phis = [phi0]
    psis = [psi0]
    dphis = []
    t, y1, y2 = t0, phi0, psi0
    k1a, k1b = rhs(t, y1, y2)
    dphis.append(k1a)
    h = 0.01 * t0
    n_rej = 0
    code = GROWING
    for _ in range(max_steps):
        if t >= t_max:
            code = GROWING
            break
        if h > t_max - t:
            h = t_max - t
        k2a, k2b = rhs(t + _C2 * h, y1 + h * _A21 * k1a, y2 + h * _A21 * k1b)
        k3a, k3b = rhs(t + _C3 * h, y1 + h * (_A31 * k1a + _A32 * k2a),
                       y2 + h * (_A31 * k1b + _A32 * k2b))
        k4a, k4b = rhs(t + _C4 * h, y1 + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a),
                       y2 + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b))
        k5a, k5b = rhs(t + _C5 * h,
                       y1 + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a),
                       y2 + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b))
        k6a, k6b = rhs(t + h,
                       y1 + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a),
                       y2 + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b))
        n1 = y1 + h * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
        n2 = y2 + h * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
        k7a, k7b = rhs(t + h, n1, n2)
        e1 = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a + _E7 * k7a)
        e2 = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b + _E7 * k7b)
        s1 = atol_phi + rtol * max(abs(y1), abs(n1))
        s2 = atol_psi + rtol * max(abs(y2), abs(n2))
        err = math.sqrt(0.5 * ((e1 / s1) ** 2 + (e2 / s2) ** 2))
        if not math.isfinite(err):
            n_rej += 1
            h *= 0.25
            if h < 1e-14 * max(t, 1e-300):
                code = FAILED
                break
            continue
        if err > 1.0:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14 * max(t, 1e-300):
                code = FAILED
                break
            continue
        t_new = t + h
        # events inside the accepted step
        t_ev = math.inf
        ev = GROWING
        if n1 >= target:
            te = _root_in_step(t, h, y1, n1, k1a, k7a, target)
            if te < t_ev:
                t_ev, ev = te, REACHED
        if n2 <= 0.0:
            te = _root_in_step(t, h, y2, n2, k1b, k7b, 0.0)
            if te < t_ev:
                t_ev, ev = te, TURNED
        if ev != GROWING:
            pe = _hermite(t, h, y1, n1, k1a, k7a, t_ev)
            qe = _hermite(t, h, y2, n2, k1b, k7b, t_ev)
            if ev == TURNED:
                qe = 0.0
            else:
                pe = target
            ts.append(t_ev)
            phis.append(pe)
            psis.append(qe)
            da, _ = rhs(t_ev, pe, max(qe, 0.0))
            dphis.append(da if math.isfinite(da) else 0.0)
            code = ev
            break
        t, y1, y2 = t_new, n1, n2
        k1a, k1b = k7a, k7b
        ts.append(t)
        phis.append(y1)
        psis.append(y2)
        dphis.append(k1a)
        fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= fac
    else:
        code = FAILED
    return (code, np.array(ts), np.array(phis), np.array(psis), np.array(dphis), n_rej)


def thomas_factor(n, h):
    """Factor ``-v'' + v`` (zero-flux ends, cell-centred) for repeated solves."""
    off = -1.0 / (h * h)
    diag = np.full(n, 2.0 / (h * h) + 1.0)
    diag[0] = diag[-1] = 1.0 / (h * h) + 1.0
    cp = np.empty(n)
    den = np.empty(n)
    den[0] = diag[0]
    cp[0] = off / den[0]
    for i in range(1, n):
        den[i] = diag[i] - off * cp[i - 1]
        cp[i] = off / den[i]
    return cp, den, off


def _thomas_solve(cp, den, off, rhs):
    n = rhs.size
    y = np.empty(n)
    y[0] = rhs[0] / den[0]
    for i in range(1, n):
        y[i] = (rhs[i] - off * y[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        y[i] -= cp[i] * y[i + 1]
    return y


def stable_dt(u, v, h, m, chi, a, b, tau):
    """Explicit step bound for the current state."""
    umax = float(np.max(u))
    diff = m * umax ** (m - 1.0) if m != 1.0 else 1.0
    vx = float(np.max(np.abs(np.diff(v)))) / h if chi > 0 else 0.0
    bound = 0.4 * h * h / (diff + chi * vx * h + h * h * max(a, b * umax))
    if tau > 0:
        bound = min(bound, 0.4 * tau * h * h)
    return bound


def pde_advance(u, v, h, m, chi, a, b, tau, t_total, dt_max, strict, factor):
    """Advance ``(u, v)`` in place by ``t_total``; returns ``(elapsed, steps, code)``.

    ``code`` is 0 on success and 1 when ``strict`` is set and ``dt_max``
    exceeds the stability bound (nothing is advanced then).
    """
    from scipy.linalg import solve_banded

    n = u.size
    elapsed = 0.0
    steps = 0
    ab = None
    if tau == 0.0:
        ab = np.zeros((3, n))
        ab[0, 1:] = -1.0 / (h * h)
        ab[2, :-1] = -1.0 / (h * h)
        ab[1, :] = 2.0 / (h * h) + 1.0
        ab[1, 0] = ab[1, -1] = 1.0 / (h * h) + 1.0
        v[:] = solve_banded((1, 1), ab, u)
    flux = np.zeros(n + 1)
    while elapsed < t_total * (1 - 1e-12):
        bound = stable_dt(u, v, h, m, chi, a, b, tau)
        if strict and dt_max > bound:
            return elapsed, steps, 1
        dt = min(dt_max, bound, t_total - elapsed)
        w = u ** m if m != 1.0 else u
        vx = (v[1:] - v[:-1]) / h
        up = np.where(vx > 0, u[:-1], u[1:])
        flux[1:-1] = (w[1:] - w[:-1]) / h - chi * vx * up
        react = u * (a - b * u)
        if tau > 0:
            lap = np.empty(n)
            lap[1:-1] = v[2:] - 2 * v[1:-1] + v[:-2]
            lap[0] = v[1] - v[0]
            lap[-1] = v[-2] - v[-1]
            v += dt / tau * (lap / (h * h) - v + u)
        u += dt / h * (flux[1:] - flux[:-1]) + dt * react
        np.maximum(u, 0.0, out=u)
        if tau == 0.0:
            v[:] = solve_banded((1, 1), ab, u)
        elapsed += dt
        steps += 1
    return elapsed, steps, 0
