"""Chemotaxis-free critical speed from the variational characterization.

For weights g on [0, a/b] with g(a/b) = 0 and g' < 0,

    J(g) = 2 int sqrt(-m s^(m-1) g g' (a s - b s^2)) ds / int g ds

is bounded by the critical speed c*(m, 0), with equality at an extremal
weight. At unit scale (a = b = 1) the extremal weight comes from the
singular ODE ``rho' = 2 I sqrt(rho) - 2 f`` with ``f = m s^m (1 - s)`` through
``-g'/g = f/rho``. Writing ``r = sqrt(rho)`` and integrating from s = 1 turns
it into the regular problem ``dr/ds~ = m s~ (1-s~)^m / r - I`` in ``s~ = 1 - s``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import (FixedPointNonConvergent, HypothesisViolated, InadmissibleWeight,
                     InvalidParams, RhoHitsZero)
from .model import ModelParams

_START = 1e-6
_END = 1e-7


@dataclass(frozen=True)
class WeightFunction:
    """Samples of a weight ``g`` and ``g'`` on a grid covering [0, a/b]."""

    s: np.ndarray
    g: np.ndarray
    g1: np.ndarray

    @classmethod
    def from_callable(cls, g, dg, cap=1.0, n=2001):
        s = cap * 0.5 * (1 - np.cos(np.linspace(0, math.pi, n)))
        return cls(s, np.asarray(g(s), float), np.asarray(dg(s), float))

    @property
    def cap(self):
        return float(self.s[-1])

    def spline(self):
        return CubicHermiteSpline(self.s, self.g, self.g1)

    def mass(self):
        return float(self.spline().integrate(self.s[0], self.s[-1]))

    def normalized(self) -> "WeightFunction":
        k = self.mass()
        return WeightFunction(self.s, self.g / k, self.g1 / k)

    def rescaled(self, cap) -> "WeightFunction":
        """Map a weight on [0, 1] to [0, cap], keeping unit mass."""
        f = cap / self.s[-1]
        return WeightFunction(self.s * f, self.g / f, self.g1 / f**2)

    def __call__(self, s):
        return self.spline()(s)


def _check_weight(w: WeightFunction):
    g, g1 = w.g, w.g1
    if w.s[0] != 0.0 or np.any(np.diff(w.s) <= 0):
        raise InadmissibleWeight("weight grid must start at 0 and increase")
    if not np.all(np.isfinite(g)) or not np.all(np.isfinite(g1)):
        raise InadmissibleWeight("weight has non-finite samples")
    if abs(g[-1]) > 1e-8 * np.max(np.abs(g)):
        raise InadmissibleWeight("weight must vanish at a/b")
    if np.any(g1[1:-1] >= 0):
        raise InadmissibleWeight("weight must be strictly decreasing on the interior")


def functional_J(w: WeightFunction, p: ModelParams, check: bool = True) -> float:
    """Speed functional of a weight; ``w`` is normalized to unit mass first."""
    if check:
        _check_weight(w)
    spl = w.spline()
    dspl = spl.derivative()
    m, a, b = p.m, p.a, p.b

    def integrand(s):
        val = -m * s ** (m - 1) * spl(s) * dspl(s) * (a * s - b * s * s)
        return 2.0 * math.sqrt(max(val, 0.0))

    # knots as breakpoints keep the adaptive rule away from derivative jumps
    knots = w.s[1:-1]
    if knots.size > 200:
        knots = knots[:: max(knots.size // 200, 1)]
    with warnings.catch_warnings():
        # round-off at the tight tolerance is reported but harmless here
        warnings.simplefilter("ignore", IntegrationWarning)
        num, _ = quad(integrand, 0.0, w.cap, points=knots, limit=4 * knots.size + 200,
                      epsabs=1e-13, epsrel=1e-11)
    return num / w.mass()


def edge_coefficient(I, m):
    """``A = ((sqrt(I^2 + 4m) - I) / 2)^2``, the coefficient of ``rho ~ A (1-s)^2``."""
    return ((math.sqrt(I * I + 4 * m) - I) / 2) ** 2


@dataclass(frozen=True)
class RhoSolution:
    """Unit-scale solution of the rho problem at speed value ``I``.

    ``s`` runs over [0, 1]; ``rho`` and ``theta = f / rho`` are sampled there
    and ``log_g`` holds ``log g`` up to an additive constant.
    """

    s: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    log_g: np.ndarray
    I: float
    A: float
    m: float
    meta: dict = field(default_factory=dict, compare=False)

    def weight(self) -> WeightFunction:
        g = np.exp(self.log_g - np.max(self.log_g))
        g[-1] = 0.0
        return WeightFunction(self.s, g, -self.theta * g).normalized()


def _sample_points(n):
    u = np.linspace(0.0, math.pi, n)
    return 0.5 * (1 - np.cos(u))


def solve_rho(I, m, n=4001, rtol=1e-11, atol=1e-13) -> RhoSolution:
    """Integrate the rho problem from s = 1 down to s = 0 at speed value ``I``.

    Raises :class:`RhoHitsZero` when rho collapses to zero before reaching
    s = 0 along the critical branch, which happens when ``I`` exceeds the
    critical speed.
    """
    if not (I > 0 and m > 1):
        raise InvalidParams("solve_rho needs I > 0 and m > 1")
    A = edge_coefficient(I, m)
    beta = m / A
    sq = math.sqrt(A)

    # y = (r, q) with q = log g - beta log s~ regular at s~ = 0
    def rhs(st, y):
        r = y[0]
        f = m * st * (1 - st) ** m
        theta = f / (r * r)
        return [f / r - I, theta - beta / st]

    # rho' (in s) changes sign where r = f/I, at the maximum of rho. Past the
    # maximum r/(f/I) grows without bound when I <= c*; when I > c* it falls
    # back toward 1 and rho collapses onto (f/I)^2, too fast for g to survive.
    def hit(st, y):
        return y[0] - 1.1 * m * st * (1 - st) ** m / I
    hit.terminal = True
    hit.direction = -1

    # theta s (1-s) stays O(m/A) on admissible solutions and blows up on the
    # collapsed ones (theta ~ I^2/f), which also makes them stiff
    def blowup(st, y):
        return 1e4 * max(1.0, beta) - m * st * st * (1 - st) ** (m + 1) / (y[0] * y[0])
    blowup.terminal = True
    blowup.direction = -1

    st0 = _START
    y0 = [sq * st0, 0.0]
    st_end = 1.0 - _END
    # LSODA switches to a stiff method if the solution hugs r = f/I
    sol = solve_ivp(rhs, (st0, st_end), y0, method="LSODA", rtol=rtol, atol=atol,
                    dense_output=True, events=[hit, blowup])
    r_last = sol.y[0, -1]
    collapsed = r_last * I < 2 * m * sol.t[-1] * (1 - sol.t[-1]) ** m
    if sol.status != 0 or np.min(sol.y[0]) <= 0 or collapsed:
        where = float(sol.t[-1])
        raise RhoHitsZero(f"rho vanishes at s={1 - where:.6g} for I={I:.10g}")

    s = _sample_points(n)
    st = np.clip(1.0 - s, st0, st_end)
    r, q = sol.sol(st)
    # the exact values on the excluded end pieces follow from the local behavior
    small = (1.0 - s) < st0
    r[small] = sq * (1.0 - s[small])
    q[small] = 0.0
    rho = r * r
    f = m * s**m * (1 - s)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(rho > 0, f / rho, 0.0)
        log_g = q + beta * np.log(1.0 - s)
    # s < _END: tail of int theta, theta ~ C s^(m-2)
    r_end, q_end = sol.y[:, -1]
    theta_end = m * _END**m * (1 - _END) / r_end**2
    tail = theta_end * _END / (m - 1)
    lead = s < _END
    log_g[lead] = q_end + beta * math.log(st_end) + tail * (1 - (s[lead] / _END) ** (m - 1))
    rho[-1] = 0.0
    theta[-1] = 0.0
    log_g[-1] = -np.inf
    meta = {"rho0": float(r_end**2), "nfev": int(sol.nfev)}
    return RhoSolution(s, rho, theta, log_g, float(I), A, float(m), meta)


@dataclass(frozen=True)
class VariationalResult:
    """Extremal weight at the user's (a, b) scale; unpacks as ``(weight, sigma, c_star_0)``."""

    weight: WeightFunction
    sigma: float
    c_star_0: float
    A: float
    rho: RhoSolution
    iterations: int
    history: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __iter__(self):
        return iter((self.weight, self.sigma, self.c_star_0))


def _trial_weight(n=2001):
    return WeightFunction.from_callable(lambda s: 2 * (1 - s), lambda s: -2 + 0 * s, n=n)


def extremal_weight(m, p: ModelParams | None = None, tol=1e-6, max_iter=100, damping=0.5,
                    cross_check=False) -> VariationalResult:
    """Solve ``I = J(g_I)`` at unit scale and map the result to ``p``'s (a, b).

    ``g_I`` is the weight generated by :func:`solve_rho` at ``I``. Every
    admissible weight has ``J <= c*``, so starting from the value of a trial
    weight the damped iterates approach c* from below. An iterate that lands
    above c* (rho collapses) is pulled back halfway to the last good value.
    With ``cross_check`` the result is compared with the shooting speed.
    """
    if not m > 1:
        raise InvalidParams("degenerate solver requires m > 1")
    p = p if p is not None else ModelParams(m)
    if p.m != m:
        raise InvalidParams("m does not match the model parameters")
    unit = ModelParams(m)
    I = functional_J(_trial_weight(), unit)
    good = I
    history = []
    rho = None
    for it in range(1, max_iter + 1):
        try:
            rho = solve_rho(I, m)
        except RhoHitsZero:
            I = 0.5 * (I + good)
            history.append((I, math.nan))
            continue
        good = I
        J = functional_J(rho.weight(), unit)
        history.append((I, J))
        if abs(J - I) <= tol:
            I = J if J <= I + tol else I
            break
        I = (1 - damping) * I + damping * J
    else:
        raise FixedPointNonConvergent(f"variational fixed point not reached in {max_iter} iterations")
    # final weight at the accepted value
    try:
        rho = solve_rho(I, m)
    except RhoHitsZero:
        I = good
        rho = solve_rho(I, m)
    w_unit = rho.weight()
    sigma_unit = float(w_unit.g[0])
    cap = p.capacity
    c0 = math.sqrt(p.a * cap ** (m - 1)) * I
    res = VariationalResult(w_unit.rescaled(cap), sigma_unit / cap, c0, rho.A, rho, it,
                            tuple(history), {"c_unit": I, "sigma_unit": sigma_unit})
    if cross_check:
        from .shooter import critical_speed
        sp = critical_speed(None, p.with_(chi=0.0), tol=1e-10 * max(c0, 1.0))
        res.meta["shooting_speed"] = sp.speed
        res.meta["relative_gap"] = abs(sp.speed - c0) / c0
    return res


def sigma_from_trajectory(outcome, p: ModelParams, splice=1e-3):
    """Normalized weight value at 0 from a chemotaxis-free critical shot.

    Along the trajectory the extremal weight satisfies
    ``-g'(phi) psi~ = g m phi^(m-1) (a phi - b phi^2) / psi~``, i.e.
    ``d log g / dt = -(a phi - b phi^2) / psi``. The shot is followed until
    ``a/b - phi`` falls below ``splice * a/b``; beyond that g is continued as
    a power of ``a/b - phi``.
    """
    tr = outcome.trace
    cap = p.capacity
    m, a, b = p.m, p.a, p.b
    t, phi, psi, dphi = tr.t, tr.phi, tr.psi, tr.dphi
    keep = psi > 0
    t, phi, psi, dphi = t[keep], phi[keep], psi[keep], dphi[keep]
    lam, _, mu = outcome.coeffs.at(t)
    dpsi = lam * dphi + b * phi * phi - mu * phi
    d2phi = (dpsi - m * (m - 1) * phi ** (m - 2) * dphi**2) / (m * phi ** (m - 1))
    stop = np.nonzero(cap - phi <= splice * cap)[0]
    js = int(stop[0]) if stop.size else len(t) - 1
    sl = slice(0, js + 1)
    t, phi, psi, dphi, dpsi, d2phi = t[sl], phi[sl], psi[sl], dphi[sl], dpsi[sl], d2phi[sl]

    u = (a * phi - b * phi**2) / psi
    du = ((a - 2 * b * phi) * dphi * psi - (a * phi - b * phi**2) * dpsi) / psi**2
    G = CubicHermiteSpline(t, u, du).antiderivative()(t)
    G += u[0] * t[0]  # u tends to a / lambda(0) at the edge
    g = np.exp(-G)
    v = g * dphi
    dv = g * (d2phi - u * dphi)
    mass = float(CubicHermiteSpline(t, v, dv).integrate(t[0], t[-1]))
    mass += phi[0]  # g ~ 1 below the series start
    theta = u[-1] / dphi[-1]
    beta = theta * (cap - phi[-1])
    mass += g[-1] * (cap - phi[-1]) / (beta + 1)
    return 1.0 / mass


@dataclass(frozen=True)
class SpeedBounds:
    """Bounds on the chemotactic critical speed; unpacks as ``(lower, upper)``."""

    lower: float
    upper: float
    coarse: tuple
    correction: float
    refined: float | None = None

    def __iter__(self):
        return iter((self.lower, self.upper))

    def contains(self, c, strict_upper=True):
        ok_hi = c < self.upper if strict_upper else c <= self.upper
        return bool(self.lower <= c and ok_hi)


def chemo_speed_bounds(weight, sigma, c_star_0, signal, p: ModelParams, profile=None) -> SpeedBounds:
    """Interval for c*(m, chi) from the extremal weight.

    ``lower = max(2 c0/3, c0 - chi sigma a^2/(2 b^2))`` and ``upper = c0``
    (strict). The coarse bounds ``(2 c0/3, c0)`` are reported as well. When
    a monotone ``profile`` and its ``signal`` are given, the weighted average
    of ``eta'`` along the profile gives the sharper lower value ``refined``.
    """
    c0 = float(c_star_0)
    if not (c0 > 0 and sigma > 0):
        raise InvalidParams("c_star_0 and sigma must be positive")
    corr = p.chi * sigma * p.a**2 / (2 * p.b**2)
    if corr > c0 / 3 * (1 + 1e-12):
        raise HypothesisViolated(
            f"chi sigma a^2/(2 b^2) = {corr:.6g} exceeds c*(m,0)/3 = {c0 / 3:.6g}")
    coarse = (2 * c0 / 3, c0)
    if p.chi == 0:
        return SpeedBounds(c0, c0, coarse, 0.0)
    lower = max(2 * c0 / 3, c0 - corr)
    refined = None
    if profile is not None and signal is not None and weight is not None:
        x = profile.xi
        ph = profile.values
        dph = np.gradient(ph, x)
        eta1 = np.interp(x, signal.xi, signal.eta1)
        spl = weight.spline().derivative()
        integrand = -spl(np.clip(ph, 0, weight.cap)) * eta1 * ph * dph
        num = float(np.trapezoid(integrand, x))
        refined = c0 - p.chi * num / weight.mass()
    return SpeedBounds(lower, c0, coarse, corr, refined)
