"""Shooting for the semi-finite wave profile and its critical speed.

With the edge of the support at ``t = 0`` the profile solves the first-order
system

    phi' = psi / (m phi^(m-1)),
    psi' = lam(t) phi' + b phi^2 - mu(t) phi,

with ``lam = c + chi eta'`` and ``mu = a - chi eta''``. It is started from the
two-term expansion ``phi ~ K1 t^(1/(m-1)) + K2 t^(m/(m-1))`` that selects the
maximal solution leaving the degenerate edge. Above the critical speed the
trajectory reaches the carrying capacity; below it ``psi`` returns to 0 first.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BPoly
from scipy.linalg import solve_banded

from . import _backend
from .errors import (BracketInvalid, DegenwaveError, IntegratorFailure, InvalidParams, InvalidSpeed,
                     NonMonotoneTrace, TraceTooShort)
from .model import Grid1D, ModelParams, Profile

log = logging.getLogger(__name__)


class Outcome(enum.Enum):
    REACHED_CAPACITY = "reached_capacity"
    TURNED_BACK = "turned_back"
    STILL_GROWING = "still_growing"


_CODES = {0: Outcome.REACHED_CAPACITY, 1: Outcome.TURNED_BACK, 2: Outcome.STILL_GROWING}


@dataclass(frozen=True)
class ShooterConfig:
    """Numerical settings for a shot. ``t0=None`` means ``1e-6 (a/b)^(m-1)``."""

    t0: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10
    cap_tol: float = 1e-8
    t_max: float = 400.0
    max_steps: int = 200_000
    grow_fraction: float = 0.99
    backend: str | None = None

    def start(self, p: ModelParams) -> float:
        return self.t0 if self.t0 is not None else 1e-6 * p.capacity ** (p.m - 1)


@dataclass(frozen=True)
class CoefficientFields:
    """``lam = c + chi eta'``, ``lam' = chi eta''`` and ``mu = a - chi eta''`` on a grid."""

    grid: Grid1D
    lam: np.ndarray
    lam1: np.ndarray
    mu: np.ndarray
    c: float
    chi: float

    @classmethod
    def build(cls, c, signal, p: ModelParams) -> "CoefficientFields":
        if signal is None:
            grid = Grid1D(np.array([0.0, 1.0, 2.0]))
            z = np.zeros(3)
            return cls(grid, z + c, z, z + p.a, float(c), p.chi)
        lam1 = p.chi * signal.eta2
        return cls(signal.grid, c + p.chi * signal.eta1, lam1, p.a - lam1, float(c), p.chi)

    def at(self, t):
        """``(lam, lam', mu)`` at ``t`` by linear interpolation, clamped at the ends."""
        x = self.grid.points
        return (np.interp(t, x, self.lam), np.interp(t, x, self.lam1), np.interp(t, x, self.mu))

    def in_range(self, p: ModelParams) -> bool:
        """``lam`` stays within ``chi a/(2b)`` of ``c``."""
        half = p.chi * p.a / (2 * p.b)
        return bool(np.all(np.abs(self.lam - self.c) <= half * (1 + 1e-9) + 1e-12))


@dataclass(frozen=True)
class PhaseState:
    t: float
    phi: float
    psi: float

    def zeta(self, m):
        return self.phi**m


@dataclass(frozen=True)
class ShotTrace:
    """Accepted integrator points of one shot, including the series start."""

    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    dphi: np.ndarray

    def __len__(self):
        return self.t.size

    def states(self):
        return [PhaseState(float(a), float(b), float(c))
                for a, b, c in zip(self.t, self.phi, self.psi)]


@dataclass(frozen=True)
class ShootOutcome:
    kind: Outcome
    t_end: float
    phi_end: float
    trace: ShotTrace
    c: float
    coeffs: CoefficientFields
    expansion: tuple
    n_rejected: int = 0

    @property
    def psi_end(self) -> float:
        return float(self.trace.psi[-1])

    def reached(self, p: ModelParams, grow_fraction: float = 0.99) -> bool:
        """Outcome as used by bisection; see :func:`integrate_profile`."""
        if self.kind is Outcome.REACHED_CAPACITY:
            return True
        if self.kind is Outcome.TURNED_BACK:
            return False
        ok = self.phi_end >= grow_fraction * p.capacity and self.psi_end > 0
        if not ok:
            warnings.warn(f"shot at c={self.c:.10g} still growing at t={self.t_end:.4g} "
                          f"with phi={self.phi_end:.4g}; counted as turned back", RuntimeWarning)
        return ok


@dataclass(frozen=True)
class SpeedResult:
    """A wave speed together with how it was obtained."""

    speed: float
    bracket: tuple
    tol: float
    method: str
    iterations: int = 0
    lo: ShootOutcome | None = field(default=None, repr=False, compare=False)
    hi: ShootOutcome | None = field(default=None, repr=False, compare=False)
    meta: dict = field(default_factory=dict, compare=False)


def local_expansion(lambda0, lambda1_0, mu0, m):
    """Coefficients ``(K1, K2)`` of ``phi ~ K1 t^(1/(m-1)) + K2 t^(m/(m-1))`` at the edge."""
    if not m > 1:
        raise InvalidParams("degenerate solver requires m > 1")
    if not lambda0 > 0:
        raise InvalidSpeed(f"lambda(0) must be positive, got {lambda0}")
    k1 = ((m - 1) * lambda0 / m) ** (1.0 / (m - 1))
    k2 = -(mu0 - lambda1_0 / (m - 1)) / (2 * m * lambda0) * k1
    return k1, k2


def _series(t, k1, k2, m):
    """``(phi, phi')`` of the two-term expansion."""
    e1 = 1.0 / (m - 1)
    e2 = m / (m - 1)
    phi = k1 * t**e1 + k2 * t**e2
    dphi = k1 * e1 * t ** (e1 - 1) + k2 * e2 * t ** (e2 - 1)
    return phi, dphi


def integrate_profile(c, signal, p: ModelParams, t_max=None, config: ShooterConfig | None = None,
                      ) -> ShootOutcome:
    """Shoot from the support edge at trial speed ``c``.

    ``signal`` is a :class:`~degenwave.bessel.SignalTriple` whose grid has the
    edge at 0, or None when ``chi = 0``. The shot stops when phi reaches
    ``a/b - cap_tol``, when psi returns to 0, or at ``t_max``.
    """
    p.require_degenerate()
    cfg = config or ShooterConfig()
    if not (math.isfinite(c) and c > 0):
        raise InvalidSpeed(f"speed must be positive, got {c}")
    if signal is None and p.chi > 0:
        raise InvalidParams("a signal is required when chi > 0")
    coeffs = CoefficientFields.build(c, signal, p)
    if np.min(coeffs.lam[coeffs.grid.points >= 0], initial=c) <= 0:
        raise InvalidSpeed(f"c={c} makes lambda non-positive")
    lam0, lam1_0, mu0 = (float(v) for v in coeffs.at(0.0))
    k1, k2 = local_expansion(lam0, lam1_0, mu0, p.m)
    t0 = cfg.start(p)
    phi0, dphi0 = _series(t0, k1, k2, p.m)
    if not (phi0 > 0 and dphi0 > 0):
        raise IntegratorFailure(f"series start t0={t0} is outside the expansion's range")
    psi0 = p.m * phi0 ** (p.m - 1) * dphi0

    if signal is None:
        xs = np.array([0.0, 1.0])
        e1 = e2 = np.zeros(2)
    else:
        x = signal.xi
        i0 = max(int(np.searchsorted(x, 0.0)) - 1, 0)
        xs = np.ascontiguousarray(x[i0:])
        e1 = np.ascontiguousarray(signal.eta1[i0:])
        e2 = np.ascontiguousarray(signal.eta2[i0:])
    kern = _backend.get(cfg.backend)
    code, ts, phis, psis, dphis, n_rej = kern.shoot(
        float(c), float(p.m), float(p.a), float(p.b), float(p.chi), xs, e1, e2,
        float(t0), float(phi0), float(psi0), float(t_max if t_max is not None else cfg.t_max),
        cfg.rtol, cfg.atol, p.capacity, cfg.cap_tol, int(cfg.max_steps))
    if code not in _CODES:
        raise IntegratorFailure(f"integrator failed at c={c} near t={ts[-1]:.6g}")
    trace = ShotTrace(ts, phis, psis, dphis)
    return ShootOutcome(_CODES[code], float(ts[-1]), float(phis[-1]), trace, float(c), coeffs,
                        (k1, k2), int(n_rej))


def find_bracket(signal, p: ModelParams, guess=None, config=None, floor=None):
    """Expand from ``guess`` until one end turns back and the other reaches a/b."""
    cfg = config or ShooterConfig()
    floor = floor if floor is not None else p.chi * p.a / (2 * p.b)
    hi = guess if guess is not None else math.sqrt(p.a * p.capacity ** (p.m - 1))
    out_hi = integrate_profile(hi, signal, p, config=cfg)
    for _ in range(60):
        if out_hi.reached(p, cfg.grow_fraction):
            break
        hi *= 2
        out_hi = integrate_profile(hi, signal, p, config=cfg)
    else:
        raise BracketInvalid("no speed reaches the carrying capacity", None, out_hi.kind)
    lo = hi
    out_lo = out_hi
    for _ in range(60):
        lo = floor + 0.5 * (lo - floor)
        out_lo = integrate_profile(lo, signal, p, config=cfg)
        if not out_lo.reached(p, cfg.grow_fraction):
            return lo, hi
        hi, out_hi = lo, out_lo
    raise BracketInvalid("every tried speed reaches the carrying capacity", out_lo.kind, None)


def critical_speed(signal, p: ModelParams, bracket=None, tol=1e-12,
                   config: ShooterConfig | None = None, richardson: bool = False) -> SpeedResult:
    """Infimum of speeds whose shot reaches a/b, by bisection on the outcome.

    With ``richardson=True`` the bisection is repeated with half the series
    start offset and the change in speed is stored in ``meta``.
    """
    cfg = config or ShooterConfig()
    if bracket is None:
        bracket = find_bracket(signal, p, config=cfg)
    lo, hi = (float(v) for v in bracket)
    if not lo < hi:
        raise BracketInvalid(f"bracket [{lo}, {hi}] is empty")
    out_lo = integrate_profile(lo, signal, p, config=cfg)
    out_hi = integrate_profile(hi, signal, p, config=cfg)
    r_lo = out_lo.reached(p, cfg.grow_fraction)
    r_hi = out_hi.reached(p, cfg.grow_fraction)
    if r_lo or not r_hi:
        raise BracketInvalid(
            f"bracket [{lo:.6g}, {hi:.6g}] does not straddle the critical speed "
            f"(low end: {out_lo.kind.value}, high end: {out_hi.kind.value})",
            out_lo.kind, out_hi.kind)
    it = 0
    while hi - lo > tol and it < 200:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        out = integrate_profile(mid, signal, p, config=cfg)
        if out.reached(p, cfg.grow_fraction):
            hi, out_hi = mid, out
        else:
            lo, out_lo = mid, out
        it += 1
    meta = {"t0": cfg.start(p), "rtol": cfg.rtol}
    res = SpeedResult(0.5 * (lo + hi), (lo, hi), float(tol), "shooting", it, out_lo, out_hi, meta)
    if richardson:
        half = ShooterConfig(**{**cfg.__dict__, "t0": 0.5 * cfg.start(p)})
        other = critical_speed(signal, p, bracket, tol, half)
        meta["richardson_delta"] = abs(other.speed - res.speed)
    return res


def psi_of_phi(trace):
    """``(phi, psi)`` along the increasing branch, ordered by phi."""
    tr = trace.trace if isinstance(trace, ShootOutcome) else trace
    if tr is None or len(tr) == 0:
        raise TraceTooShort("empty trace")
    phi = np.asarray(tr.phi)
    psi = np.asarray(tr.psi)
    # an event endpoint may sit exactly on psi = 0
    body = slice(None, -1) if psi[-1] <= 0 else slice(None)
    if np.any(psi[body] <= 0) or np.any(np.diff(phi[body]) <= 0):
        raise NonMonotoneTrace("phi is not strictly increasing along the trace")
    return phi[body].copy(), psi[body].copy()


def tail_rate(lam, mu, p: ModelParams):
    """Decay rate of ``a/b - phi`` along the stable direction at the capacity."""
    d = p.m * p.capacity ** (p.m - 1)
    g = 2 * p.a - mu
    return (-lam + math.sqrt(lam * lam + 4 * d * g)) / (2 * d)


def _stable_tail(coeffs: CoefficientFields, p: ModelParams, x, phi0, tol=1e-10, max_iter=50):
    """Profile on the nodes ``x[1:]`` joining ``phi0`` at ``x[0]`` to ``a/b``.

    Finite differences for ``(phi^m)'' = lam phi' + b phi^2 - mu phi`` with
    ``phi = phi0`` at ``x[0]`` and the stable-direction condition
    ``phi' = k (a/b - phi)`` at the last node, solved by Newton's method in
    the deficit ``eps = a/b - phi``. A boundary value solve is used because
    marching towards the saddle at ``a/b`` in either direction amplifies
    errors. Returns ``(phi on x[1:], k at the last node)``.
    """
    cap = p.capacity
    m = p.m
    capm = cap**m
    n = x.size - 1
    if n < 2:
        raise TraceTooShort("tail needs at least 2 nodes")
    lam, _, mu = coeffs.at(x)
    k_end = tail_rate(float(lam[-1]), float(mu[-1]), p)
    k_0 = tail_rate(float(lam[0]), float(mu[0]), p)
    d0 = cap - phi0
    eps = d0 * np.exp(-k_0 * (x - x[0]))
    # spacings around nodes 1..n; the ghost node mirrors the last spacing
    hl = np.diff(x)
    hr = np.append(hl[1:], hl[-1])
    wl = 2.0 / (hl * (hl + hr))
    wr = 2.0 / (hr * (hl + hr))
    wc = wl + wr
    gl = -hr / (hl * (hl + hr))
    gr = hl / (hr * (hl + hr))
    gc = -(gl + gr)
    lam_i, mu_i = lam[1:], mu[1:]

    def w_of(e):
        # a/b^m - phi^m without cancellation
        return -capm * np.expm1(m * np.log1p(-e / cap))

    for _ in range(max_iter):
        w = w_of(eps)
        dw = m * (cap - eps) ** (m - 1)
        # ghost node from eps' = -k eps at the last node
        e_ext = np.append(eps, eps[-2] - 2 * hr[-1] * k_end * eps[-1])
        w_ext = np.append(w, w_of(e_ext[-1]))
        dw_ext = np.append(dw, m * (cap - e_ext[-1]) ** (m - 1))
        el, ec, er = e_ext[:-2], e_ext[1:-1], e_ext[2:]
        # phi'' terms: (phi^m)'' = -(W)'' and phi' = -eps'
        zpp = -(wl * w_ext[:-2] - wc * w_ext[1:-1] + wr * w_ext[2:])
        dphi = -(gl * el + gc * ec + gr * er)
        react = cap * (p.a - mu_i) + ec * (mu_i - 2 * p.a) + p.b * ec * ec
        F = zpp - lam_i * dphi - react
        # Jacobian with respect to eps
        jl = -wl * dw_ext[:-2] + lam_i * gl
        jc = wc * dw_ext[1:-1] + lam_i * gc - (mu_i - 2 * p.a) - 2 * p.b * ec
        jr = -wr * dw_ext[2:] + lam_i * gr
        # last row: ghost depends on eps[-2] and eps[-1]
        jl[-1] += jr[-1]
        jc[-1] += jr[-1] * (-2 * hr[-1] * k_end)
        ab = np.zeros((3, n))
        ab[0, 1:] = jr[:-1]
        ab[1] = jc
        ab[2, :-1] = jl[1:]
        step = solve_banded((1, 1), ab, -F)
        eps[1:] += step
        # differencing phi^m leaves a rounding floor, so the test is absolute
        if np.max(np.abs(step)) <= tol * d0:
            break
    else:
        raise IntegratorFailure("tail Newton iteration did not converge")
    noise = 1e-9 * d0
    if np.any(eps[1:] < -noise) or np.any(np.diff(eps) > noise):
        raise NonMonotoneTrace("tail solution is not monotone")
    return cap - eps[1:], k_end

def reconstruct_profile(outcome: ShootOutcome, p: ModelParams, grid: Grid1D | None = None,
                        h: float = 1e-3, left: float = -20.0, right: float | None = None,
                        splice: float = 1e-2) -> Profile:
    """Sample a critical (or just supercritical) shot on a uniform grid.

    The trace is interpolated by quintic Hermite pieces using phi, phi' and
    phi'' from the ODE, and the series expansion is used below the start
    offset. Once ``a/b - phi`` drops below ``splice * a/b`` the trace is
    continued by the exponential approach along the stable direction at the
    capacity; this replaces the last part of the shot, where the saddle at
    ``a/b`` amplifies integration error. ``right`` defaults to 40 beyond the
    point where phi reaches ``0.999 a/b``.
    """
    tr = outcome.trace
    if len(tr) < 3:
        raise TraceTooShort("trace needs at least 3 points")
    cap = p.capacity
    m = p.m
    t, phi, psi, dphi = tr.t, tr.phi, tr.psi, tr.dphi
    if outcome.kind is Outcome.TURNED_BACK:
        # keep the increasing branch only
        t, phi, psi, dphi = t[:-1], phi[:-1], psi[:-1], dphi[:-1]

    lam, lam1, mu = outcome.coeffs.at(t)
    dpsi = lam * dphi + p.b * phi * phi - mu * phi
    d2phi = (dpsi - m * (m - 1) * phi ** (m - 2) * dphi**2) / (m * phi ** (m - 1))

    deficit = cap - phi
    hit = np.nonzero(deficit <= splice * cap)[0]
    if hit.size:
        js = int(hit[0])
    else:
        js = len(t) - 1
    t_s, phi_s = float(t[js]), float(phi[js])
    lam_s, _, mu_s = (float(v) for v in outcome.coeffs.at(t_s))
    kappa = tail_rate(lam_s, mu_s, p)

    if grid is None:
        if right is None:
            if phi_s >= 0.999 * cap:
                t_999 = float(np.interp(0.999 * cap, phi[: js + 1], t[: js + 1]))
            else:
                t_999 = t_s + math.log(max(cap - phi_s, 1e-300) / (1e-3 * cap)) / kappa
            right = t_999 + 40.0
        grid = Grid1D.uniform(left, right, h)
    x = grid.points
    out = np.zeros_like(x)

    k1, k2 = outcome.expansion
    t0 = float(t[0])
    near = (x > 0) & (x <= t0)
    out[near] = _series(x[near], k1, k2, m)[0]

    mid = (x > t0) & (x <= t_s)
    if js >= 1 and np.any(mid):
        yi = np.stack([phi[: js + 1], dphi[: js + 1], d2phi[: js + 1]], axis=1)
        poly = BPoly.from_derivatives(t[: js + 1], yi)
        out[mid] = poly(x[mid])

    far = x > t_s
    tail_kind = "boundary-value"
    try:
        j0 = int(np.searchsorted(x, t_s, side="right")) - 1
        if j0 < 0 or x[j0] <= t0:
            raise TraceTooShort("splice point lies left of the trace")
        x_tail = x[j0:]
        phi0 = float(out[j0]) if x[j0] > t0 else float(_series(x[j0], k1, k2, m)[0])
        out[j0 + 1:], _ = _stable_tail(outcome.coeffs, p, x_tail, phi0)
    except (DegenwaveError, ValueError, RuntimeError) as exc:
        # frozen-coefficient approach: D e^(-k tau) plus an e^(-2 k tau) term
        # that makes the join C1
        log.warning("boundary-value tail failed (%s); using exponential tail", exc)
        tail_kind = "exponential"
        d0 = cap - phi_s
        e0 = d0 - float(dphi[js]) / kappa
        if not abs(e0) < d0:
            e0 = 0.0
        ek = np.exp(-kappa * (x[far] - t_s))
        out[far] = cap - (d0 * ek + e0 * (ek - ek * ek))

    out = np.clip(np.maximum.accumulate(out), 0.0, cap)
    out[x <= 0] = 0.0
    # keep the strictly positive side strictly positive
    pos = x > 0
    if np.any(pos & (out <= 0)):
        bad = pos & (out <= 0)
        out[bad] = _series(x[bad], k1, k2, m)[0].clip(min=np.finfo(float).tiny)
    meta = {"speed": outcome.c, "splice_t": t_s, "tail_rate": kappa, "tail": tail_kind,
            "K1": k1, "K2": k2}
    return Profile(grid, out, 0.0, meta)
