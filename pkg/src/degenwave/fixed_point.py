"""Self-consistent semi-finite waves of the chemotaxis system.

Starting from the chemotaxis-free wave, each step freezes the signal of the
current profile, finds the critical speed of the resulting profile equation
by shooting and reconstructs the corresponding profile. The profiles are
blended with a damping factor and projected back onto the set of monotone,
semi-finite profiles bounded by a/b.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .bessel import SignalTriple, bessel_apply
from .errors import BracketInvalid, DegenwaveError, InvalidParams
from .model import Grid1D, ModelParams, Profile, chi_admissible
from .shooter import (ShooterConfig, SpeedResult, critical_speed, find_bracket,
                      reconstruct_profile)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FixedPointConfig:
    """Settings for :func:`solve_wave`.

    ``envelope`` is an optional pair ``(C1, C2)``; when set, iterates are also
    clamped between ``K1 t^(1/(m-1)) -/+ C t^(m/(m-1))`` near the edge.
    """

    max_iter: int = 60
    profile_tol: float = 1e-6
    speed_tol: float = 1e-6
    damping: float = 1.0
    h: float = 1e-3
    left: float = -20.0
    right_pad: float = 40.0
    bisect_tol: float = 1e-12
    envelope: tuple | None = None
    sigma: float | None = None
    shooter: ShooterConfig = field(default_factory=ShooterConfig)

    def __post_init__(self):
        if not (self.profile_tol > 0 and self.speed_tol > 0):
            raise InvalidParams("tolerances must be positive")
        if not 0 < self.damping <= 1:
            raise InvalidParams("damping must lie in (0, 1]")
        if not (self.h > 0 and self.max_iter >= 1):
            raise InvalidParams("grid spacing and iteration budget must be positive")


@dataclass
class WaveResult:
    speed: float
    profile: Profile
    signal: SignalTriple
    iterations: int
    converged: bool
    residuals: list
    c_star_0: float
    bounds_report: dict
    admissibility: dict | None = None
    in_phi: list = field(default_factory=list)
    speeds: list = field(default_factory=list)


def convergence_norm(delta, x=None, N=None) -> float:
    """Discrete weighted sup-norm ``sum_n 2^-n max_{|x|<=n} |delta|``.

    ``N`` defaults to the largest integer radius contained in the window.
    """
    if isinstance(delta, Profile):
        x, d = delta.xi, delta.values
    else:
        d = np.asarray(delta, dtype=float)
        x = np.asarray(x, dtype=float)
    if N is None:
        N = int(math.floor(min(-x[0], x[-1]) + 1e-12))
    ad = np.abs(d)
    ax = np.abs(x)
    total = 0.0
    for n in range(1, N + 1):
        sel = ax <= n + 1e-12
        if np.any(sel):
            total += 2.0**-n * float(ad[sel].max())
    return total


def envelopes(t, k1, m, c1, c2, cap):
    """Lower and upper edge envelopes ``K1 t^(1/(m-1)) -/+ C t^(m/(m-1))``."""
    tp = np.maximum(t, 0.0)
    base = k1 * tp ** (1 / (m - 1))
    corr = tp ** (m / (m - 1))
    return np.clip(base - c1 * corr, 0.0, cap), np.clip(base + c2 * corr, 0.0, cap)


def project(values, x, p: ModelParams, bounds=None):
    """Monotone, semi-finite, [0, a/b]-valued version of ``values`` with edge at 0."""
    v = np.clip(np.maximum.accumulate(np.asarray(values, dtype=float)), 0.0, p.capacity)
    if bounds is not None:
        lo, hi = bounds
        near = (x > 0) & (lo < hi)
        v[near] = np.clip(v[near], lo[near], hi[near])
        v = np.maximum.accumulate(v)
    v[x <= 0] = 0.0
    return v


def in_phi(profile: Profile, p: ModelParams, atol=1e-12) -> bool:
    """True when the profile is monotone, vanishes left of 0, is positive right of 0."""
    try:
        profile.check(p, atol)
    except DegenwaveError:
        return False
    return profile.edge == 0.0


def apply_T(phi_hat: Profile, p: ModelParams, cfg: FixedPointConfig | None = None,
            c_prev=None, c0=None, grid: Grid1D | None = None):
    """One application of the wave map: ``phi_hat -> (phi_c, c)``.

    ``c_prev`` sets ``tau c`` for the signal and the top of the speed
    bracket; ``c0`` is the chemotaxis-free speed used to place the bracket.
    Returns ``(profile, SpeedResult, signal)``.
    """
    cfg = cfg or FixedPointConfig()
    p.require_degenerate()
    grid = grid or phi_hat.grid
    if c0 is None:
        c0 = critical_speed(None, p.with_(chi=0.0), tol=cfg.bisect_tol,
                            config=cfg.shooter).speed
    c_prev = c0 if c_prev is None else c_prev
    signal = bessel_apply(phi_hat, p.tau * c_prev, p)
    if p.chi == 0:
        sp = critical_speed(None, p, tol=cfg.bisect_tol, config=cfg.shooter)
    else:
        floor = p.chi * p.a / (2 * p.b) + 1e-9 * c0
        lo = max(2 * c0 / 3 - 0.1 * c0, floor)
        hi = c_prev + 0.5 * c0
        try:
            sp = critical_speed(signal, p, (lo, hi), cfg.bisect_tol, cfg.shooter)
        except BracketInvalid as exc:
            log.warning("speed bracket [%.6g, %.6g] rejected (%s); searching", lo, hi, exc)
            br = find_bracket(signal, p, guess=hi, config=cfg.shooter, floor=floor)
            sp = critical_speed(signal, p, br, cfg.bisect_tol, cfg.shooter)
    prof = reconstruct_profile(sp.hi, p, grid=grid)
    return prof, sp, signal


def _initial_profile(p: ModelParams, cfg: FixedPointConfig):
    free = p.with_(chi=0.0)
    sp = critical_speed(None, free, tol=cfg.bisect_tol, config=cfg.shooter)
    rough = reconstruct_profile(sp.hi, free, h=0.05)
    cap = p.capacity
    x999 = float(rough.xi[np.argmax(rough.values >= 0.999 * cap)])
    grid = Grid1D.uniform(cfg.left, x999 + cfg.right_pad, cfg.h)
    return reconstruct_profile(sp.hi, free, grid=grid), sp


def _bounds_report(speed, c0, sigma, p: ModelParams):
    from .variational import HypothesisViolated, chemo_speed_bounds
    rep = {"c_star_0": c0, "lower_coarse": 2 * c0 / 3, "upper": c0}
    try:
        b = chemo_speed_bounds(None, sigma, c0, None, p)
        rep["lower"] = b.lower
        rep["correction"] = b.correction
        rep["hypothesis"] = True
        ok = b.lower <= speed and (speed < c0 if p.chi > 0 else abs(speed - c0) <= 1e-6 * c0)
    except HypothesisViolated:
        rep["lower"] = 2 * c0 / 3
        rep["hypothesis"] = False
        ok = 2 * c0 / 3 <= speed < c0
    rep["pass"] = bool(ok)
    return rep


def solve_wave(p: ModelParams, cfg: FixedPointConfig | None = None, callback=None) -> WaveResult:
    """Damped fixed-point iteration for the chemotactic semi-finite wave.

    Stops when both the weighted profile change ``||T(phi) - phi||`` and the
    speed change fall below their tolerances. Non-convergence is reported
    through ``converged = False`` with the last iterate.
    ``callback(k, profile, speed)`` is called after every iteration.
    """
    cfg = cfg or FixedPointConfig()
    p.require_degenerate()
    phi, sp0 = _initial_profile(p, cfg)
    c0 = sp0.speed
    grid = phi.grid
    x = grid.points

    sigma = cfg.sigma
    admissibility = None
    if p.chi > 0:
        if sigma is None:
            from .variational import extremal_weight
            sigma = extremal_weight(p.m, p).sigma
        rep = chi_admissible(p, c0, sigma)
        admissibility = rep.as_dict()
        if not rep.admissible:
            warnings.warn(f"chi={p.chi} outside the admissible range (bound {rep.bound:.4g}); "
                          "continuing in exploratory mode", RuntimeWarning)

    c = c0
    residuals = []
    speeds = [c0]
    member = [in_phi(phi, p)]
    converged = False
    signal = None
    k = 0
    for k in range(1, cfg.max_iter + 1):
        t_phi, sp, _ = apply_T(phi, p, cfg, c_prev=c, c0=c0, grid=grid)
        diff = convergence_norm(t_phi.values - phi.values, x)
        dc = abs(sp.speed - c)
        bounds = None
        if cfg.envelope is not None:
            c1, c2 = cfg.envelope
            bounds = envelopes(x, t_phi.meta["K1"], p.m, c1, c2, p.capacity)
        new = project((1 - cfg.damping) * phi.values + cfg.damping * t_phi.values, x, p, bounds)
        phi = Profile(grid, new, 0.0, {"speed": sp.speed})
        c = sp.speed
        residuals.append({"iteration": k, "profile_change": diff, "speed_change": dc,
                          "speed": c})
        speeds.append(c)
        member.append(in_phi(phi, p))
        log.info("iteration %d: speed %.10f, profile change %.3e", k, c, diff)
        if callback is not None:
            callback(k, phi, c)
        if diff <= cfg.profile_tol and dc <= cfg.speed_tol:
            converged = True
            break
    signal = bessel_apply(phi, p.tau * c, p)
    if sigma is None:
        from .variational import extremal_weight
        sigma = extremal_weight(p.m, p).sigma
    report = _bounds_report(c, c0, sigma, p)
    return WaveResult(c, phi, signal, k, converged, residuals, c0, report, admissibility,
                      member, speeds)


def _bump(x, center, radius):
    """Smooth bump and its first two derivatives."""
    z = (x - center) / radius
    w = np.zeros_like(x)
    w1 = np.zeros_like(x)
    w2 = np.zeros_like(x)
    inside = np.abs(z) < 1
    zi = z[inside]
    q = 1 - zi * zi
    e = np.exp(-1 / q)
    w[inside] = e
    # d/dz exp(-1/q) = -2z/q^2 e
    w1[inside] = -2 * zi / q**2 * e / radius
    w2[inside] = (4 * zi * zi / q**4 - 2 / q**2 - 8 * zi * zi / q**3) * e / radius**2
    return w, w1, w2


def weak_residual(profile: Profile, signal: SignalTriple, speed, p: ModelParams,
                  centers=None, radius=2.0):
    """Weak-form residual of the wave equation against smooth bumps.

    For each bump w the residual is
    ``int [-c phi w' - phi^m w'' - chi phi eta' w' - phi (a - b phi) w]``
    divided by the integral of the absolute values of the four terms.
    Returns the largest relative residual.
    """
    x = profile.xi
    phi = profile.values
    eta1 = np.interp(x, signal.xi, signal.eta1)
    if centers is None:
        centers = np.arange(0.0, 16.0, 1.0) * p.capacity ** ((1 - p.m) / 2) / math.sqrt(p.a)
    worst = 0.0
    for c0 in centers:
        w, w1, w2 = _bump(x, c0, radius)
        terms = (-speed * phi * w1, -phi**p.m * w2, -p.chi * phi * eta1 * w1,
                 -phi * (p.a - p.b * phi) * w)
        res = abs(sum(simpson(t, x=x) for t in terms))
        scale = sum(simpson(np.abs(t), x=x) for t in terms)
        if scale > 0:
            worst = max(worst, res / scale)
    return worst
