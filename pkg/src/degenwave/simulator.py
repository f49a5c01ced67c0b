"""Explicit finite-volume simulation of the full system in one dimension.

``u_t = (u^m)_xx - chi (u v_x)_x + u (a - b u)`` and
``tau v_t = v_xx - v + u`` on a cell-centred uniform grid with zero-flux
ends. The degenerate diffusion is a central difference of ``u^m``, the
chemotactic flux is upwinded on the sign of ``v_x`` and the reaction is
explicit. For ``tau = 0`` the signal is recomputed by a tridiagonal solve
every step. Front positions give an empirical invasion speed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.stats import linregress

from . import _backend
from .errors import (CFLViolated, FrontHitBoundary, InsufficientSamples, InvalidParams,
                     NonFiniteInput)
from .model import Grid1D, ModelParams

log = logging.getLogger(__name__)


@dataclass
class SimState:
    """Cell densities ``u`` and signal ``v`` on a uniform cell-centred grid."""

    grid: Grid1D
    u: np.ndarray
    v: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.u = np.array(self.u, dtype=float)
        self.v = np.array(self.v, dtype=float)
        n = len(self.grid)
        if self.u.shape != (n,) or self.v.shape != (n,):
            raise InvalidParams("u and v must match the grid")
        self.validate()

    @property
    def x(self):
        return self.grid.points

    @property
    def h(self) -> float:
        return self.grid.spacing

    def validate(self):
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise NonFiniteInput(f"non-finite state at t={self.time}")
        if np.any(self.u < 0) or np.any(self.v < 0):
            raise NonFiniteInput(f"negative density or signal at t={self.time}")

    def copy(self) -> "SimState":
        return SimState(self.grid, self.u.copy(), self.v.copy(), self.time)


@dataclass
class FrontSeries:
    """Front positions ``x_f(t)``: the leftmost grid point with ``u > delta``."""

    times: np.ndarray
    positions: np.ndarray
    delta: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.times.shape != self.positions.shape:
            raise InvalidParams("times and positions must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise InvalidParams("front times must be strictly increasing")

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class SpeedFit:
    """Least-squares invasion speed with its standard error."""

    speed: float
    stderr: float
    n: int
    intercept: float
    window: tuple

    def __float__(self):
        return self.speed


@dataclass
class RunResult:
    state: SimState
    series: FrontSeries
    snapshots: dict = field(default_factory=dict)
    steps: int = 0
    dt: float | None = None
    backend: str = ""

    def __iter__(self):
        return iter((self.state, self.series))


def cell_grid(left: float, right: float, h: float) -> Grid1D:
    """Cell centres of a uniform partition of ``[left, right]`` with width about ``h``."""
    n = int(round((right - left) / h))
    if n < 3:
        raise InvalidParams("domain must contain at least 3 cells")
    h = (right - left) / n
    return Grid1D(left + (np.arange(n) + 0.5) * h)


def _signal_matrix(n, h):
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0 / (h * h)
    ab[2, :-1] = -1.0 / (h * h)
    ab[1, :] = 2.0 / (h * h) + 1.0
    ab[1, 0] = ab[1, -1] = 1.0 / (h * h) + 1.0
    return ab


def elliptic_signal(u, h):
    """Solve ``-v'' + v = u`` with zero-flux ends."""
    return solve_banded((1, 1), _signal_matrix(u.size, h), np.asarray(u, dtype=float))


def initial_state(p: ModelParams, left: float, right: float, h: float,
                  x0: float = 0.0) -> SimState:
    """``u = a/b`` right of ``x0`` with a two-cell linear ramp, ``v`` from ``-v'' + v = u``."""
    grid = cell_grid(left, right, h)
    hh = grid.spacing
    u = p.capacity * np.clip((grid.points - x0) / (2 * hh) + 0.5, 0.0, 1.0)
    v = elliptic_signal(u, hh)
    return SimState(grid, u, np.maximum(v, 0.0), 0.0)


def stability_bound(state: SimState, p: ModelParams, backend=None) -> float:
    """Largest explicit step allowed for the current state."""
    k = _backend.get(backend)
    return float(k.stable_dt(state.u, state.v, state.h, p.m, p.chi, p.a, p.b, p.tau))


def _advance(state: SimState, p: ModelParams, t_total, dt, kern, factor):
    strict = dt is not None
    dt_max = float(dt) if strict else math.inf
    elapsed, steps, code = kern.pde_advance(state.u, state.v, state.h, p.m, p.chi, p.a, p.b,
                                            p.tau, float(t_total), dt_max, strict, factor)
    state.time += elapsed
    if code == 1:
        bound = stability_bound(state, p)
        raise CFLViolated(f"dt={dt:.3g} exceeds the stability bound {bound:.3g} "
                          f"at t={state.time:.6g}")
    state.validate()
    return int(steps)


def step(state: SimState, p: ModelParams, dt: float, backend=None) -> SimState:
    """One explicit step of length ``dt``; returns a new state."""
    if not dt > 0:
        raise InvalidParams("dt must be positive")
    kern = _backend.get(backend)
    new = state.copy()
    factor = kern.thomas_factor(len(new.grid), new.h) if p.tau == 0 else None
    _advance(new, p, dt, dt, kern, factor)
    return new


def front_position(state: SimState, delta: float) -> float:
    """Leftmost grid point with ``u > delta``, or NaN when there is none."""
    above = np.nonzero(state.u > delta)[0]
    return float(state.x[above[0]]) if above.size else math.nan


def run(p: ModelParams, init: SimState, T_final: float, dt: float | None = None,
        delta: float | None = None, sample_dt: float = 0.1, snapshot_times=(),
        margin: float = 20.0, backend=None) -> RunResult:
    """Integrate to ``T_final`` and track the front every ``sample_dt``.

    ``dt=None`` picks the stability bound at each step; an explicit ``dt``
    larger than the bound raises :class:`CFLViolated`. The run stops with
    :class:`FrontHitBoundary` once the front comes within ``margin`` of the
    left end. Unpacks as ``(state, series)``.
    """
    if not T_final > 0 or not sample_dt > 0:
        raise InvalidParams("T_final and sample_dt must be positive")
    delta = 1e-3 * p.capacity if delta is None else float(delta)
    kern = _backend.get(backend)
    name = _backend.name if backend is None else backend
    state = init.copy()
    factor = kern.thomas_factor(len(state.grid), state.h) if p.tau == 0 else None
    left = float(state.x[0]) - 0.5 * state.h

    t_end = state.time + T_final
    n_samples = int(math.floor(T_final / sample_dt + 1e-9))
    sample_at = state.time + sample_dt * np.arange(0, n_samples + 1)
    if sample_at[-1] < t_end - 1e-12:
        sample_at = np.append(sample_at, t_end)
    snaps = sorted(float(s) for s in snapshot_times)
    stops = sorted(set(sample_at.tolist()) | {state.time + s for s in snaps if 0 <= s <= T_final})

    times, fronts, snapshots = [], [], {}
    steps = 0
    snap_idx = 0
    for t_stop in stops:
        if t_stop > state.time:
            steps += _advance(state, p, t_stop - state.time, dt, kern, factor)
        state.time = t_stop
        xf = front_position(state, delta)
        if not math.isnan(xf):
            if xf - left < margin:
                raise FrontHitBoundary(f"front at x={xf:.4g} is within {margin} of the left "
                                       f"boundary at t={state.time:.4g}")
            if not times or state.time > times[-1]:
                times.append(state.time)
                fronts.append(xf)
        while snap_idx < len(snaps) and init.time + snaps[snap_idx] <= t_stop + 1e-12:
            snapshots[snaps[snap_idx]] = state.copy()
            snap_idx += 1
    log.info("simulated to t=%.4g in %d steps (%s kernels)", state.time, steps, name)
    return RunResult(state, FrontSeries(times, fronts, delta), snapshots, steps, dt, name)


def empirical_speed(series: FrontSeries, burn_in: float = 0.3, min_samples: int = 10) -> SpeedFit:
    """Negated least-squares slope of ``x_f`` against ``t`` after the burn-in fraction."""
    if not 0 <= burn_in < 1:
        raise InvalidParams("burn_in must lie in [0, 1)")
    t = series.times
    x = series.positions
    ok = np.isfinite(x)
    t, x = t[ok], x[ok]
    if t.size == 0:
        raise InsufficientSamples("no front samples")
    t_start = t[0] + burn_in * (t[-1] - t[0])
    sel = t >= t_start
    if np.count_nonzero(sel) < min_samples:
        raise InsufficientSamples(f"{np.count_nonzero(sel)} samples after burn-in, "
                                  f"need {min_samples}")
    fit = linregress(t[sel], x[sel])
    return SpeedFit(float(-fit.slope), float(fit.stderr), int(np.count_nonzero(sel)),
                    float(fit.intercept), (float(t[sel][0]), float(t[sel][-1])))
