"""Model parameters, grids and wave profiles shared by every solver.

The system is the one-dimensional chemotaxis model with porous-medium
diffusion and logistic growth,

    u_t = (u^m)_xx - chi (u v_x)_x + u (a - b u),
    tau v_t = v_xx - v + u,

with traveling waves u = phi(x + c t), v = eta(x + c t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooShort, InvalidParams, InvalidProfile, NonFiniteInput, NotApplicable


@dataclass(frozen=True)
class ModelParams:
    """Parameters ``(m, chi, a, b, tau)`` of the chemotaxis system."""

    m: float
    chi: float = 0.0
    a: float = 1.0
    b: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        for name in ("m", "chi", "a", "b", "tau"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise InvalidParams(f"{name} must be finite, got {val!r}")
        if self.m < 1:
            raise InvalidParams(f"m must be >= 1, got {self.m}")
        if self.a <= 0 or self.b <= 0:
            raise InvalidParams("a and b must be positive")
        if self.chi < 0 or self.tau < 0:
            raise InvalidParams("chi and tau must be non-negative")

    @property
    def capacity(self) -> float:
        """Carrying capacity a/b."""
        return self.a / self.b

    @property
    def degenerate(self) -> bool:
        return self.m > 1

    def require_degenerate(self):
        if not self.m > 1:
            raise InvalidParams("degenerate solver requires m > 1")

    def with_(self, **changes) -> "ModelParams":
        vals = dict(m=self.m, chi=self.chi, a=self.a, b=self.b, tau=self.tau)
        vals.update(changes)
        return ModelParams(**vals)


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing 1-D coordinates, possibly non-uniform."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 3:
            raise GridTooShort("grid needs at least 3 points")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteInput("grid contains non-finite coordinates")
        if np.any(np.diff(pts) <= 0):
            raise InvalidParams("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, start: float, stop: float, h: float) -> "Grid1D":
        """Uniform grid with spacing ``h`` that contains 0 when 0 is in range."""
        lo = math.floor(start / h + 1e-9)
        hi = math.ceil(stop / h - 1e-9)
        return cls(h * np.arange(lo, hi + 1, dtype=float))

    def __len__(self):
        return self.points.size

    @property
    def spacing(self) -> float:
        """Smallest spacing (the spacing, for uniform grids)."""
        return float(np.min(np.diff(self.points)))

    @property
    def is_uniform(self) -> bool:
        d = np.diff(self.points)
        return bool(np.ptp(d) <= 1e-9 * d.mean())


@dataclass(frozen=True)
class Profile:
    """Monotone semi-finite wave profile sampled on a grid.

    ``values`` vanish for ``xi <= edge`` and are positive beyond it.
    """

    grid: Grid1D
    values: np.ndarray
    edge: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.points.shape:
            raise InvalidProfile("profile values must match the grid")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteInput("profile contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def xi(self) -> np.ndarray:
        return self.grid.points

    def __call__(self, x):
        """Piecewise-linear evaluation, 0 on the left and last value on the right."""
        return np.interp(x, self.xi, self.values, left=0.0, right=self.values[-1])

    def check(self, p: ModelParams, atol: float = 1e-12):
        """Raise :class:`InvalidProfile` unless the profile is admissible."""
        v, x = self.values, self.xi
        cap = p.capacity
        if v.min() < -atol or v.max() > cap + atol:
            raise InvalidProfile("profile leaves [0, a/b]")
        if np.any(np.diff(v) < -atol):
            raise InvalidProfile("profile is not non-decreasing")
        left = x <= self.edge
        if np.any(np.abs(v[left]) > atol):
            raise InvalidProfile("profile does not vanish left of its edge")
        right = x > self.edge
        if np.any(v[right] <= 0):
            raise InvalidProfile("profile is not positive right of its edge")
        return self

    def shifted(self) -> "Profile":
        """Same profile with the support edge moved to 0."""
        if self.edge == 0.0:
            return self
        return Profile(Grid1D(self.xi - self.edge), self.values, 0.0, dict(self.meta))


def reaction(u, p: ModelParams):
    """Logistic growth ``u (a - b u)``."""
    return u * (p.a - p.b * u)


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    chi: float
    bounds: tuple
    bound: float
    margin: float

    def as_dict(self):
        return {
            "admissible": self.admissible,
            "chi": self.chi,
            "bounds": list(self.bounds),
            "bound": self.bound,
            "margin": self.margin,
        }


def chi_admissible(p: ModelParams, c0: float, sigma: float) -> AdmissibilityReport:
    """Check ``0 < chi <= min(...)`` for the existence of semi-finite chemotactic waves.

    ``c0`` is the chemotaxis-free critical speed and ``sigma`` the value at 0
    of the normalized extremal weight, both at the user's (a, b) scale.
    """
    if not c0 > 0 or not sigma > 0:
        raise InvalidParams("c0 and sigma must be positive")
    a, b = p.a, p.b
    bounds = (
        2 * b**2 * c0 / (3 * a**2 * sigma),
        2 * b * c0 / (3 * a),
        b / (p.tau * c0 + 2),
    )
    bound = min(bounds)
    ok = 0 < p.chi <= bound
    return AdmissibilityReport(ok, p.chi, bounds, bound, bound - p.chi)


def speed_scaling(p: ModelParams, c_unit: float) -> float:
    """Map the a = b = 1 chemotaxis-free speed to general (a, b)."""
    if p.chi > 0:
        raise NotApplicable("speed scaling only holds for chi = 0")
    return math.sqrt(p.a * p.capacity ** (p.m - 1)) * c_unit
