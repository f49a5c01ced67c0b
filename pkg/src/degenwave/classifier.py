"""Sharp versus C1 semi-finite waves.

Near its edge a semi-finite profile behaves like ``K1 t^(1/(m-1))``: the
one-sided slope at the edge is infinite for m > 2, equal to K1 for m = 2 and
zero for m < 2. The class is decided by m alone; the profile-based checks
are diagnostics of numerical quality.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, ProfileNotSemiFinite, WindowEmpty
from .model import ModelParams, Profile


class WaveClass(str, enum.Enum):
    SHARP = "sharp"
    C1 = "C1"


@dataclass(frozen=True)
class EdgeFit:
    """Least-squares fit ``log phi = log amplitude + exponent log t``."""

    exponent: float
    amplitude: float
    window: tuple
    residual: float
    n_points: int


def edge_exponent(profile: Profile, window=None) -> EdgeFit:
    """Fit the power law at the support edge over ``t`` in ``window``.

    ``window`` defaults to ``[5h, 50h]`` with ``h`` the grid spacing.
    """
    x = profile.xi
    v = profile.values
    if np.ptp(v) == 0 or v[0] > 0:
        raise ProfileNotSemiFinite("profile is not zero to the left of an edge")
    t = x - profile.edge
    h = profile.grid.spacing
    lo, hi = window if window is not None else (5 * h, 50 * h)
    if not 0 < lo < hi:
        raise WindowEmpty("fit window must satisfy 0 < t_lo < t_hi")
    sel = (t >= lo * (1 - 1e-9)) & (t <= hi * (1 + 1e-9)) & (v > 0)
    if np.count_nonzero(sel) < 3:
        raise WindowEmpty(f"fewer than 3 usable points in t in [{lo:.3g}, {hi:.3g}]")
    lt = np.log(t[sel])
    lv = np.log(v[sel])
    coef, res, *_ = np.polyfit(lt, lv, 1, full=True)
    slope, icpt = coef
    rms = math.sqrt(float(res[0]) / lt.size) if res.size else 0.0
    return EdgeFit(float(slope), float(math.exp(icpt)), (float(lo), float(hi)), rms,
                   int(lt.size))


def classify(p: ModelParams) -> WaveClass:
    """Sharp for m >= 2, C1 for 1 < m < 2."""
    if not p.m > 1:
        raise InvalidParams("classification requires m > 1")
    return WaveClass.SHARP if p.m >= 2 else WaveClass.C1


def consistency_check(profile: Profile, p: ModelParams, deltas=None, k1=None, tol=0.05):
    """Compare the edge slope under refinement with the class predicted from m.

    The one-sided difference quotients ``phi(d)/d`` are taken at shrinking
    spacings ``d``; their log-log slope is positive when the edge slope
    vanishes, negative when it blows up and near zero when it is finite.
    Returns a report dict; disagreement is flagged, never corrected.
    """
    x = profile.xi
    t = x - profile.edge
    h = profile.grid.spacing
    if deltas is None:
        deltas = [h * 2**k for k in range(7, 0, -1)]
    deltas = np.asarray(sorted(deltas, reverse=True), dtype=float)
    vals = np.interp(deltas, t, profile.values)
    quot = vals / deltas
    if np.any(quot <= 0):
        return {"regime": "undetermined", "agrees": False, "deltas": deltas.tolist(),
                "quotients": quot.tolist(), "slope": None, "expected_slope": 1 / (p.m - 1) - 1}
    slope = float(np.polyfit(np.log(deltas), np.log(quot), 1)[0])
    if slope > tol:
        regime = "vanishing"
    elif slope < -tol:
        regime = "diverging"
    else:
        regime = "finite"
    predicted = classify(p)
    if predicted is WaveClass.C1:
        agrees = regime == "vanishing"
    elif p.m == 2:
        agrees = regime == "finite"
    else:
        agrees = regime == "diverging"
    report = {
        "regime": regime,
        "class": predicted.value,
        "agrees": bool(agrees),
        "slope": slope,
        "expected_slope": 1 / (p.m - 1) - 1,
        "deltas": deltas.tolist(),
        "quotients": quot.tolist(),
    }
    if k1 is not None and regime == "finite":
        report["limit"] = float(quot[-1])
        report["K1"] = float(k1)
    return report
