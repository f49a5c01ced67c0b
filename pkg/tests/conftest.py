import warnings

import numpy as np
import pytest

from degenwave.fixed_point import FixedPointConfig, solve_wave
from degenwave.model import Grid1D, ModelParams, Profile


def random_ramp_profile(rng, cap, h=2e-3, left=-5.0, pad=12.0):
    """Random monotone piecewise-linear profile, 0 left of 0 and a/b at the right.

    Kinks sit on grid nodes so the sampled profile equals its interpolant.
    """
    k = int(rng.integers(2, 7))
    knots = np.round(np.concatenate([[0.0], np.cumsum(rng.uniform(0.2, 4.0, k))]) / h) * h
    vals = np.concatenate([[0.0], np.sort(rng.uniform(0, cap, k - 1)), [cap]])
    grid = Grid1D.uniform(left, knots[-1] + pad, h)
    return Profile(grid, np.interp(grid.points, knots, vals), 0.0)


def exact_quadratic_wave(x, cap=1.0, a=1.0):
    """Chemotaxis-free semi-finite wave for m = 2: ``cap (1 - exp(-sqrt(a/cap) x / 2))_+``."""
    k = 0.5 * np.sqrt(a / cap)
    return np.where(x > 0, cap * (1 - np.exp(-k * np.maximum(x, 0))), 0.0)


_waves = {}


def cached_wave(m, chi, h=1e-3, tau=0.0):
    key = (m, chi, h, tau)
    if key not in _waves:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _waves[key] = solve_wave(ModelParams(m, chi=chi, tau=tau), FixedPointConfig(h=h))
    return _waves[key]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
