import math

import numpy as np
import pytest
from conftest import random_ramp_profile
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave.bessel import bessel_apply, bessel_quadrature, characteristic_roots, check_bounds
from degenwave.errors import InvalidParams
from degenwave.model import Grid1D, ModelParams, Profile


def step_signal(x, tau_c, cap):
    """Bounded solution of ``-eta'' + tau_c eta' + eta = cap H(x)``."""
    rm, rp = characteristic_roots(tau_c)
    A = -rm * cap / (rp - rm)
    B = -rp * cap / (rp - rm)
    return np.where(x < 0, A * np.exp(rp * np.minimum(x, 0)), cap + B * np.exp(rm * np.maximum(x, 0)))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 20.0))
def test_characteristic_roots(tau_c):
    rm, rp = characteristic_roots(tau_c)
    assert rm < 0 < rp
    assert rm * rp == pytest.approx(-1.0)
    assert rm + rp == pytest.approx(tau_c, abs=1e-12)


@pytest.mark.parametrize("tau_c", [0.0, 0.5, 2.0])
def test_step_profile_both_routes(tau_c):
    h = 1e-4
    cap = 2.0
    p = ModelParams(2, a=2.0, b=1.0)
    grid = Grid1D.uniform(-15, 25, h)
    prof = Profile(grid, np.where(grid.points > 0, cap, 0.0), 0.0)
    x = grid.points
    exact = step_signal(x, tau_c, cap)
    sig = bessel_apply(prof, tau_c, p)
    inner = (x > -10) & (x < 10)
    # the sampled step is a one-cell ramp, so both routes sit O(h) from the exact step
    assert np.max(np.abs(sig.eta - exact)[inner]) < 2 * h * cap
    pts = np.array([-3.0, -0.5, 0.5, 1.0, 4.0])
    q = bessel_quadrature(prof, tau_c, p, points=pts)
    assert np.max(np.abs(q.eta - step_signal(pts, tau_c, cap))) < 2 * h * cap


def test_routes_agree_on_random_profiles():
    rng = np.random.default_rng(7)
    p = ModelParams(2)
    for _ in range(5):
        prof = random_ramp_profile(rng, 1.0)
        for tau_c in (0.0, 1.0):
            sig = bessel_apply(prof, tau_c, p)
            idx = np.searchsorted(prof.xi, np.linspace(-3, prof.xi[-1] - 10, 15))
            q = bessel_quadrature(prof, tau_c, p, points=prof.xi[idx])
            assert np.max(np.abs(sig.eta[idx] - q.eta)) < 1e-5
            assert np.max(np.abs(sig.eta1[idx] - q.eta1)) < 1e-5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 3.0), st.floats(0.2, 5.0))
def test_a_priori_bounds_hold(seed, tau_c, cap):
    p = ModelParams(2, a=cap, b=1.0)
    prof = random_ramp_profile(np.random.default_rng(seed), cap, h=5e-3)
    sig = bessel_apply(prof, tau_c, p)
    assert all(check_bounds(sig, p).values())
    assert sig.residual(prof) < 1e-9 * cap


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
def test_linear_in_the_profile(seed, alpha, tau_c):
    rng = np.random.default_rng(seed)
    p = ModelParams(2)
    h = 5e-3
    grid = Grid1D.uniform(-5, 40, h)
    f1 = random_ramp_profile(rng, 1.0, h=h)
    f2 = random_ramp_profile(rng, 1.0, h=h)
    v1, v2 = f1(grid.points), f2(grid.points)
    mix = Profile(grid, alpha * v1 + (1 - alpha) * v2, 0.0)
    s1 = bessel_apply(Profile(grid, v1), tau_c, p)
    s2 = bessel_apply(Profile(grid, v2), tau_c, p)
    sm = bessel_apply(mix, tau_c, p)
    assert np.allclose(sm.eta, alpha * s1.eta + (1 - alpha) * s2.eta, atol=1e-12)
    assert np.allclose(sm.eta1, alpha * s1.eta1 + (1 - alpha) * s2.eta1, atol=1e-10)


def test_drift_lowers_signal_of_increasing_profile():
    # the drift shifts the averaging window to the left, where the profile is smaller
    p = ModelParams(2)
    prof = random_ramp_profile(np.random.default_rng(3), 1.0, h=5e-3)
    lo = bessel_apply(prof, 0.0, p).eta
    hi = bessel_apply(prof, 5.0, p).eta
    assert np.all(hi <= lo + 1e-9)
    assert hi[np.searchsorted(prof.xi, 5.0)] < lo[np.searchsorted(prof.xi, 5.0)]


def test_negative_drift_rejected():
    prof = random_ramp_profile(np.random.default_rng(0), 1.0, h=1e-2)
    with pytest.raises(InvalidParams):
        bessel_apply(prof, -1.0, ModelParams(2))
    with pytest.raises(InvalidParams):
        bessel_quadrature(prof, math.nan, ModelParams(2))
