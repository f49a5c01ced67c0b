import numpy as np
import pytest
from conftest import cached_wave, exact_quadratic_wave
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from degenwave.fixed_point import (FixedPointConfig, apply_T, convergence_norm, in_phi, project,
                                   solve_wave, weak_residual)
from degenwave.errors import InvalidParams
from degenwave.model import Grid1D, ModelParams, Profile


def test_free_wave_is_a_fixed_point_after_one_step():
    res = cached_wave(2.0, 0.0)
    assert res.converged and res.iterations == 1
    assert res.speed == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(res.profile.values - exact_quadratic_wave(res.profile.xi))) < 1e-8


@pytest.mark.parametrize("chi", [0.02, 0.05])
def test_chemotaxis_lowers_the_speed(chi):
    res = cached_wave(2.0, chi)
    assert res.converged
    assert 1 - 1.5 * chi <= res.speed < 1 - 1e-3
    assert res.bounds_report["pass"]
    assert all(res.in_phi)


@pytest.mark.parametrize("m,chi", [(1.5, 0.01), (3.0, 0.02)])
def test_weak_residual_small(m, chi):
    res = cached_wave(m, chi)
    assert res.converged
    p = ModelParams(m, chi=chi)
    assert weak_residual(res.profile, res.signal, res.speed, p) < 1e-5


def test_weak_residual_detects_wrong_speed():
    res = cached_wave(2.0, 0.05)
    p = ModelParams(2, chi=0.05)
    assert weak_residual(res.profile, res.signal, res.speed * 1.01, p) > 1e-3


def test_map_at_the_fixed_point_is_stationary():
    res = cached_wave(2.0, 0.05)
    p = ModelParams(2, chi=0.05)
    prof, sp, _ = apply_T(res.profile, p, c_prev=res.speed, c0=res.c_star_0)
    assert abs(sp.speed - res.speed) < 1e-6
    assert convergence_norm(prof.values - res.profile.values, prof.xi) < 1e-6


def test_grid_refinement():
    coarse = cached_wave(2.0, 0.05)
    fine = cached_wave(2.0, 0.05, h=5e-4)
    assert abs(coarse.speed - fine.speed) < 2e-6


def test_config_validation():
    with pytest.raises(InvalidParams):
        FixedPointConfig(damping=0.0)
    with pytest.raises(InvalidParams):
        FixedPointConfig(profile_tol=-1)


def test_requires_degenerate_diffusion():
    with pytest.raises(InvalidParams):
        solve_wave(ModelParams(1.0, chi=0.05))


def test_inadmissible_chi_warns_and_runs():
    with pytest.warns(RuntimeWarning, match="admissible"):
        res = solve_wave(ModelParams(2, chi=0.3), FixedPointConfig(h=2e-3))
    assert res.admissibility is not None and not res.admissibility["admissible"]


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 41, elements=st.floats(-2, 2)), st.floats(0.0, 3.0))
def test_norm_is_a_seminorm(d, scale):
    x = np.linspace(-10, 10, 41)
    n = convergence_norm(d, x)
    assert n >= 0
    assert convergence_norm(scale * d, x) == pytest.approx(scale * n, abs=1e-12)
    assert convergence_norm(d + d[::-1], x) <= n + convergence_norm(d[::-1], x) + 1e-12
    assert n <= np.max(np.abs(d)) + 1e-12


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 41, elements=st.floats(-1, 3)))
def test_projection_lands_in_profile_set(v):
    p = ModelParams(2)
    x = np.linspace(-10, 10, 41)
    w = project(v, x, p)
    assert np.all(np.diff(w) >= 0)
    assert np.all(w[x <= 0] == 0)
    assert np.all((w >= 0) & (w <= p.capacity))
    # projecting twice changes nothing
    assert np.array_equal(project(w, x, p), w)


def test_membership_rejects_bad_profiles():
    p = ModelParams(2)
    g = Grid1D(np.linspace(-1, 1, 5))
    assert in_phi(Profile(g, [0, 0, 0, 0.5, 1.0]), p)
    assert not in_phi(Profile(g, [0, 0, 0, 1.0, 0.5]), p)
    assert not in_phi(Profile(g, [0, 0, 0, 0.0, 1.0]), p)
    assert not in_phi(Profile(g, [0, 0.1, 0.2, 0.5, 1.0]), p)
