import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave.errors import HypothesisViolated, InadmissibleWeight, InvalidParams, RhoHitsZero
from degenwave.model import ModelParams
from degenwave.shooter import critical_speed
from degenwave.variational import (WeightFunction, chemo_speed_bounds, edge_coefficient,
                                   extremal_weight, functional_J, sigma_from_trajectory,
                                   solve_rho)

_cache = {}


def weight_for(m, a=1.0, b=1.0):
    key = (m, a, b)
    if key not in _cache:
        _cache[key] = extremal_weight(m, ModelParams(m, a=a, b=b))
    return _cache[key]


def test_quadratic_anchor():
    res = weight_for(2.0)
    assert res.c_star_0 == pytest.approx(1.0, abs=1e-6)
    assert res.sigma == pytest.approx(3.0, rel=1e-5)
    s = np.linspace(0, 1, 501)
    assert np.max(np.abs(res.weight(s) - 3 * (1 - s) ** 2)) < 1e-6
    rho = res.rho
    assert np.max(np.abs(rho.rho - rho.s**2 * (1 - rho.s) ** 2)) < 1e-8
    assert res.A == pytest.approx(edge_coefficient(1.0, 2.0)) and res.A == pytest.approx(1.0)


def test_rho_collapses_above_the_critical_value():
    with pytest.raises(RhoHitsZero):
        solve_rho(1.05, 2.0)
    ok = solve_rho(0.95, 2.0)
    assert np.all(ok.rho[1:-1] > 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 4.0), st.floats(1.2, 3.0))
def test_functional_never_exceeds_critical_value(k, m):
    # g = (1 - s)^k with k >= 1 has a finite slope at a/b
    w = WeightFunction.from_callable(lambda s: (1 - s) ** k, lambda s: -k * (1 - s) ** (k - 1),
                                     n=801)
    J = functional_J(w, ModelParams(m))
    c = critical_speed(None, ModelParams(m)).speed
    assert J <= c * (1 + 1e-6)


def test_inadmissible_weights_rejected():
    s = np.linspace(0, 1, 11)
    with pytest.raises(InadmissibleWeight):
        functional_J(WeightFunction(s, 1 + s, np.ones_like(s)), ModelParams(2))
    with pytest.raises(InadmissibleWeight):
        functional_J(WeightFunction(s, 2 - s, -np.ones_like(s)), ModelParams(2))


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_matches_shooting_and_trajectory_weight(m):
    res = weight_for(m)
    sp = critical_speed(None, ModelParams(m))
    assert abs(res.c_star_0 - sp.speed) / sp.speed < 1e-6
    assert sigma_from_trajectory(sp.hi, ModelParams(m)) == pytest.approx(res.sigma, rel=1e-3)


@pytest.mark.parametrize("a,b", [(4.0, 1.0), (1.0, 4.0)])
def test_scale_covariance(a, b):
    res = weight_for(2.0, a, b)
    cap = a / b
    assert res.c_star_0 == pytest.approx(math.sqrt(a * cap), rel=1e-6)
    assert res.sigma == pytest.approx(3.0 / cap, rel=1e-5)
    assert res.weight.cap == pytest.approx(cap)
    assert res.weight.mass() == pytest.approx(1.0, rel=1e-6)


def test_degenerate_exponent_required():
    with pytest.raises(InvalidParams, match="m > 1"):
        extremal_weight(1.0)


def test_chemotactic_bounds():
    res = weight_for(2.0)
    p = ModelParams(2, chi=0.05)
    b = chemo_speed_bounds(res.weight, res.sigma, res.c_star_0, None, p)
    assert b.lower == pytest.approx(1 - 1.5 * 0.05, rel=1e-5)
    assert b.upper == pytest.approx(1.0, abs=1e-6)
    assert b.contains(0.99) and not b.contains(1.0)
    free = chemo_speed_bounds(res.weight, res.sigma, res.c_star_0, None, ModelParams(2))
    assert tuple(free) == (res.c_star_0, res.c_star_0)
    with pytest.raises(HypothesisViolated):
        chemo_speed_bounds(res.weight, res.sigma, res.c_star_0, None, ModelParams(2, chi=0.3))
