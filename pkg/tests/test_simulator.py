import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave import _backend
from degenwave.errors import CFLViolated, FrontHitBoundary, InsufficientSamples, InvalidParams
from degenwave.model import ModelParams
from degenwave.simulator import (FrontSeries, SimState, cell_grid, empirical_speed,
                                 initial_state, run, stability_bound, step)

P2 = ModelParams(2)


def test_trivial_equilibria_are_fixed():
    grid = cell_grid(-5, 5, 0.1)
    n = len(grid)
    zero = SimState(grid, np.zeros(n), np.zeros(n))
    out = step(zero, P2, 1e-3)
    assert np.all(out.u == 0) and np.all(out.v == 0)
    p = ModelParams(2, chi=0.3, a=2.0, b=1.0)
    full = SimState(grid, np.full(n, 2.0), np.full(n, 2.0))
    out = step(full, p, 1e-4)
    assert np.allclose(out.u, 2.0, atol=1e-12) and np.allclose(out.v, 2.0, atol=1e-12)
    assert out.time == pytest.approx(1e-4)


def test_step_does_not_modify_input():
    s0 = initial_state(P2, -10, 5, 0.05)
    u = s0.u.copy()
    step(s0, P2, 1e-4)
    assert np.array_equal(s0.u, u)


def test_cfl_violation():
    s0 = initial_state(P2, -10, 5, 0.05)
    bound = stability_bound(s0, P2)
    with pytest.raises(CFLViolated):
        step(s0, P2, 2 * bound)
    with pytest.raises(InvalidParams):
        step(s0, P2, 0.0)


@pytest.mark.parametrize("chi,tau", [(0.0, 0.0), (0.2, 0.0), (0.2, 1.0)])
def test_positivity_and_compact_support(chi, tau):
    p = ModelParams(2, chi=chi, tau=tau)
    s0 = initial_state(p, -30, 5, 0.05)
    res = run(p, s0, 5.0, sample_dt=0.5, margin=5.0)
    u = res.state.u
    assert np.all(u >= 0) and np.all(res.state.v >= 0)
    # a finite number of cells on the left stay exactly empty
    assert np.count_nonzero(u == 0) > 100
    assert np.all(np.diff(res.series.positions) <= 0)


def test_front_moves_left_and_hits_boundary():
    s0 = initial_state(P2, -25, 5, 0.05)
    with pytest.raises(FrontHitBoundary):
        run(P2, s0, 20.0, margin=20.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-10, 10), st.integers(10, 200))
def test_regression_recovers_linear_front(c, x0, n):
    t = np.linspace(0, 10, n)
    fit = empirical_speed(FrontSeries(t, x0 - c * t, 1e-3), burn_in=0.0)
    assert fit.speed == pytest.approx(c, rel=1e-9)
    assert fit.stderr < 1e-6 * c


def test_insufficient_samples():
    with pytest.raises(InsufficientSamples):
        empirical_speed(FrontSeries(np.arange(12.0), -np.arange(12.0), 1e-3), burn_in=0.5)
    with pytest.raises(InvalidParams):
        FrontSeries(np.array([0.0, 0.0]), np.zeros(2), 1e-3)


def test_quadratic_speed_and_threshold_insensitivity():
    p = ModelParams(2)
    s0 = initial_state(p, -45, 5, 0.04)
    speeds = []
    for delta in (1e-4, 1e-3, 1e-2):
        res = run(p, s0, 20.0, delta=delta, margin=15.0)
        speeds.append(empirical_speed(res.series).speed)
    assert speeds[1] == pytest.approx(1.0, rel=0.05)
    assert max(speeds) - min(speeds) < 0.01 * speeds[1]


def test_snapshots_recorded():
    s0 = initial_state(P2, -20, 5, 0.1)
    res = run(P2, s0, 2.0, snapshot_times=(0.5, 1.5), margin=5.0)
    assert sorted(res.snapshots) == [0.5, 1.5]
    assert res.snapshots[0.5].time == pytest.approx(0.5)
    state, series = res
    assert state.time == pytest.approx(2.0)


@pytest.mark.skipif(_backend.name != "compiled", reason="compiled kernels not built")
@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_backend_parity(tau):
    p = ModelParams(2, chi=0.1, tau=tau)
    s0 = initial_state(p, -20, 5, 0.05)
    a = run(p, s0, 1.0, backend="python", margin=5.0).state
    b = run(p, s0, 1.0, backend="compiled", margin=5.0).state
    assert np.allclose(a.u, b.u, atol=1e-11)
    assert np.allclose(a.v, b.v, atol=1e-11)


@pytest.mark.slow
def test_grid_convergence():
    p = ModelParams(2)
    speeds = []
    for h in (0.04, 0.02):
        s0 = initial_state(p, -45, 5, h)
        res = run(p, s0, 20.0, margin=15.0)
        speeds.append(empirical_speed(res.series).speed)
    assert abs(speeds[0] - speeds[1]) < 0.02 * speeds[1]
