import numpy as np
import pytest
from conftest import cached_wave
from hypothesis import given, settings
from hypothesis import strategies as st

from degenwave.classifier import WaveClass, classify, consistency_check, edge_exponent
from degenwave.errors import InvalidParams, ProfileNotSemiFinite, WindowEmpty
from degenwave.model import Grid1D, ModelParams, Profile


def power_profile(m, k1=0.7, h=1e-3):
    grid = Grid1D.uniform(-1.0, 5.0, h)
    x = grid.points
    v = np.clip(k1 * np.maximum(x, 0) ** (1 / (m - 1)), 0, 1.0)
    return Profile(grid, v, 0.0)


@pytest.mark.parametrize("m,expected", [(1.2, WaveClass.C1), (1.5, WaveClass.C1),
                                        (1.9, WaveClass.C1), (2.0, WaveClass.SHARP),
                                        (2.5, WaveClass.SHARP), (3.0, WaveClass.SHARP)])
def test_classify(m, expected):
    assert classify(ModelParams(m)) is expected


def test_classify_rejects_linear_diffusion():
    with pytest.raises(InvalidParams):
        classify(ModelParams(1.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(1.15, 4.0), st.floats(0.1, 2.0))
def test_fit_recovers_pure_power_law(m, k1):
    fit = edge_exponent(power_profile(m, k1))
    assert fit.exponent == pytest.approx(1 / (m - 1), rel=1e-6)
    assert fit.amplitude == pytest.approx(k1, rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.15, 4.0))
def test_refinement_regimes_on_power_law(m):
    rep = consistency_check(power_profile(m), ModelParams(m))
    assert rep["slope"] == pytest.approx(1 / (m - 1) - 1, abs=1e-6)
    # within the slope tolerance of m = 2 the regimes cannot be told apart
    if abs(1 / (m - 1) - 1) > 0.06:
        assert rep["agrees"]


def test_fit_errors():
    g = Grid1D.uniform(-1, 1, 1e-2)
    with pytest.raises(ProfileNotSemiFinite):
        edge_exponent(Profile(g, np.ones(len(g)), 0.0))
    with pytest.raises(WindowEmpty):
        edge_exponent(power_profile(2.0), window=(10.0, 20.0))
    with pytest.raises(WindowEmpty):
        edge_exponent(power_profile(2.0), window=(0.5, 0.1))


@pytest.mark.parametrize("m,chi", [(1.5, 0.01), (2.0, 0.05), (3.0, 0.02)])
def test_converged_waves(m, chi):
    res = cached_wave(m, chi)
    p = ModelParams(m, chi=chi)
    fit = edge_exponent(res.profile)
    assert fit.exponent == pytest.approx(1 / (m - 1), rel=0.05)
    rep = consistency_check(res.profile, p)
    assert rep["agrees"]
    expected = {1.5: "vanishing", 2.0: "finite", 3.0: "diverging"}[m]
    assert rep["regime"] == expected
