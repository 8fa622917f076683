import numpy as np
import pytest
from scipy.stats import norm

from dimsim.estimators import NestedMC, inner_moments, inner_raw_moments, nested_mc
from dimsim.exceptions import GridError, ValidationError
from dimsim.models import CallCombination, EuropeanCall, GbmParams
from dimsim.simulation import delta_v, simulate_outer, time_grid

GBM = GbmParams(spot0=85.0, rate_dom=0.03, rate_fgn=0.0, sigma=0.1)


def call_outer(n_outer=200, n_steps=10, model=GBM, inst=None, seed=5):
    inst = inst or CallCombination([(1, 120), (-2, 150)], 5.0)
    return simulate_outer(model, inst, n_outer, time_grid(inst.maturity, n_steps), seed)


def test_zero_volatility_margin_is_the_value_loss():
    model = GbmParams(spot0=130.0, rate_dom=0.03, rate_fgn=0.0, sigma=0.0, drift=-0.1)
    outer = call_outer(n_outer=20, n_steps=8, model=model, inst=EuropeanCall(100.0, 2.0))
    cross = delta_v(outer, 3, 0.25, "full")

    result = nested_mc(outer, 3, 0.25, "full", 16, 0.01)

    assert np.all(cross.dv < 0)
    assert np.allclose(result.per_path_im, -cross.dv, rtol=1e-9)
    assert result.t == pytest.approx(0.75)


def test_result_shape_and_method():
    outer = call_outer()

    result = nested_mc(outer, 2, 0.5, "full", 64, 0.01)

    assert result.per_path_im.shape == (200,)
    assert np.all(result.per_path_im >= 0)
    assert np.allclose(result.per_path_im, np.maximum(0.0, -result.quantile))
    assert result.method == NestedMC(n_inner=64)


def test_reproducible_and_seeded():
    outer = call_outer()

    first = nested_mc(outer, 2, 0.5, "full", 64, 0.01)
    second = nested_mc(outer, 2, 0.5, "full", 64, 0.01)
    other = nested_mc(outer, 2, 0.5, "full", 64, 0.01, seed=99)

    assert np.array_equal(first.quantile, second.quantile)
    assert not np.array_equal(first.quantile, other.quantile)


def test_inner_moments_agree():
    outer = call_outer(n_outer=30)

    raw = inner_raw_moments(outer, 2, 0.5, "full", 256)
    central = inner_moments(outer, 2, 0.5, "full", 256)

    assert raw.shape == central.shape == (30, 4)
    assert np.allclose(raw[:, 0], central[:, 0])
    assert np.allclose(raw[:, 1] - raw[:, 0] ** 2, central[:, 1], rtol=1e-6, atol=1e-12)


def test_checks():
    outer = call_outer()

    with pytest.raises(ValidationError):
        nested_mc(outer, 2, 0.5, "full", 1, 0.01)

    with pytest.raises(ValidationError):
        nested_mc(outer, 2, 0.5, "full", 10, 0.0)

    with pytest.raises(GridError):
        nested_mc(outer, 2, 0.3, "full", 10, 0.01)


@pytest.mark.slow
def test_matches_monotone_map():
    inst = EuropeanCall(85.0, 5.0)
    outer = call_outer(n_outer=1000, n_steps=100, inst=inst)
    t_index, delta, alpha = 10, 0.05, 0.01
    j = t_index + 1

    result = nested_mc(outer, t_index, delta, "full", 2000, alpha)

    spot = outer.states[:, t_index]
    shock = (GBM.mu - 0.5 * GBM.sigma**2) * delta + GBM.sigma * np.sqrt(delta) * norm.ppf(alpha)
    end_value = inst.value(GBM, outer.times[j], spot * np.exp(shock))
    start_value = inst.value(GBM, outer.times[t_index], spot)
    expected = np.exp(-GBM.rate_dom * delta) * end_value - start_value
    expected = outer.deflators[:, t_index] * expected
    expected_im = np.maximum(0.0, -expected)

    relative = np.abs(result.per_path_im - expected_im) / expected_im

    assert np.median(relative) < 0.05
    assert result.dim == pytest.approx(expected_im.mean(), rel=0.02)
