import numpy as np
import pytest
from scipy.stats import norm

from dimsim.estimators import QuantileReg, quantile_reg_estimator
from dimsim.exceptions import ValidationError
from dimsim.models import CallCombination, GbmParams
from dimsim.regression import BasisSpec
from dimsim.simulation import DeltaVCross, delta_v, simulate_outer, time_grid


def cross_of(dv, x):
    return DeltaVCross(t_index=0, t=0.0, delta=0.05, dv=dv, x=x, v=x, deflator=np.ones(len(dv)))


def test_independent_feature():
    generator = np.random.default_rng(5)
    dv = generator.standard_normal(5000)
    cross = cross_of(dv, generator.uniform(0.0, 1.0, 5000))

    result = quantile_reg_estimator(cross, BasisSpec("laguerre", 1), 0.05)

    assert np.mean(result.quantile) == pytest.approx(np.quantile(dv, 0.05), abs=0.1)
    assert np.ptp(result.quantile) < 0.4
    assert result.method == QuantileReg(basis=BasisSpec("laguerre", 1))


def test_heteroskedastic_scale_and_coverage():
    generator = np.random.default_rng(6)
    x = generator.uniform(1.0, 2.0, 20000)
    dv = x * generator.standard_normal(20000)

    result = quantile_reg_estimator(cross_of(dv, x), BasisSpec("monomial", 1), 0.05)

    central = np.abs(x - 1.5) < 0.01
    expected = 1.5 * norm.ppf(0.05)
    assert np.mean(result.quantile[central]) == pytest.approx(expected, rel=0.05)
    assert np.mean(dv < result.quantile) == pytest.approx(0.05, abs=0.01)
    assert np.all(result.per_path_im >= 0)


def test_diagnostics():
    generator = np.random.default_rng(7)
    cross = cross_of(generator.standard_normal(500), generator.uniform(0.0, 1.0, 500))

    result = quantile_reg_estimator(cross, BasisSpec("laguerre", 1), 0.1, steps=50)

    assert 1 <= result.diagnostics["iterations"] <= 50
    assert result.diagnostics["loss"] > 0


def test_inner_augmentation():
    model = GbmParams(spot0=85.0, rate_dom=0.03, rate_fgn=0.0, sigma=0.1)
    inst = CallCombination([(1, 120), (-2, 150)], 5.0)
    outer = simulate_outer(model, inst, 300, time_grid(5.0, 10), 1)
    cross = delta_v(outer, 2, 0.5, "full")

    result = quantile_reg_estimator(
        cross, BasisSpec("laguerre", 2), 0.05, inner_augment=3, outer=outer, steps=200
    )
    again = quantile_reg_estimator(
        cross, BasisSpec("laguerre", 2), 0.05, inner_augment=3, outer=outer, steps=200
    )

    assert result.per_path_im.shape == (300,)
    assert result.method.inner_augment == 3
    assert np.array_equal(result.quantile, again.quantile)


def test_inner_augmentation_needs_paths():
    cross = cross_of(np.arange(10.0), np.arange(10.0))

    with pytest.raises(ValidationError):
        quantile_reg_estimator(cross, BasisSpec("laguerre", 1), 0.05, inner_augment=2)
