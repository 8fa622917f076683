import numpy as np
import pytest
from scipy.stats import norm

from dimsim.estimators import EvalGrid, eval_grid, glsmc, jlsmc
from dimsim.estimators.lsmc import _grid_law
from dimsim.exceptions import EstimationError, ValidationError
from dimsim.regression import BasisSpec
from dimsim.simulation import DeltaVCross

BASIS = BasisSpec("laguerre", 2, "X")


def cross_of(dv, x):
    return DeltaVCross(
        t_index=4, t=0.2, delta=0.05, dv=dv, x=x, v=x, deflator=np.ones(len(dv))
    )


def gaussian_cross(n=20000, mean=0.5, sd=2.0, seed=1):
    generator = np.random.default_rng(seed)
    return cross_of(mean + sd * generator.standard_normal(n), generator.uniform(0.0, 1.0, n))


def counts():
    return dict.fromkeys(
        ("invalid", "corrected", "normal_fallback", "discarded", "degenerate", "no_fit"), 0
    )


def test_eval_grid():
    feature = np.random.default_rng(0).standard_normal(5000)

    result = eval_grid(feature, 50)

    assert len(result) == 50
    assert np.all(np.diff(result.points) > 0)
    assert result.probs[0] == 0.0025
    assert result.probs[-1] == 0.9975


def test_eval_grid_collapses_ties():
    feature = np.repeat([0.0, 1.0], 500)

    result = eval_grid(feature, 20)

    assert np.array_equal(result.points, [0.0, 1.0])


def test_eval_grid_checks():
    with pytest.raises(ValidationError):
        EvalGrid(points=np.array([1.0, 0.0]), probs=np.array([0.2, 0.4]))

    with pytest.raises(ValidationError):
        eval_grid(np.arange(10.0), 1)


def test_glsmc_gaussian():
    result = glsmc(gaussian_cross(), BASIS, 0.01)
    expected = 0.5 + 2.0 * norm.ppf(0.01)

    assert np.mean(result.quantile) == pytest.approx(expected, abs=0.15)
    assert np.all(result.per_path_im >= 0)
    assert result.diagnostics["floored"] == 0


def test_glsmc_deterministic_target_is_floored():
    x = np.linspace(0.0, 1.0, 1000)

    result = glsmc(cross_of(x, x), BASIS, 0.01)

    assert np.allclose(result.quantile, x, atol=1e-5)
    assert result.diagnostics["floored"] > 0


def test_glsmc_affine_equivariance():
    cross = gaussian_cross(n=2000)
    scaled = cross_of(3.0 * cross.dv - 1.0, cross.x)

    base = glsmc(cross, BASIS, 0.05)
    result = glsmc(scaled, BASIS, 0.05)

    assert np.allclose(result.quantile, 3.0 * base.quantile - 1.0, rtol=1e-6, atol=1e-9)


def test_glsmc_uses_value_feature():
    cross = gaussian_cross(n=1000)
    value_cross = DeltaVCross(
        t_index=0, t=0.0, delta=0.05, dv=cross.dv, x=cross.x, v=np.zeros(1000),
        deflator=np.ones(1000),
    )

    result = glsmc(value_cross, BasisSpec("laguerre", 2, "V"), 0.01)

    assert np.allclose(result.quantile, result.quantile[0])


def test_jlsmc_gaussian():
    result = jlsmc(gaussian_cross(mean=0.0, sd=1.0), BASIS, 0.01)

    assert np.median(result.quantile) == pytest.approx(norm.ppf(0.01), abs=0.15)
    assert result.method.eval_points == 200
    families = sum(v for k, v in result.diagnostics.items() if k.startswith("family_"))
    assert families == 200 - result.diagnostics["discarded"] - result.diagnostics["degenerate"]


def test_jlsmc_affine_equivariance():
    cross = gaussian_cross(n=5000)
    scaled = cross_of(2.0 * cross.dv + 3.0, cross.x)

    base = jlsmc(cross, BASIS, 0.05)
    result = jlsmc(scaled, BASIS, 0.05)

    assert np.allclose(result.quantile, 2.0 * base.quantile + 3.0, rtol=1e-6, atol=1e-6)


def test_jlsmc_skewed_sample():
    generator = np.random.default_rng(3)
    n = 20000
    x = generator.uniform(0.0, 1.0, n)
    dv = generator.lognormal(0.0, 0.5, n) - np.exp(0.125)

    result = jlsmc(cross_of(dv, x), BASIS, 0.05)
    expected = np.exp(0.5 * norm.ppf(0.05)) - np.exp(0.125)

    assert np.median(result.quantile) == pytest.approx(expected, abs=0.1)


def test_jlsmc_constant_value_change():
    x = np.linspace(0.0, 1.0, 500)

    with pytest.raises(EstimationError) as info:
        jlsmc(cross_of(np.full(500, 2.0), x), BASIS, 0.01)

    assert info.value.method_id == "jlsmc"
    assert info.value.t == 0.2


def test_jlsmc_tied_feature():
    generator = np.random.default_rng(5)
    cross = cross_of(generator.standard_normal(5000), np.full(5000, 0.7))

    result = jlsmc(cross, BASIS, 0.01, eval_points=50)

    assert result.method.eval_points == 50
    assert np.all(result.quantile == result.quantile[0])
    assert result.quantile[0] == pytest.approx(norm.ppf(0.01), abs=0.15)


def test_jlsmc_inner_mean_needs_paths():
    with pytest.raises(ValidationError):
        jlsmc(gaussian_cross(n=500), BASIS, 0.01, moment_source="inner_mean", n_inner=10)


def test_grid_law_corrections():
    # mean 0, variance 1, no skew, kurtosis 0.5
    raw = (0.0, 1.0, 0.0, 0.5)

    tally = counts()
    assert _grid_law(raw, "discard", tally) is None
    assert tally["invalid"] == 1 and tally["discarded"] == 1

    tally = counts()
    law = _grid_law(raw, "normal_fallback", tally)
    assert law.family == "SN"
    assert tally["normal_fallback"] == 1

    tally = counts()
    law = _grid_law(raw, "project", tally)
    assert law is not None
    assert tally["corrected"] == 1


def test_grid_law_degenerate():
    tally = counts()

    assert _grid_law((1.0, 1.0, 1.0, 1.0), "project", tally) is None
    assert tally["degenerate"] == 1


def test_grid_law_feasible():
    tally = counts()

    law = _grid_law((0.0, 1.0, 0.0, 3.0), "discard", tally)

    assert law.family == "SN"
    assert tally == counts()
