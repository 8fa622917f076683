import numpy as np
import pytest

from dimsim.exceptions import ValidationError
from dimsim.models import bs_delta, bs_gamma, bs_price


def test_price_reference_value():
    result = bs_price(100.0, 100.0, 0.05, 0.0, 0.2, 1.0)

    assert result == pytest.approx(10.450583572185565, rel=1e-10)


def test_price_is_intrinsic_at_expiry():
    result = bs_price(np.array([90.0, 110.0]), 100.0, 0.05, 0.0, 0.2, 0.0)

    assert np.array_equal(result, [0.0, 10.0])


def test_price_without_volatility_is_discounted_forward_intrinsic():
    result = bs_price(100.0, 90.0, 0.05, 0.0, 0.0, 1.0)

    assert result == pytest.approx(100.0 - 90.0 * np.exp(-0.05))


def test_foreign_rate_lowers_the_price():
    domestic = bs_price(100.0, 105.0, 0.08, 0.0, 0.3, 1.0)
    fx = bs_price(100.0, 105.0, 0.08, 0.02, 0.3, 1.0)

    assert fx < domestic


def test_delta_matches_finite_difference():
    h = 1e-4
    args = (105.0, 0.08, 0.02, 0.3, 0.7)
    expected = (bs_price(100.0 + h, *args) - bs_price(100.0 - h, *args)) / (2 * h)

    assert bs_delta(100.0, *args) == pytest.approx(expected, rel=1e-7)


def test_gamma_matches_finite_difference():
    h = 1e-3
    args = (105.0, 0.08, 0.02, 0.3, 0.7)
    expected = (bs_delta(100.0 + h, *args) - bs_delta(100.0 - h, *args)) / (2 * h)

    assert bs_gamma(100.0, *args) == pytest.approx(expected, rel=1e-6)


def test_vectorized_in_spot():
    spots = np.array([80.0, 100.0, 120.0])
    result = bs_price(spots, 100.0, 0.03, 0.0, 0.1, 2.0)

    assert result.shape == (3,)
    assert np.all(np.diff(result) > 0)


def test_rejects_non_positive_spot():
    with pytest.raises(ValidationError, match="non-positive spot"):
        bs_price(np.array([1.0, 0.0]), 100.0, 0.03, 0.0, 0.1, 1.0)


def test_greeks_need_time_and_volatility():
    with pytest.raises(ValidationError):
        bs_delta(100.0, 100.0, 0.03, 0.0, 0.1, 0.0)

    with pytest.raises(ValidationError):
        bs_gamma(100.0, 100.0, 0.03, 0.0, 0.0, 1.0)
