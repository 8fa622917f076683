import numpy as np
from scipy.stats import norm

from dimsim.utils.check import check, check_finite


def _d1_d2(spot, strike, rate_dom, rate_fgn, sigma, tau):
    vol = sigma * np.sqrt(tau)
    d1 = (np.log(spot / strike) + (rate_dom - rate_fgn + 0.5 * sigma**2) * tau) / vol
    return d1, d1 - vol


def bs_price(spot, strike, rate_dom, rate_fgn, sigma, tau):
    """Garman-Kohlhagen value of a European call.

    Accepts scalars or arrays of spots; the remaining inputs are scalars.

    Parameters
    ----------
    spot : :obj:`float` or :obj:`numpy.ndarray`
    strike : :obj:`float`
    rate_dom : :obj:`float`
        Domestic (discounting) rate.
    rate_fgn : :obj:`float`
        Foreign rate or dividend yield.
    sigma : :obj:`float`
    tau : :obj:`float`
        Time to expiry in years.

    Returns
    -------
    :obj:`float` or :obj:`numpy.ndarray`
        Call value in domestic currency.
    """
    spot = np.asarray(spot, dtype=float)
    check_finite(spot, "price a call")
    check_finite([strike, rate_dom, rate_fgn, sigma, tau], "price a call")
    check(np.all(spot > 0), "price a call on a non-positive spot")
    check(strike > 0, "price a call with a non-positive strike")
    check(tau >= 0, "price a call with negative time to expiry")

    if tau == 0:
        return _unwrap(np.maximum(spot - strike, 0.0))

    forward_df = np.exp(-rate_fgn * tau)
    df = np.exp(-rate_dom * tau)

    if sigma == 0:
        forward_value = spot * forward_df - strike * df
        return _unwrap(np.maximum(forward_value, 0.0))

    d1, d2 = _d1_d2(spot, strike, rate_dom, rate_fgn, sigma, tau)
    value = spot * forward_df * norm.cdf(d1) - strike * df * norm.cdf(d2)

    return _unwrap(np.maximum(value, 0.0))


def bs_delta(spot, strike, rate_dom, rate_fgn, sigma, tau):
    """First derivative of `bs_price` in the spot."""

    spot = np.asarray(spot, dtype=float)
    check(tau > 0 and sigma > 0, "differentiate a call at expiry or without volatility")

    d1, _ = _d1_d2(spot, strike, rate_dom, rate_fgn, sigma, tau)
    return _unwrap(np.exp(-rate_fgn * tau) * norm.cdf(d1))


def bs_gamma(spot, strike, rate_dom, rate_fgn, sigma, tau):
    """Second derivative of `bs_price` in the spot."""

    spot = np.asarray(spot, dtype=float)
    check(tau > 0 and sigma > 0, "differentiate a call at expiry or without volatility")

    d1, _ = _d1_d2(spot, strike, rate_dom, rate_fgn, sigma, tau)
    density = norm.pdf(d1)
    return _unwrap(np.exp(-rate_fgn * tau) * density / (spot * sigma * np.sqrt(tau)))


def _unwrap(value):
    if np.ndim(value) == 0:
        return float(value)
    return value
