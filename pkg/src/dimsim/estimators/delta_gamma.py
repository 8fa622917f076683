"""Delta-gamma approximations of the value change over the MPoR.

With the spot log-return ``R ~ N(0, Omega)``, ``Omega = sigma**2 * dt``, the
value change is approximated by ``delta_cash * R + gamma_cash * R**2 / 2``.
The normal variant matches its mean and variance; the Cornish-Fisher
variant adjusts the normal quantile with the skewness, kurtosis and fifth
standardized moment of the same quadratic form.
"""

import numpy as np
from scipy.stats import norm

from dimsim.estimators.method_spec import (
    KURTOSIS_CONVENTIONS,
    DeltaGammaCF,
    DeltaGammaNormal,
    ImCross,
    im_from_quantile,
)
from dimsim.exceptions import DegenerateDistributionError
from dimsim.johnson import cornish_fisher_quantile
from dimsim.utils.check import check, check_probability


def _inputs(greeks, sigma, delta_t):
    check(delta_t > 0, f"use delta_t={delta_t}; it must be positive")
    check(sigma >= 0, f"use sigma={sigma}; it must not be negative")

    delta = np.asarray(greeks.delta_cash, dtype=float)
    gamma = np.asarray(greeks.gamma_cash, dtype=float)
    return delta, gamma, sigma**2 * delta_t


def _unwrap(value):
    return float(value) if np.ndim(value) == 0 else value


def delta_gamma_normal(greeks, sigma, delta_t, alpha):
    """Normal quantile of the delta-gamma value change.

    ``E = gamma Omega / 2`` and ``Var = (gamma Omega)**2 / 2 + delta**2 Omega``.

    Parameters
    ----------
    greeks : :obj:`dimsim.models.Greeks`
        Cash delta and cash gamma, scalars or arrays.
    sigma : :obj:`float`
        Spot volatility.
    delta_t : :obj:`float`
        Horizon in years.
    alpha : :obj:`float`
    """
    check_probability(alpha)
    delta, gamma, omega = _inputs(greeks, sigma, delta_t)

    mean = 0.5 * gamma * omega
    variance = 0.5 * (gamma * omega) ** 2 + delta**2 * omega

    return _unwrap(mean + norm.ppf(alpha) * np.sqrt(variance))


def delta_gamma_moments(delta, gamma, omega):
    """Raw moments ``E[dV**k]``, ``k = 1..5``, of ``delta R + gamma R**2 / 2``.

    Returns
    -------
    :obj:`tuple`
        Five scalars or arrays shaped like the broadcast inputs.
    """
    e1 = 0.5 * gamma * omega
    e2 = delta**2 * omega + 0.75 * gamma**2 * omega**2
    e3 = 1.5 * delta**2 * gamma * 3.0 * omega**2 + gamma**3 * 15.0 * omega**3 / 8.0
    e4 = (
        delta**4 * 3.0 * omega**2
        + 1.5 * delta**2 * gamma**2 * 15.0 * omega**3
        + gamma**4 * 105.0 * omega**4 / 16.0
    )
    e5 = (
        2.5 * delta**4 * gamma * 15.0 * omega**3
        + 1.25 * delta**2 * gamma**3 * 105.0 * omega**4
        + gamma**5 * 945.0 * omega**5 / 32.0
    )
    return e1, e2, e3, e4, e5


def central_moments(e1, e2, e3, e4, e5):
    """Mean and central moments ``cm2..cm5`` from raw moments."""

    cm2 = e2 - e1**2
    cm3 = e3 - 3.0 * e1 * e2 + 2.0 * e1**3
    cm4 = e4 - 4.0 * e1 * e3 + 6.0 * e1**2 * e2 - 3.0 * e1**4
    cm5 = e5 - 5.0 * e1 * e4 + 10.0 * e1**2 * e3 - 10.0 * e1**3 * e2 + 4.0 * e1**5
    return e1, cm2, cm3, cm4, cm5


def delta_gamma_cf(greeks, sigma, delta_t, alpha, kurtosis_convention="excess"):
    """Cornish-Fisher quantile of the delta-gamma value change.

    Parameters
    ----------
    greeks : :obj:`dimsim.models.Greeks`
    sigma : :obj:`float`
    delta_t : :obj:`float`
    alpha : :obj:`float`
    kurtosis_convention : :obj:`str`
        ``"excess"`` feeds ``beta2 - 3`` to the expansion, ``"raw"`` feeds
        ``beta2``.

    Raises
    ------
    DegenerateDistributionError
        If the variance vanishes although a sensitivity is nonzero.
    """
    check_probability(alpha)
    check(
        kurtosis_convention in KURTOSIS_CONVENTIONS,
        f"use kurtosis convention '{kurtosis_convention}'; choose excess or raw",
    )
    delta, gamma, omega = _inputs(greeks, sigma, delta_t)

    mean, cm2, cm3, cm4, cm5 = central_moments(*delta_gamma_moments(delta, gamma, omega))

    flat = (delta == 0) & (gamma == 0)
    if np.any((cm2 <= 0) & ~flat):
        raise DegenerateDistributionError(
            "Cannot expand a delta-gamma quantile with zero variance and nonzero sensitivities."
        )

    spread = np.where(flat, 1.0, cm2)
    with np.errstate(divide="ignore", invalid="ignore"):
        k3 = cm3 / spread**1.5
        k4 = cm4 / spread**2
        k5 = cm5 / spread**2.5
    if kurtosis_convention == "excess":
        k4 = k4 - 3.0

    standardized = cornish_fisher_quantile(k3, k4, k5, alpha)
    quantile = np.where(flat, 0.0, mean + np.sqrt(np.maximum(cm2, 0.0)) * standardized)

    return _unwrap(quantile)


def delta_gamma_estimator(outer, cross, alpha, cornish_fisher=False, kurtosis_convention="excess"):
    """Per-path initial margin from the delta-gamma quantile at every outer state.

    Greeks are priced at the path's spot and the quantile is deflated with
    the path's ``D(t)``.
    """
    model = outer.model
    greeks = outer.instrument.greeks(model, cross.t, cross.x)

    if cornish_fisher:
        quantile = delta_gamma_cf(greeks, model.sigma, cross.delta, alpha, kurtosis_convention)
        method = DeltaGammaCF(kurtosis_convention=kurtosis_convention)
    else:
        quantile = delta_gamma_normal(greeks, model.sigma, cross.delta, alpha)
        method = DeltaGammaNormal()

    quantile = cross.deflator * np.asarray(quantile, dtype=float)

    return ImCross(
        t_index=cross.t_index,
        t=cross.t,
        per_path_im=im_from_quantile(quantile),
        method=method,
        quantile=quantile,
    )
