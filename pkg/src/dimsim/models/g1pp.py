import numpy as np

from dimsim.utils.check import check


def _variance_term(params, t, maturity):
    a, s = params.mean_reversion, params.sigma
    tau = maturity - t
    return (
        s**2
        / a**2
        * (
            tau
            + 2.0 / a * np.exp(-a * tau)
            - 1.0 / (2.0 * a) * np.exp(-2.0 * a * tau)
            - 3.0 / (2.0 * a)
        )
    )


def g1pp_bond_price(params, t, maturity, x):
    """Zero-coupon bond ``P(t, T)`` under the shifted one-factor Gaussian model.

    ``P(t, T) = A(t, T) exp(-B(t, T) x)`` with ``B = (1 - exp(-a (T - t))) / a``
    and ``A`` chosen so the model reprices the flat initial curve.

    Parameters
    ----------
    params : :obj:`dimsim.models.parameters.G1ppParams`
    t : :obj:`float`
    maturity : :obj:`float`
    x : :obj:`float` or :obj:`numpy.ndarray`
        Short-rate factor at ``t``.
    """
    check(t <= maturity + 1e-12, f"price a bond maturing at {maturity} from t={t}")

    factor = np.asarray(x, dtype=float)
    if maturity <= t:
        return np.ones_like(factor) if factor.ndim else 1.0

    a = params.mean_reversion
    b = (1.0 - np.exp(-a * (maturity - t))) / a
    log_a = (
        np.log(params.discount0(maturity) / params.discount0(t))
        + 0.5
        * (
            _variance_term(params, t, maturity)
            - _variance_term(params, 0.0, maturity)
            + _variance_term(params, 0.0, t)
        )
    )

    price = np.exp(log_a - b * factor)

    return price if factor.ndim else float(price)
