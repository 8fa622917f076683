from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from dimsim.exceptions import ValidationError
from dimsim.utils.check import check, check_finite


@dataclass(frozen=True)
class GbmParams:
    """Geometric Brownian motion driving an equity or an FX rate.

    Parameters
    ----------
    spot0 : :obj:`float`
        Initial spot (equity price or FX rate).
    rate_dom : :obj:`float`
        Continuously-compounded domestic rate per year.
    rate_fgn : :obj:`float`
        Continuously-compounded foreign rate (dividend yield) per year, zero for
        equities.
    sigma : :obj:`float`
        Volatility per square-root year.
    drift : :obj:`float`, optional
        Drift of the simulation measure. Defaults to the risk-neutral drift
        ``rate_dom - rate_fgn``; pricing always uses the risk-neutral law.
    """

    spot0: float
    rate_dom: float
    rate_fgn: float
    sigma: float
    drift: Optional[float] = None

    def __post_init__(self):
        check_finite([self.spot0, self.rate_dom, self.rate_fgn, self.sigma], "build GbmParams")
        check(self.spot0 > 0, f"use spot0={self.spot0}; it must be positive")
        check(self.sigma >= 0, f"use sigma={self.sigma}; it must not be negative")

    @property
    def mu(self):
        if self.drift is None:
            return self.rate_dom - self.rate_fgn
        return self.drift

    def initial_state(self, n):
        return np.full(n, float(self.spot0))

    def evolve(self, spot, h, normals):
        """Exact lognormal transition of the spot over a step of length `h`."""

        drift = (self.mu - 0.5 * self.sigma**2) * h
        return spot * np.exp(drift + self.sigma * np.sqrt(h) * normals)

    def deflator_step(self, h):
        """Money-market deflator ratio ``D(t+h)/D(t)``."""

        return np.exp(-self.rate_dom * h)

    @property
    def normals_per_step(self):
        return 1

    def __repr__(self):
        result = "<gbm"
        result += f" spot0={self.spot0} rate_dom={self.rate_dom}"
        result += f" rate_fgn={self.rate_fgn} sigma={self.sigma}"
        result += ">"

        return result


@dataclass(frozen=True)
class G1ppParams:
    """One-factor Gaussian short-rate model with deterministic shift.

    The short rate is ``r(t) = x(t) + phi(t)`` with
    ``dx = -a x dt + sigma dW``, ``x(0) = 0`` and the shift ``phi`` chosen so
    that the model reproduces a flat initial curve.

    Parameters
    ----------
    mean_reversion : :obj:`float`
        Speed ``a`` per year.
    sigma : :obj:`float`
        Volatility of ``x`` per square-root year.
    flat_init_rate : :obj:`float`
        Continuously-compounded rate of the flat initial discount curve.
    """

    mean_reversion: float = 0.03
    sigma: float = 0.01
    flat_init_rate: float = 0.03

    def __post_init__(self):
        check_finite(
            [self.mean_reversion, self.sigma, self.flat_init_rate], "build G1ppParams"
        )
        check(
            self.mean_reversion > 0,
            f"use mean_reversion={self.mean_reversion}; it must be positive",
        )
        check(self.sigma >= 0, f"use sigma={self.sigma}; it must not be negative")

    @property
    def spot0(self):
        return 0.0

    def initial_state(self, n):
        return np.zeros(n)

    def discount0(self, t):
        """Initial discount curve ``P(0, t)``."""

        return np.exp(-self.flat_init_rate * np.asarray(t, dtype=float))

    def shift_integral(self, t0, t1):
        """Integral of the deterministic shift ``phi`` over ``[t0, t1]``."""

        a, s = self.mean_reversion, self.sigma

        def primitive(t):
            return t - 2.0 * (1.0 - np.exp(-a * t)) / a + (1.0 - np.exp(-2.0 * a * t)) / (2.0 * a)

        convexity = s**2 / (2.0 * a**2) * (primitive(t1) - primitive(t0))
        return self.flat_init_rate * (t1 - t0) + convexity

    def transition(self, h):
        """Mean factors and covariance of ``(x(t+h), int_t^{t+h} x ds)`` given ``x(t)``.

        Returns
        -------
        (e_x, e_i, var_x, var_i, cov) : :obj:`tuple` of :obj:`float`
            ``E[x(t+h)] = e_x * x(t)`` and ``E[int x] = e_i * x(t)``.
        """
        a, s = self.mean_reversion, self.sigma
        decay = np.exp(-a * h)
        e_x = decay
        e_i = (1.0 - decay) / a
        var_x = s**2 * (1.0 - decay**2) / (2.0 * a)
        var_i = s**2 / a**2 * (h - 2.0 * (1.0 - decay) / a + (1.0 - decay**2) / (2.0 * a))
        cov = s**2 / (2.0 * a**2) * (1.0 - decay) ** 2

        return e_x, e_i, var_x, max(var_i, 0.0), cov

    def evolve(self, x, h, normals):
        """Exact joint transition of the factor and its time integral.

        Parameters
        ----------
        normals : :obj:`numpy.ndarray`
            Shape ``(2, n)``; two independent standard normals per path.

        Returns
        -------
        (x_next, integral) : :obj:`tuple` of :obj:`numpy.ndarray`
        """
        e_x, e_i, var_x, var_i, cov = self.transition(h)
        sd_x = np.sqrt(var_x)

        if sd_x > 0:
            beta = cov / var_x
            resid = np.sqrt(max(var_i - beta * cov, 0.0))
        else:
            beta, resid = 0.0, np.sqrt(var_i)

        shock_x = sd_x * normals[0]
        x_next = e_x * x + shock_x
        integral = e_i * x + beta * shock_x + resid * normals[1]

        return x_next, integral

    @property
    def normals_per_step(self):
        return 2

    def __repr__(self):
        result = "<g1pp"
        result += f" mean_reversion={self.mean_reversion} sigma={self.sigma}"
        result += f" flat_init_rate={self.flat_init_rate}"
        result += ">"

        return result


def model_to_dict(model):
    record = {"type": "gbm" if isinstance(model, GbmParams) else "g1pp"}
    record.update(asdict(model))
    if record.get("drift", 0.0) is None:
        del record["drift"]
    return record


def model_from_dict(record):
    """Builds driver parameters from a ``{"type": "gbm"|"g1pp", ...}`` record."""

    record = dict(record)
    kind = record.pop("type", None)

    if kind == "gbm":
        return GbmParams(**record)
    if kind == "g1pp":
        return G1ppParams(**record)

    raise ValidationError(f"Cannot build a model of unknown type '{kind}'.")
