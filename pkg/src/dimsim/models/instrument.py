from dataclasses import dataclass

import numpy as np

from dimsim.exceptions import ValidationError
from dimsim.models.black_scholes import bs_delta, bs_gamma, bs_price
from dimsim.models.g1pp import g1pp_bond_price
from dimsim.models.parameters import G1ppParams, GbmParams
from dimsim.utils.check import check

TIME_TOL = 1e-10


@dataclass(frozen=True)
class Greeks:
    """Cash sensitivities of a portfolio to its spot.

    Parameters
    ----------
    delta_cash : :obj:`float` or :obj:`numpy.ndarray`
        ``dV/dS * S``.
    gamma_cash : :obj:`float` or :obj:`numpy.ndarray`
        ``d2V/dS2 * S**2``.
    """

    delta_cash: object
    gamma_cash: object


class Instrument:
    """A portfolio whose value is a deterministic function of ``(t, state)``.

    Subclasses declare the driver model they are priced under, the dates on
    which something happens (payments or rate resets) and the cashflow paid
    on each of these dates. The optional `fixing` state carries the floating
    rate already set for the running accrual period.
    """

    name = "instrument"
    model_type = None
    has_sensitivities = False

    def __init__(self, maturity):
        check(maturity > 0, f"use maturity={maturity}; it must be positive")
        self.maturity = float(maturity)

    def check_model(self, model):
        check(
            isinstance(model, self.model_type),
            f"price a {self.name} under a {type(model).__name__} model",
        )

    def check_time(self, t):
        check(
            -TIME_TOL <= t <= self.maturity + TIME_TOL,
            f"value a {self.name} at t={t} outside [0, {self.maturity}]",
        )

    def event_times(self):
        """Sorted dates in ``[0, maturity]`` carrying a payment or a reset."""

        return np.array([self.maturity])

    def payment_times(self):
        """Sorted dates on which a cashflow is paid."""

        return np.array([self.maturity])

    def initial_fixing(self, model, n):
        return None

    def value(self, model, t, state, fixing=None):
        raise NotImplementedError

    def flows(self, model, time, state, fixing=None):
        """Net amount paid at event date `time`, zero when nothing is paid."""

        raise NotImplementedError

    def reset(self, model, time, state, fixing=None):
        """Fixing in force after the event at `time`."""

        return fixing

    def greeks(self, model, t, state):
        raise ValidationError(f"Cannot compute spot sensitivities of a {self.name}.")

    def to_dict(self):
        raise NotImplementedError


class CallCombination(Instrument):
    """Static combination of European calls on one underlier.

    Parameters
    ----------
    legs : :obj:`list` of (:obj:`float`, :obj:`float`)
        ``(quantity, strike)`` pairs; negative quantities are short positions.
    maturity : :obj:`float`
    """

    name = "call_combination"
    model_type = GbmParams
    has_sensitivities = True

    def __init__(self, legs, maturity):
        super().__init__(maturity)
        check(len(legs) > 0, "build a call combination without legs")
        for quantity, strike in legs:
            check(strike > 0, f"use strike={strike}; strikes must be positive")
            check(np.isfinite(quantity), f"use quantity={quantity}")
        self.legs = [(float(q), float(k)) for q, k in legs]

    def _tau(self, t):
        self.check_time(t)
        return max(self.maturity - t, 0.0)

    def payoff(self, spot):
        spot = np.asarray(spot, dtype=float)
        total = np.zeros_like(spot)
        for quantity, strike in self.legs:
            total = total + quantity * np.maximum(spot - strike, 0.0)
        return total

    def value(self, model, t, state, fixing=None):
        self.check_model(model)
        tau = self._tau(t)
        spot = np.asarray(state, dtype=float)

        if tau <= TIME_TOL:
            return self.payoff(spot)

        total = np.zeros_like(spot)
        for quantity, strike in self.legs:
            price = bs_price(spot, strike, model.rate_dom, model.rate_fgn, model.sigma, tau)
            total = total + quantity * price

        return total

    def flows(self, model, time, state, fixing=None):
        spot = np.asarray(state, dtype=float)
        if abs(time - self.maturity) > TIME_TOL:
            return np.zeros_like(spot)
        return self.payoff(spot)

    def greeks(self, model, t, state):
        self.check_model(model)
        check(t < self.maturity - TIME_TOL, f"compute greeks at t={t} on or after maturity")
        tau = self.maturity - t
        spot = np.asarray(state, dtype=float)

        delta_cash = np.zeros_like(spot)
        gamma_cash = np.zeros_like(spot)
        args = (model.rate_dom, model.rate_fgn, model.sigma, tau)
        for quantity, strike in self.legs:
            delta_cash = delta_cash + quantity * bs_delta(spot, strike, *args) * spot
            gamma_cash = gamma_cash + quantity * bs_gamma(spot, strike, *args) * spot**2

        if spot.ndim == 0:
            return Greeks(float(delta_cash), float(gamma_cash))
        return Greeks(delta_cash, gamma_cash)

    def to_dict(self):
        return {
            "type": self.name,
            "legs": [list(leg) for leg in self.legs],
            "maturity": self.maturity,
        }

    def __repr__(self):
        legs = " ".join(f"{q:+g}@{k:g}" for q, k in self.legs)
        return f"<{self.name} legs={legs} maturity={self.maturity:g}>"


class EuropeanCall(CallCombination):
    """A single long European call."""

    name = "european_call"

    def __init__(self, strike, maturity):
        super().__init__([(1.0, strike)], maturity)
        self.strike = float(strike)

    def to_dict(self):
        return {"type": self.name, "strike": self.strike, "maturity": self.maturity}


class FxCall(EuropeanCall):
    """European call on an FX rate, priced with the foreign rate as carry."""

    name = "fx_call"


def linear_notional_schedule(first=36.2, last=63.2, years=15):
    """Yearly notional steps growing linearly from `first` to `last`."""

    amounts = np.linspace(first, last, years)
    return [(float(year), float(amount)) for year, amount in enumerate(amounts)]


class IrSwap(Instrument):
    """Amortizing-notional swap receiving floating plus spread, paying fixed.

    The floating leg accrues simple in-arrears rates set from model zero
    bonds at the start of each period and paid at its end. Notionals follow a
    step schedule looked up at each period start.

    Parameters
    ----------
    fixed_rate : :obj:`float`
    spread : :obj:`float`
        Added to the floating rate.
    fixed_period : :obj:`float`
        Years between fixed payments.
    float_period : :obj:`float`
        Years between floating payments.
    maturity : :obj:`float`
    notional_schedule : :obj:`list` of (:obj:`float`, :obj:`float`)
        ``(year, amount)`` steps; the first step must start at 0.
    """

    name = "ir_swap"
    model_type = G1ppParams

    def __init__(
        self,
        fixed_rate=0.045,
        spread=0.009,
        fixed_period=1.0,
        float_period=0.25,
        maturity=15.0,
        notional_schedule=None,
    ):
        super().__init__(maturity)
        check(fixed_period > 0 and float_period > 0, "use non-positive swap periods")

        if notional_schedule is None:
            notional_schedule = linear_notional_schedule(years=int(round(maturity)))
        schedule = sorted((float(y), float(a)) for y, a in notional_schedule)
        check(len(schedule) > 0, "build a swap with an empty notional schedule")
        check(schedule[0][0] <= 0.0, "build a swap whose notional schedule starts after 0")

        self.fixed_rate = float(fixed_rate)
        self.spread = float(spread)
        self.fixed_period = float(fixed_period)
        self.float_period = float(float_period)
        self.notional_schedule = schedule

        self.float_dates = self._dates(float_period)
        self.fixed_dates = self._dates(fixed_period)

    def _dates(self, period):
        count = int(round(self.maturity / period))
        check(
            abs(count * period - self.maturity) < 1e-9,
            f"use period {period}; it must divide maturity {self.maturity}",
        )
        return period * np.arange(count + 1)

    def notional(self, time):
        years = [y for y, _ in self.notional_schedule]
        index = np.searchsorted(years, time + TIME_TOL, side="right") - 1
        return self.notional_schedule[max(index, 0)][1]

    def event_times(self):
        return np.union1d(self.float_dates, self.fixed_dates)

    def payment_times(self):
        return np.union1d(self.float_dates[1:], self.fixed_dates[1:])

    def _is_date(self, dates, time):
        return np.any(np.abs(dates - time) <= TIME_TOL)

    def _forward_fixing(self, model, start, state):
        end = start + self.float_period
        bond = g1pp_bond_price(model, start, end, state)
        return (1.0 / bond - 1.0) / self.float_period

    def initial_fixing(self, model, n):
        return np.full(n, self._forward_fixing(model, 0.0, 0.0))

    def value(self, model, t, state, fixing=None):
        self.check_model(model)
        self.check_time(t)
        x = np.asarray(state, dtype=float)
        total = np.zeros_like(x)

        tau = self.float_period
        for start, end in zip(self.float_dates[:-1], self.float_dates[1:]):
            if end < t - TIME_TOL:
                continue
            notional = self.notional(start)
            bond_end = g1pp_bond_price(model, t, end, x)
            if start >= t - TIME_TOL:
                bond_start = g1pp_bond_price(model, t, start, x)
                total = total + notional * (bond_start - bond_end + tau * self.spread * bond_end)
            else:
                check(fixing is not None, f"value a running floating period at t={t}")
                total = total + notional * tau * (fixing + self.spread) * bond_end

        for start, end in zip(self.fixed_dates[:-1], self.fixed_dates[1:]):
            if end < t - TIME_TOL:
                continue
            amount = self.notional(start) * self.fixed_period * self.fixed_rate
            total = total - amount * g1pp_bond_price(model, t, end, x)

        return total

    def flows(self, model, time, state, fixing=None):
        x = np.asarray(state, dtype=float)
        total = np.zeros_like(x)

        if time > TIME_TOL and self._is_date(self.float_dates, time):
            start = time - self.float_period
            total = total + self.notional(start) * self.float_period * (fixing + self.spread)

        if time > TIME_TOL and self._is_date(self.fixed_dates, time):
            start = time - self.fixed_period
            total = total - self.notional(start) * self.fixed_period * self.fixed_rate

        return total

    def reset(self, model, time, state, fixing=None):
        if time < self.maturity - TIME_TOL and self._is_date(self.float_dates, time):
            return self._forward_fixing(model, time, np.asarray(state, dtype=float))
        return fixing

    def to_dict(self):
        return {
            "type": self.name,
            "fixed_rate": self.fixed_rate,
            "spread": self.spread,
            "fixed_period": self.fixed_period,
            "float_period": self.float_period,
            "maturity": self.maturity,
            "notional_schedule": [list(step) for step in self.notional_schedule],
        }

    def __repr__(self):
        result = f"<{self.name}"
        result += f" fixed_rate={self.fixed_rate} spread={self.spread}"
        result += f" maturity={self.maturity:g}"
        result += ">"

        return result


def portfolio_value(inst, model, t, state, fixing=None):
    """Value of `inst` at time `t` given the driver state.

    The value includes every cashflow paid at or after `t`, so at maturity it
    equals the terminal payoff.
    """
    return inst.value(model, t, state, fixing)


def greeks(inst, model, t, state):
    """Cash delta and cash gamma of `inst`, see :class:`Greeks`."""

    return inst.greeks(model, t, state)


def instrument_from_dict(record):
    """Builds an instrument from its `to_dict` record."""

    record = dict(record)
    kind = record.pop("type", None)

    if kind == EuropeanCall.name:
        return EuropeanCall(**record)
    if kind == FxCall.name:
        return FxCall(**record)
    if kind == CallCombination.name:
        return CallCombination(**record)
    if kind == IrSwap.name:
        return IrSwap(**record)

    raise ValidationError(f"Cannot build an instrument of unknown type '{kind}'.")
