"""The Johnson system of distributions.

A Johnson variate is a monotone transform of a standard normal ``Z``:

- ``SN``: ``x = xi + lam * (Z - gamma) / delta``
- ``SL``: ``x = xi + lam * exp((lam * Z - gamma) / delta)`` with ``lam = +-1``
- ``SU``: ``x = xi + lam * sinh((Z - gamma) / delta)``
- ``SB``: ``x = xi + lam / (1 + exp(-(Z - gamma) / delta))``

Parameters are fitted either from the first four moments or from four
sample percentiles. The module also carries the Cornish-Fisher quantile
expansion used by the delta-gamma estimators.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import expit
from scipy.stats import norm

from dimsim.exceptions import DegenerateDistributionError, NoFitError, ValidationError
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)

FAMILIES = ("SN", "SL", "SU", "SB")

SN_BETA1_TOL = 1e-8
SN_BETA2_TOL = 1e-6
SL_BAND = 1e-3
BOUNDARY_MARGIN = 1e-4
DEFAULT_Z = 0.524

_NODES, _WEIGHTS = hermegauss(160)
_WEIGHTS = _WEIGHTS / math.sqrt(2.0 * math.pi)

# Gauss-Legendre rule on w in (0, _SB_TAIL] for steep SB laws
_SB_TAIL = 40.0
_SB_STEEP = 1.0
_LEG_NODES, _LEG_WEIGHTS = leggauss(128)
_W = 0.5 * _SB_TAIL * (_LEG_NODES + 1.0)
_W_WEIGHTS = 0.5 * _SB_TAIL * _LEG_WEIGHTS


@dataclass(frozen=True)
class JohnsonParams:
    """A fitted Johnson distribution.

    Parameters
    ----------
    family : :obj:`str`
        One of ``"SN"``, ``"SL"``, ``"SU"``, ``"SB"``.
    gamma : :obj:`float`
    delta : :obj:`float`
        Positive shape.
    xi : :obj:`float`
        Location.
    lam : :obj:`float`
        Scale. For SL it is the orientation ``+1`` or ``-1``; for SN it is
        the standard deviation with ``delta = 1`` and ``gamma = -mean / sd``.
    """

    family: str
    gamma: float
    delta: float
    xi: float
    lam: float

    def __post_init__(self):
        check(self.family in FAMILIES, f"use Johnson family '{self.family}'")
        check(self.delta > 0, f"use delta={self.delta}; it must be positive")
        if self.family == "SL":
            check(abs(self.lam) == 1.0, f"use lam={self.lam} for SL; it must be +1 or -1")
        else:
            check(self.lam > 0, f"use lam={self.lam}; it must be positive")

    def transform(self, z):
        """Maps standard normal values to the distribution's values."""

        z = np.asarray(z, dtype=float)
        u = (z - self.gamma) / self.delta

        if self.family == "SN":
            return self.xi + self.lam * u
        if self.family == "SL":
            with np.errstate(over="ignore"):
                return self.xi + self.lam * np.exp((self.lam * z - self.gamma) / self.delta)
        if self.family == "SU":
            with np.errstate(over="ignore"):
                return self.xi + self.lam * np.sinh(u)
        return self.xi + self.lam * expit(u)

    def normal_score(self, x):
        """Inverse of :meth:`transform`; NaN outside the support."""

        x = np.asarray(x, dtype=float)
        y = (x - self.xi) / self.lam

        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "SN":
                return self.gamma + self.delta * y
            if self.family == "SL":
                score = self.gamma + self.delta * np.log(np.where(y > 0, y, np.nan))
                return self.lam * score
            if self.family == "SU":
                return self.gamma + self.delta * np.arcsinh(y)
            inside = (y > 0) & (y < 1)
            y = np.where(inside, y, np.nan)
            return self.gamma + self.delta * np.log(y / (1.0 - y))

    def quantile(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        check(np.all((alpha > 0) & (alpha < 1)), "take a Johnson quantile outside (0, 1)")

        result = self.transform(norm.ppf(alpha))
        return float(result) if result.ndim == 0 else result

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        score = self.normal_score(x)
        y = (x - self.xi) / self.lam

        below = np.zeros_like(x)
        if self.family == "SL":
            below = np.where(y <= 0, 0.0 if self.lam > 0 else 1.0, below)
        elif self.family == "SB":
            below = np.where(y >= 1, 1.0, below)

        result = np.where(np.isnan(score), below, norm.cdf(np.nan_to_num(score)))
        return float(result) if result.ndim == 0 else result

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        y = (x - self.xi) / self.lam
        score = self.normal_score(x)

        with np.errstate(divide="ignore", invalid="ignore"):
            if self.family == "SN":
                jacobian = np.full_like(x, self.delta / self.lam)
            elif self.family == "SL":
                jacobian = self.delta / np.abs(x - self.xi)
            elif self.family == "SU":
                jacobian = self.delta / (self.lam * np.sqrt(1.0 + y**2))
            else:
                jacobian = self.delta / (self.lam * y * (1.0 - y))

            result = np.where(np.isnan(score), 0.0, jacobian * norm.pdf(np.nan_to_num(score)))

        return float(result) if result.ndim == 0 else result

    def moments(self):
        """First four moments by quadrature over the normal variate.

        Returns
        -------
        :obj:`MomentSet`
        """
        if self.family == "SB":
            mean, cm2, cm3, cm4 = (float(m) for m in _sb_central(self.gamma, self.delta))
            lam = self.lam
            return MomentSet.from_central(
                self.xi + lam * mean, lam**2 * cm2, lam**3 * cm3, lam**4 * cm4
            )

        values = self.transform(_NODES)
        with np.errstate(over="ignore", invalid="ignore"):
            mean = float(np.dot(_WEIGHTS, values))
            centered = values - mean
            cm2 = float(np.dot(_WEIGHTS, centered**2))
            cm3 = float(np.dot(_WEIGHTS, centered**3))
            cm4 = float(np.dot(_WEIGHTS, centered**4))

        return MomentSet.from_central(mean, cm2, cm3, cm4)

    def to_dict(self):
        return {
            "family": self.family,
            "gamma": self.gamma,
            "delta": self.delta,
            "xi": self.xi,
            "lambda": self.lam,
        }

    @staticmethod
    def from_dict(record):
        return JohnsonParams(
            family=record["family"],
            gamma=float(record["gamma"]),
            delta=float(record["delta"]),
            xi=float(record["xi"]),
            lam=float(record["lambda"]),
        )

    def __repr__(self):
        result = f"<johnson {self.family}"
        result += f" gamma={self.gamma:.6g} delta={self.delta:.6g}"
        result += f" xi={self.xi:.6g} lambda={self.lam:.6g}"
        result += ">"

        return result


def normal_params(mean, sd):
    """The SN member with the given mean and standard deviation."""

    if not sd > 0:
        raise DegenerateDistributionError(f"Cannot build a normal law with sd={sd}.")
    return JohnsonParams("SN", gamma=-mean / sd, delta=1.0, xi=0.0, lam=sd)


@dataclass(frozen=True)
class MomentSet:
    """Raw and central moments with the derived shape coefficients.

    ``beta1 = cm3**2 / cm2**3`` is the squared skewness and
    ``beta2 = cm4 / cm2**2`` the (raw) kurtosis.
    """

    r1: float
    r2: float
    r3: float
    r4: float
    cm2: float
    cm3: float
    cm4: float
    beta1: float
    beta2: float
    skew_sign: int

    @property
    def mean(self):
        return self.r1

    @property
    def sd(self):
        return math.sqrt(self.cm2)

    @staticmethod
    def from_central(mean, cm2, cm3, cm4):
        if not cm2 > 0:
            raise DegenerateDistributionError(f"Cannot derive shape from variance {cm2}.")

        r2 = cm2 + mean**2
        r3 = cm3 + 3.0 * mean * cm2 + mean**3
        r4 = cm4 + 4.0 * mean * cm3 + 6.0 * mean**2 * cm2 + mean**4

        return MomentSet(
            r1=mean,
            r2=r2,
            r3=r3,
            r4=r4,
            cm2=cm2,
            cm3=cm3,
            cm4=cm4,
            beta1=cm3**2 / cm2**3,
            beta2=cm4 / cm2**2,
            skew_sign=1 if cm3 >= 0 else -1,
        )


def central_from_raw(r1, r2, r3, r4):
    """Central moments and shape coefficients from raw moments.

    Raises
    ------
    DegenerateDistributionError
        If the variance does not exceed ``1e-14`` times the second raw
        moment, i.e. it is lost to cancellation.
    """
    values = [r1, r2, r3, r4]
    check(all(np.isfinite(values)), "derive central moments from non-finite raw moments")

    cm2 = r2 - r1**2
    cm3 = r3 - 3.0 * r1 * r2 + 2.0 * r1**3
    cm4 = r4 - 4.0 * r1 * r3 + 6.0 * r1**2 * r2 - 3.0 * r1**4

    floor = 1e-14 * max(abs(r2), np.finfo(float).tiny)
    if cm2 <= floor:
        raise DegenerateDistributionError(f"Cannot derive shape from variance {cm2:.3g}.")

    return MomentSet(
        r1=float(r1),
        r2=float(r2),
        r3=float(r3),
        r4=float(r4),
        cm2=float(cm2),
        cm3=float(cm3),
        cm4=float(cm4),
        beta1=float(cm3**2 / cm2**3),
        beta2=float(cm4 / cm2**2),
        skew_sign=1 if cm3 >= 0 else -1,
    )


def validate_beta(beta1, beta2):
    """True if ``(beta1, beta2)`` satisfies ``beta2 >= beta1 + 1``."""

    check(beta1 >= 0, f"use beta1={beta1}; it must not be negative")
    return bool(beta2 >= beta1 + 1.0)


def project_beta(beta1, beta2):
    """Orthogonal projection of an infeasible pair onto ``beta2 = beta1 + 1``.

    Feasible pairs are returned unchanged; the projection is clamped to
    ``beta1 >= 0``.
    """
    if validate_beta(beta1, beta2):
        return beta1, beta2

    projected = max(0.5 * (beta1 + beta2 - 1.0), 0.0)
    return projected, projected + 1.0


def _lognormal_omega(beta1):
    """``omega = exp(sigma**2)`` of the lognormal law with squared skewness `beta1`."""

    s = 0.5 * beta1 + math.sqrt(beta1 + 0.25 * beta1**2)
    u_minus_1 = math.expm1(math.log1p(s) / 3.0)
    u = 1.0 + u_minus_1
    return 1.0 + u_minus_1**2 / u


def beta2_lognormal(beta1):
    """Kurtosis of the lognormal law with squared skewness `beta1`."""

    w = _lognormal_omega(beta1)
    return w**4 + 2.0 * w**3 + 3.0 * w**2 - 3.0


def select_family(beta1, beta2, sl_band=SL_BAND):
    if beta1 < SN_BETA1_TOL and abs(beta2 - 3.0) < SN_BETA2_TOL:
        return "SN"

    line = beta2_lognormal(beta1)
    if abs(beta2 - line) < sl_band:
        return "SN" if beta1 < SN_BETA1_TOL else "SL"
    if beta2 > line:
        return "SU"
    return "SB"


def _fit_sl(moments):
    w = _lognormal_omega(moments.beta1)
    orientation = float(moments.skew_sign)
    delta = 1.0 / math.sqrt(math.log(w))
    gamma = 0.5 * delta * math.log(w * (w - 1.0) / moments.cm2)
    xi = moments.mean - orientation * moments.sd / math.sqrt(w - 1.0)

    return JohnsonParams("SL", gamma=gamma, delta=delta, xi=xi, lam=orientation)


def _su_cosh(w, beta2):
    """``cosh(2 Omega)`` on the SU curve of kurtosis `beta2` at ``omega = w``."""

    big = w**2 * (w**4 + 2.0 * w**3 + 3.0 * w**2 - 3.0)
    a = 2.0 * (big - beta2 * w**2)
    b = 4.0 * w**2 * (w + 2.0) - 4.0 * beta2 * w
    c = 3.0 * (2.0 * w + 1.0) - big - 2.0 * beta2

    if a <= 1e-300:
        return math.inf
    disc = max(b * b - 4.0 * a * c, 0.0)
    return max((-b + math.sqrt(disc)) / (2.0 * a), 1.0)


def _su_beta1(w, cosh2):
    if math.isinf(cosh2):
        return (w - 1.0) * (w + 2.0) ** 2
    bracket = w * (w + 2.0) * (2.0 * cosh2 + 1.0) + 3.0
    return w * (w - 1.0) * (cosh2 - 1.0) * bracket**2 / (4.0 * (w * cosh2 + 1.0) ** 3)


def _fit_su(moments, tol):
    beta1, beta2 = moments.beta1, moments.beta2
    w_sym = math.sqrt(math.sqrt(2.0 * beta2 - 2.0) - 1.0)

    if beta1 < SN_BETA1_TOL:
        w, cosh2 = w_sym, 1.0
    else:
        w_low = brentq(
            lambda w: w**4 + 2.0 * w**3 + 3.0 * w**2 - 3.0 - beta2, 1.0, w_sym, xtol=1e-15
        )

        def excess(w):
            return _su_beta1(w, _su_cosh(w, beta2)) - beta1

        if excess(w_sym) > 0 or excess(w_low) < 0:
            raise NoFitError(f"Cannot bracket the SU curve for beta1={beta1}, beta2={beta2}.")
        w = brentq(excess, w_low, w_sym, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        cosh2 = _su_cosh(w, beta2)

    if math.isinf(cosh2):
        raise NoFitError(f"Cannot fit SU on the lognormal line at beta1={beta1}.")

    omega = 0.5 * math.acosh(cosh2) * moments.skew_sign
    delta = 1.0 / math.sqrt(math.log(w))
    gamma = -omega * delta
    lam = moments.sd / math.sqrt(0.5 * (w - 1.0) * (w * cosh2 + 1.0))
    xi = moments.mean - lam * math.sqrt(w) * math.sinh(omega)

    fitted = JohnsonParams("SU", gamma=gamma, delta=delta, xi=xi, lam=lam)
    logger.debug("fitted %r to beta1=%.6g beta2=%.6g", fitted, beta1, beta2)
    return fitted


def _sb_central_smooth(gamma, delta):
    y = expit((_NODES - gamma) / delta)
    mean = y @ _WEIGHTS
    centered = y - mean[..., None]
    return (mean, *((centered**k) @ _WEIGHTS for k in (2, 3, 4)))


def _sb_central_steep(gamma, delta):
    """Moments in ``w = (z - gamma) / delta``, split at ``w = 0``.

    Each side is integrated relative to its limit, ``y = 1`` above and
    ``y = 0`` below, whose mass the normal tails carry exactly.
    """
    above = norm.sf(gamma[..., 0])
    below = norm.cdf(gamma[..., 0])
    upper = expit(_W)
    lower = expit(-_W)
    weight_up = norm.pdf(gamma + delta * _W) * delta * _W_WEIGHTS
    weight_lo = norm.pdf(gamma - delta * _W) * delta * _W_WEIGHTS

    mean = above + np.sum(lower * weight_lo + (upper - 1.0) * weight_up, axis=-1)
    m = mean[..., None]

    def central(k):
        one, zero = (1.0 - m) ** k, (-m) ** k
        result = np.sum(
            ((lower - m) ** k - zero) * weight_lo + ((upper - m) ** k - one) * weight_up, axis=-1
        )
        return one[..., 0] * above + zero[..., 0] * below + result

    return (mean, *(central(k) for k in (2, 3, 4)))


def _sb_central(gamma, delta):
    """Mean and central moments 2 to 4 of the standard SB law ``expit((Z - gamma) / delta)``."""

    gamma = np.asarray(gamma, dtype=float)[..., None]
    delta = np.asarray(delta, dtype=float)[..., None]
    steep = delta[..., 0] <= _SB_STEEP

    smooth = _sb_central_smooth(gamma, delta)
    sharp = _sb_central_steep(gamma, delta)
    return tuple(np.where(steep, b, a) for a, b in zip(smooth, sharp))


def _sb_shape(gamma, delta):
    """Skewness and kurtosis of the standard SB law with shape ``(gamma, delta)``."""

    _, cm2, cm3, cm4 = _sb_central(gamma, delta)

    with np.errstate(divide="ignore", invalid="ignore"):
        return cm3 / cm2**1.5, cm4 / cm2**2


def _fit_sb(moments, tol, max_iter):
    skew, beta2 = math.sqrt(moments.beta1), moments.beta2

    grid_gamma, grid_log_delta = np.meshgrid(
        np.linspace(0.0, 8.0, 33), np.linspace(math.log(0.05), math.log(20.0), 40)
    )
    grid_skew, grid_beta2 = _sb_shape(grid_gamma, np.exp(grid_log_delta))
    miss = np.abs(grid_skew - skew) + np.abs(grid_beta2 - beta2)
    start = np.unravel_index(np.nanargmin(miss), miss.shape)
    point = np.array([grid_gamma[start], grid_log_delta[start]])

    def residual(p):
        # outside this box the quadrature no longer resolves the shape
        if not (abs(p[0]) < 50.0 and -20.0 < p[1] < 10.0):
            return np.full(2, np.inf)
        s, b = _sb_shape(p[0], math.exp(p[1]))
        return np.array([float(s) - skew, float(b) - beta2])

    current = residual(point)
    step_size = 1e-6

    for iteration in range(max_iter):
        if np.max(np.abs(current)) < tol:
            break

        jacobian = np.empty((2, 2))
        with np.errstate(invalid="ignore"):
            for k in range(2):
                shift = np.zeros(2)
                shift[k] = step_size
                jacobian[:, k] = (residual(point + shift) - residual(point - shift)) / (
                    2 * step_size
                )
        if not np.all(np.isfinite(jacobian)):
            raise NoFitError(f"Cannot fit SB: the shape left the fitting box at {point}.")

        try:
            step = np.linalg.solve(jacobian, -current)
        except np.linalg.LinAlgError as e:
            raise NoFitError(f"Cannot fit SB: singular Jacobian at {point}.") from e

        damping = 1.0
        while damping > 1e-8:
            trial = point + damping * step
            trial_residual = residual(trial)
            if np.all(np.isfinite(trial_residual)) and np.linalg.norm(
                trial_residual
            ) < np.linalg.norm(current):
                break
            damping *= 0.5
        else:
            raise NoFitError(f"Cannot fit SB: Newton stalled after {iteration} iterations.")

        point, current = trial, trial_residual
    else:
        if np.max(np.abs(current)) >= tol:
            raise NoFitError(f"Cannot fit SB within {max_iter} iterations.")

    gamma = point[0] * moments.skew_sign
    delta = math.exp(point[1])

    standard = JohnsonParams("SB", gamma=gamma, delta=delta, xi=0.0, lam=1.0).moments()
    lam = moments.sd / standard.sd
    xi = moments.mean - lam * standard.mean

    return JohnsonParams("SB", gamma=gamma, delta=delta, xi=xi, lam=lam)


def fit_moments(
    moments, tol=1e-10, max_iter=200, sl_band=SL_BAND, boundary_margin=BOUNDARY_MARGIN
):
    """Johnson distribution matching the first four moments.

    Parameters
    ----------
    moments : :obj:`MomentSet`
        Must satisfy ``beta2 >= beta1 + 1``; pairs closer than
        `boundary_margin` to that boundary are fitted at
        ``beta2 = beta1 + 1 + boundary_margin``.
    tol : :obj:`float`
        Residual tolerance of the SB Newton iteration.
    max_iter : :obj:`int`
    sl_band : :obj:`float`
        Half-width of the kurtosis band around the lognormal line fitted by SL.

    Raises
    ------
    NoFitError
        If the iterative fit does not converge; callers usually fall back to
        :func:`normal_params`.
    """
    # rounding of a projected pair may leave it a few ulps below the boundary
    slack = 1e-9 * (1.0 + moments.beta1)
    if not validate_beta(moments.beta1, moments.beta2 + slack):
        raise ValidationError(
            f"Cannot fit a Johnson law to beta1={moments.beta1:.6g}, "
            f"beta2={moments.beta2:.6g}; project the pair first."
        )

    if moments.beta2 < moments.beta1 + 1.0 + boundary_margin:
        moments = MomentSet.from_central(
            moments.mean,
            moments.cm2,
            moments.skew_sign * math.sqrt(moments.beta1) * moments.cm2**1.5,
            (moments.beta1 + 1.0 + boundary_margin) * moments.cm2**2,
        )

    family = select_family(moments.beta1, moments.beta2, sl_band)

    if family == "SN":
        return normal_params(moments.mean, moments.sd)
    if family == "SL":
        return _fit_sl(moments)
    if family == "SU":
        return _fit_su(moments, tol)
    return _fit_sb(moments, tol, max_iter)


def fit_corrected(moments, correction="project", counts=None):
    """Johnson law of `moments`, repairing infeasible skew-kurtosis pairs.

    Parameters
    ----------
    moments : :obj:`MomentSet`
    correction : :obj:`str`
        For pairs with ``beta2 < beta1 + 1``: ``"project"`` fits the law of
        the projected pair, ``"normal_fallback"`` returns the normal law with
        the same mean and variance, ``"discard"`` returns None.
    counts : :obj:`dict`, optional
        Tallies ``invalid``, ``corrected``, ``normal_fallback``,
        ``discarded`` and ``no_fit`` are incremented in place.

    Returns
    -------
    :obj:`JohnsonParams` or None
        A :class:`NoFitError` yields the normal law.
    """
    check(
        correction in ("project", "normal_fallback", "discard"),
        f"use correction '{correction}'; choose project, normal_fallback or discard",
    )
    if counts is None:
        counts = {}

    def tally(key):
        counts[key] = counts.get(key, 0) + 1

    if not validate_beta(moments.beta1, moments.beta2):
        tally("invalid")

        if correction == "discard":
            tally("discarded")
            return None
        if correction == "normal_fallback":
            tally("normal_fallback")
            return normal_params(moments.mean, moments.sd)

        beta1, beta2 = project_beta(moments.beta1, moments.beta2)
        moments = MomentSet.from_central(
            moments.mean,
            moments.cm2,
            moments.skew_sign * math.sqrt(beta1) * moments.cm2**1.5,
            beta2 * moments.cm2**2,
        )
        tally("corrected")

    try:
        return fit_moments(moments)
    except NoFitError as e:
        tally("no_fit")
        logger.warning("%s; using the normal law", e)
        return normal_params(moments.mean, moments.sd)


@dataclass(frozen=True)
class PercentileSpread:
    """Four symmetric normal-score percentiles of a sample.

    ``p = xz - xmz``, ``m = x3z - xz``, ``n = xmz - xm3z`` and the
    discriminant ``d = m n / p**2`` selects the family.
    """

    z: float
    x3z: float
    xz: float
    xmz: float
    xm3z: float

    @property
    def p(self):
        return self.xz - self.xmz

    @property
    def m(self):
        return self.x3z - self.xz

    @property
    def n(self):
        return self.xmz - self.xm3z

    @property
    def d(self):
        return self.m * self.n / self.p**2

    @property
    def mid(self):
        return 0.5 * (self.xz + self.xmz)

    @staticmethod
    def from_quantiles(quantile, z=DEFAULT_Z):
        """Builds the spread from a quantile accessor ``quantile(prob)``."""

        probs = norm.cdf([3.0 * z, z, -z, -3.0 * z])
        x3z, xz, xmz, xm3z = (float(quantile(prob)) for prob in probs)
        return PercentileSpread(z, x3z, xz, xmz, xm3z)


def _percentile_su(spread):
    p, m, n, z = spread.p, spread.m, spread.n, spread.z
    a = 0.5 * math.acosh(0.5 * (m + n) / p)
    b = math.asinh((n - m) / (2.0 * math.sqrt(m * n - p * p)))
    lam = p / (2.0 * math.sinh(a) * math.cosh(b))
    xi = spread.mid + lam * math.cosh(a) * math.sinh(b)
    delta = z / a

    return JohnsonParams("SU", gamma=delta * b, delta=delta, xi=xi, lam=lam)


def _percentile_sb(spread):
    p, m, n, z = spread.p, spread.m, spread.n, spread.z
    a = math.acosh(0.5 * math.sqrt((1.0 + p / m) * (1.0 + p / n)))
    h = 0.5 * a
    ratio = p * p / (m * n)
    cosh2c = max((math.cosh(6.0 * h) - ratio * math.cosh(2.0 * h)) / (ratio - 1.0), 1.0)
    c = 0.5 * math.acosh(cosh2c) * math.copysign(1.0, p / n - p / m)

    denominator = math.cosh(2.0 * h) + cosh2c
    lam = p * denominator / math.sinh(2.0 * h)
    xi = spread.mid - 0.5 * lam + 0.5 * lam * math.sinh(2.0 * c) / denominator
    delta = z / a

    return JohnsonParams("SB", gamma=delta * 2.0 * c, delta=delta, xi=xi, lam=lam)


def _percentile_sl(spread):
    p, m, n, z = spread.p, spread.m, spread.n, spread.z

    if abs(m - n) <= 1e-9 * p:
        return normal_params(spread.mid, p / (2.0 * z))

    orientation = 1.0 if m > n else -1.0
    a = 0.25 * abs(math.log(m / n))
    scale = p / (2.0 * math.sinh(a))
    delta = z / a
    xi = spread.mid - orientation * scale * math.cosh(a)

    return JohnsonParams("SL", gamma=-delta * math.log(scale), delta=delta, xi=xi, lam=orientation)


def fit_percentiles(data, z=DEFAULT_Z):
    """Johnson distribution through four sample percentiles.

    Parameters
    ----------
    data : :obj:`numpy.ndarray` or callable
        Samples (type-7 quantiles are taken) or a quantile accessor
        ``quantile(prob)``.
    z : :obj:`float`
        Normal score spacing; the percentiles sit at ``Phi(+-z)`` and
        ``Phi(+-3z)``.

    Raises
    ------
    DegenerateDistributionError
        If the sample does not spread over the four percentiles.
    """
    check(z > 0, f"use z={z}; it must be positive")

    if callable(data):
        spread = PercentileSpread.from_quantiles(data, z)
    else:
        samples = np.asarray(data, dtype=float)
        check(len(np.unique(samples)) >= 4, "fit percentiles to fewer than 4 distinct values")
        spread = PercentileSpread.from_quantiles(
            lambda prob: np.quantile(samples, prob, method="linear"), z
        )

    if not (spread.p > 0 and spread.m > 0 and spread.n > 0):
        raise DegenerateDistributionError(
            f"Cannot fit percentiles with p={spread.p:.3g}, m={spread.m:.3g}, n={spread.n:.3g}."
        )

    d = spread.d
    if d > 1.001:
        return _percentile_su(spread)
    if d < 0.999:
        return _percentile_sb(spread)
    return _percentile_sl(spread)


def johnson_quantile(params, alpha):
    check_probability(alpha)
    return params.quantile(alpha)


def johnson_pdf(params, x):
    return params.pdf(x)


def cornish_fisher_quantile(k3, k4, k5, alpha):
    """Standardized quantile from the Cornish-Fisher expansion.

    Parameters
    ----------
    k3 : :obj:`float`
        Skewness.
    k4 : :obj:`float`
        Kurtosis term, excess kurtosis in the usual convention.
    k5 : :obj:`float`
        Standardized fifth central moment.
    alpha : :obj:`float`
    """
    check_probability(alpha)
    z = norm.ppf(alpha)

    return (
        z
        + k3 * (z**2 - 1.0) / 6.0
        + k4 * (z**3 - 3.0 * z) / 24.0
        - k3**2 * (2.0 * z**3 - 5.0 * z) / 36.0
        + k5 * (z**4 - 6.0 * z**2 + 3.0) / 120.0
        - k3 * k4 * (z**4 - 5.0 * z**2 + 2.0) / 24.0
        + k3**3 * (12.0 * z**4 - 53.0 * z**2 + 17.0) / 324.0
    )
