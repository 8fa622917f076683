"""Basis-expansion regression on a single conditioning feature."""

from dataclasses import dataclass, field, replace
import logging
import math
from typing import Optional

import numpy as np
from numpy.polynomial import laguerre, polynomial
from scipy.stats import norm

from dimsim.exceptions import ConvergenceError
from dimsim.utils.check import check, check_finite, check_probability

logger = logging.getLogger(__name__)

KINDS = ("monomial", "laguerre")
RCOND = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """Polynomial basis in a standardized feature.

    Parameters
    ----------
    kind : :obj:`str`
        ``"monomial"`` or ``"laguerre"``.
    degree : :obj:`int`
        Highest polynomial degree; 0 gives the constant basis.
    feature : :obj:`str`
        Conditioning feature, ``"X"`` or ``"V"``.
    shift : :obj:`float`, optional
    scale : :obj:`float`, optional
        The feature enters as ``(x - shift) / scale``. Left unset, both are
        taken from the training sample.
    """

    kind: str = "laguerre"
    degree: int = 3
    feature: str = "X"
    shift: Optional[float] = None
    scale: Optional[float] = None

    def __post_init__(self):
        check(self.kind in KINDS, f"use basis kind '{self.kind}'; choose monomial or laguerre")
        check(self.degree >= 0, f"use basis degree {self.degree}")
        check(self.feature in ("X", "V"), f"condition on feature '{self.feature}'")
        if self.scale is not None:
            check(self.scale > 0, f"use basis scale {self.scale}; it must be positive")

    @property
    def size(self):
        return self.degree + 1

    @property
    def is_standardized(self):
        return self.shift is not None and self.scale is not None

    def fitted_to(self, x):
        """Copy standardized to zero mean and unit variance on `x`."""

        x = np.asarray(x, dtype=float)
        sd = float(np.std(x))
        return replace(self, shift=float(np.mean(x)), scale=sd if sd > 0 else 1.0)

    def design(self, x):
        """Design matrix ``[len(x), degree + 1]``."""

        check(self.is_standardized, "evaluate a basis before standardizing it")
        u = (np.asarray(x, dtype=float) - self.shift) / self.scale

        if self.kind == "monomial":
            return polynomial.polyvander(u, self.degree)
        return laguerre.lagvander(u, self.degree)

    def to_dict(self):
        return {
            "kind": self.kind,
            "degree": self.degree,
            "feature": self.feature,
            "shift": self.shift,
            "scale": self.scale,
        }


@dataclass(frozen=True)
class LinearModel:
    """A fitted basis expansion.

    `diagnostics` holds ``residual_rms`` and ``condition`` and, for
    quantile fits, the optimizer state at exit.
    """

    basis: BasisSpec
    coeffs: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def predict(self, x):
        result = self.basis.design(np.atleast_1d(x)) @ self.coeffs
        return float(result[0]) if np.ndim(x) == 0 else result

    def to_dict(self):
        record = self.basis.to_dict()
        record["coeffs"] = [float(c) for c in self.coeffs]
        return record

    @staticmethod
    def from_dict(record):
        record = dict(record)
        coeffs = np.asarray(record.pop("coeffs"), dtype=float)
        return LinearModel(BasisSpec(**record), coeffs)

    def __repr__(self):
        basis = self.basis
        return f"<linear_model {basis.kind} degree={basis.degree} feature={basis.feature}>"


def predict(model, x):
    return model.predict(x)


def _prepare(x, y, basis):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    check(x.shape == y.shape and x.ndim == 1, "regress samples of different lengths")
    check(
        len(x) >= basis.size,
        f"fit {basis.size} coefficients to {len(x)} samples",
    )
    check_finite(x, "regress on the feature")
    check_finite(y, "regress the target")

    if not basis.is_standardized:
        basis = basis.fitted_to(x)

    return x, y, basis


def _reduced_svd(design):
    u, s, vt = np.linalg.svd(design, full_matrices=False)
    keep = s > RCOND * s[0]
    return u[:, keep], s[keep], vt[keep], s


def fit_least_squares(x, y, basis):
    """Least-squares fit of `y` on the basis expansion of `x`.

    Singular values below ``1e-12`` times the largest are truncated.

    Returns
    -------
    :obj:`LinearModel`
    """
    x, y, basis = _prepare(x, y, basis)
    design = basis.design(x)

    coeffs, _, _, singular = np.linalg.lstsq(design, y, rcond=RCOND)
    residual = y - design @ coeffs
    kept = singular[singular > RCOND * singular[0]]

    diagnostics = {
        "residual_rms": float(np.sqrt(np.mean(residual**2))),
        "condition": float(kept[0] / kept[-1]),
    }

    return LinearModel(basis, coeffs, diagnostics)


def pinball_loss(residual, alpha):
    """``alpha * r`` for ``r >= 0`` and ``(alpha - 1) * r`` otherwise."""

    check_probability(alpha)
    residual = np.asarray(residual, dtype=float)
    result = np.where(residual >= 0, alpha * residual, (alpha - 1.0) * residual)
    return float(result) if result.ndim == 0 else result


def _smoothed_loss(residual, alpha, width):
    inside = np.abs(residual) <= width
    kink = np.where(inside, residual**2 / (2.0 * width) + 0.5 * width, np.abs(residual))
    return float(np.mean((alpha - 0.5) * residual + 0.5 * kink))


def _smoothed_slope(residual, alpha, width):
    return (alpha - 0.5) + 0.5 * np.clip(residual / width, -1.0, 1.0)


def _iqr(values):
    q75, q25 = np.quantile(values, [0.75, 0.25])
    return float(q75 - q25)


def fit_quantile(x, y, basis, alpha, smoothing=None, steps=5000, learn_rate=0.5):
    """Conditional `alpha`-quantile by smoothed pinball-loss minimization.

    The kink of the pinball loss is replaced by a quadratic of half-width
    `smoothing`. Full-batch gradient descent runs in orthonormalized basis
    coordinates, starting from the least-squares fit shifted to the
    `alpha`-quantile of its residuals, with step ``learn_rate / sqrt(k)``
    scaled by the inverse residual density at the quantile. Steps that raise
    the loss are halved.

    Parameters
    ----------
    smoothing : :obj:`float`, optional
        Defaults to ``1e-3`` times the interquartile range of `y`.
    steps : :obj:`int`
    learn_rate : :obj:`float`

    Raises
    ------
    ConvergenceError
        If the loss increases on 10 consecutive accepted steps.
    """
    check_probability(alpha)
    x, y, basis = _prepare(x, y, basis)
    n = len(y)

    u, s, vt, singular = _reduced_svd(basis.design(x))
    frame = math.sqrt(n) * u

    theta = frame.T @ y / n
    residual = y - frame @ theta
    shift = float(np.quantile(residual, alpha))
    constant = frame.T @ np.ones(n) / n
    theta = theta + shift * constant

    width = smoothing if smoothing is not None else 1e-3 * _iqr(y)
    width = max(width, 1e-12 * max(1.0, float(np.max(np.abs(y)))))

    bandwidth = 0.25 * _iqr(residual)
    if not bandwidth > 0:
        bandwidth = max(float(np.std(residual)), width)
    density = float(np.mean(norm.pdf((residual - shift) / bandwidth))) / bandwidth
    precondition = 1.0 / max(density, 1e-12)

    residual = y - frame @ theta
    loss = _smoothed_loss(residual, alpha, width)
    grad = -frame.T @ _smoothed_slope(residual, alpha, width) / n
    increases = 0
    iteration = 0

    for iteration in range(1, steps + 1):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < 1e-8:
            break

        step = learn_rate / math.sqrt(iteration) * precondition
        for _ in range(30):
            trial = theta - step * grad
            trial_residual = y - frame @ trial
            trial_loss = _smoothed_loss(trial_residual, alpha, width)
            if trial_loss <= loss:
                break
            step *= 0.5

        if trial_loss > loss and trial_loss - loss <= 1e-12 * max(1.0, abs(loss)):
            # no descent left above rounding
            break
        increases = increases + 1 if trial_loss > loss else 0
        if increases >= 10:
            raise ConvergenceError(
                f"Cannot minimize the pinball loss for alpha={alpha}: "
                "the loss increased on 10 consecutive steps.",
                {"iterations": iteration, "loss": trial_loss, "grad_norm": grad_norm},
            )

        theta, residual, loss = trial, trial_residual, trial_loss
        grad = -frame.T @ _smoothed_slope(residual, alpha, width) / n

    coeffs = vt.T @ (theta * math.sqrt(n) / s)
    diagnostics = {
        "residual_rms": float(np.sqrt(np.mean(residual**2))),
        "condition": float(singular[0] / s[-1]),
        "iterations": iteration,
        "loss": loss,
        "grad_norm": float(np.linalg.norm(grad)),
    }
    logger.debug("quantile fit alpha=%g stopped after %d steps", alpha, iteration)

    return LinearModel(basis, coeffs, diagnostics)
