import numpy as np

from dimsim.exceptions import ValidationError


def check(condition, message, error=ValidationError):
    """Raises `error` with an explanatory message if `condition` is false.

    Every precondition of the public operations goes through this helper so
    that failures always name what was being attempted, e.g.
    ``check(tau >= 0, "price a call with negative time to expiry")`` raises
    ``ValidationError("Cannot price a call with negative time to expiry.")``.
    """
    if condition:
        return

    raise error("Cannot " + message + ".")


def check_finite(values, message):
    """Raises ValidationError if any entry of `values` is NaN or infinite."""

    check(np.all(np.isfinite(values)), message + " (non-finite input)")


def check_probability(alpha, name="alpha"):
    check(0.0 < alpha < 1.0, f"use {name}={alpha}; it must lie strictly between 0 and 1")
