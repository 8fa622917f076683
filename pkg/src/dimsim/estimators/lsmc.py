"""Least-squares Monte Carlo estimators: Gaussian (GLSMC) and Johnson (JLSMC).

Both regress powers of the value change on a basis in the conditioning
feature. GLSMC turns the first two conditional moments into a normal
quantile on every path; JLSMC fits a Johnson law to the first four at a
grid of feature values and interpolates the quantile back to the paths.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy.stats import norm

from dimsim.estimators.method_spec import (
    CORRECTIONS,
    Glsmc,
    ImCross,
    Jlsmc,
    im_from_quantile,
)
from dimsim.estimators.nested_mc import inner_map
from dimsim.exceptions import DegenerateDistributionError, EstimationError
from dimsim.johnson import central_from_raw, fit_corrected
from dimsim.regression import fit_least_squares
from dimsim.utils import rng
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)

FLOOR_WARNING_SHARE = 0.01


@dataclass(frozen=True)
class EvalGrid:
    """Feature values at which grid-evaluated methods fit a distribution.

    Parameters
    ----------
    points : :obj:`numpy.ndarray`
        Ascending, distinct feature values.
    probs : :obj:`numpy.ndarray`
        Cross-section probability level of each point.
    """

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        check(len(self.points) == len(self.probs), "pair grid points with probabilities")
        check(np.all(np.diff(self.points) > 0), "use a grid that is not strictly ascending")
        check(
            np.all((self.probs > 0) & (self.probs < 1)),
            "use grid probabilities outside (0, 1)",
        )

    def __len__(self):
        return len(self.points)


def eval_grid(feature, n=200, low=0.0025, high=0.9975):
    """Feature quantiles at `n` equally spaced probabilities in ``[low, high]``.

    Tied quantiles collapse to one point, so the grid may be shorter than `n`.
    """
    check(n >= 2, f"build an evaluation grid with n={n} points")
    check(0 < low < high < 1, f"build an evaluation grid on [{low}, {high}]")

    probs = np.linspace(low, high, n)
    points = np.quantile(np.asarray(feature, dtype=float), probs, method="linear")
    points, first = np.unique(points, return_index=True)

    return EvalGrid(points=points, probs=probs[first])


def glsmc(cross, basis, alpha, var_floor=1e-12):
    """Gaussian least-squares Monte Carlo.

    Regresses ``dv`` and ``dv**2`` on the basis and takes
    ``q = r1 + z_alpha * sqrt(max(r2 - r1**2, floor))`` per path, where the
    floor is `var_floor` times the unconditional variance of ``dv``.

    Parameters
    ----------
    cross : :obj:`dimsim.simulation.DeltaVCross`
    basis : :obj:`dimsim.regression.BasisSpec`
    alpha : :obj:`float`
    var_floor : :obj:`float`

    Returns
    -------
    :obj:`ImCross`
    """
    check_probability(alpha)
    check(cross.n_outer > 0, "regress on an empty cross-section")

    feature = cross.feature(basis.feature)
    first = fit_least_squares(feature, cross.dv, basis)
    second = fit_least_squares(feature, cross.dv**2, first.basis)

    r1 = first.predict(feature)
    variance = second.predict(feature) - r1**2
    floor = var_floor * max(float(np.var(cross.dv)), np.finfo(float).tiny)

    floored = int(np.count_nonzero(variance < floor))
    if floored > FLOOR_WARNING_SHARE * cross.n_outer:
        logger.warning(
            "glsmc at t=%.6g: variance floored on %d of %d paths",
            cross.t,
            floored,
            cross.n_outer,
        )

    quantile = r1 + norm.ppf(alpha) * np.sqrt(np.maximum(variance, floor))

    return ImCross(
        t_index=cross.t_index,
        t=cross.t,
        per_path_im=im_from_quantile(quantile),
        method=Glsmc(basis=basis, var_floor=var_floor),
        quantile=quantile,
        diagnostics={"floored": floored},
    )


def _moment_targets(cross, center, scale, moment_source, outer, rule, n_inner, seed):
    """Regression targets ``E[u**k]``, ``k = 1..4``, of ``u = (dv - center) / scale``."""

    if moment_source == "single":
        u = (cross.dv - center) / scale
        return np.stack([u**k for k in range(1, 5)], axis=1)

    check(outer is not None, "average inner moments without the outer path set")

    def reduce(block):
        u = (block - center) / scale
        return np.stack([np.mean(u**k, axis=1) for k in range(1, 5)], axis=1)

    return inner_map(outer, cross.t_index, cross.delta, rule, n_inner, reduce, seed, rng.AUGMENT)


def _grid_law(raw, correction, counts):
    """Johnson law of one grid point, or None if the point is dropped."""

    try:
        moments = central_from_raw(*raw)
    except DegenerateDistributionError:
        counts["degenerate"] += 1
        return None

    return fit_corrected(moments, correction, counts)


def jlsmc(
    cross,
    basis,
    alpha,
    grid=None,
    correction="project",
    moment_source="single",
    outer=None,
    rule="full",
    n_inner=0,
    seed=None,
    eval_points=200,
):
    """Johnson least-squares Monte Carlo.

    The value change is standardized to ``u = (dv - c) / s`` with the
    cross-section mean and standard deviation, and ``u**k`` for
    ``k = 1..4`` is regressed on the basis. At every grid point the
    regressed raw moments are turned into central moments; infeasible
    skew-kurtosis pairs (``beta2 < beta1 + 1``) are handled per
    `correction`:

    - ``"project"``: project onto the boundary and fit a Johnson law,
    - ``"normal_fallback"``: use the normal law with the regressed mean and
      variance,
    - ``"discard"``: drop the point.

    The quantiles at the surviving points are interpolated piecewise
    linearly in the feature, flat beyond the grid.

    Parameters
    ----------
    cross : :obj:`dimsim.simulation.DeltaVCross`
    basis : :obj:`dimsim.regression.BasisSpec`
    alpha : :obj:`float`
    grid : :obj:`EvalGrid`, optional
        Defaults to :func:`eval_grid` of the conditioning feature with
        `eval_points` probabilities. Tied feature values (every path at
        ``t = 0``) leave a single point, whose law then applies to all paths.
    correction : :obj:`str`
    moment_source : :obj:`str`
        ``"single"`` regresses powers of the single outer sample per path;
        ``"inner_mean"`` regresses the means over `n_inner` inner samples.
    outer : :obj:`dimsim.simulation.OuterPathSet`, optional
        Required for ``"inner_mean"``.
    rule : :obj:`dimsim.simulation.InclusionRule` or :obj:`str`
    n_inner : :obj:`int`
    seed : :obj:`int`, optional
    eval_points : :obj:`int`

    Raises
    ------
    EstimationError
        If no grid point survives.
    """
    check_probability(alpha)
    check(correction in CORRECTIONS, f"use correction '{correction}'")
    method = Jlsmc(
        basis=basis,
        eval_points=eval_points,
        correction=correction,
        moment_source=moment_source,
        n_inner=n_inner,
    )

    feature = cross.feature(basis.feature)
    if grid is None:
        grid = eval_grid(feature, method.eval_points)

    center = float(np.mean(cross.dv))
    scale = float(np.std(cross.dv))
    if not scale > 0:
        scale = 1.0

    targets = _moment_targets(cross, center, scale, moment_source, outer, rule, n_inner, seed)
    fitted = fit_least_squares(feature, targets[:, 0], basis).basis
    raw = np.stack(
        [fit_least_squares(feature, targets[:, k], fitted).predict(grid.points) for k in range(4)],
        axis=1,
    )

    counts = dict.fromkeys(
        ("invalid", "corrected", "normal_fallback", "discarded", "degenerate", "no_fit"), 0
    )
    families = {}
    points, quantiles = [], []

    for point, row in zip(grid.points, raw):
        law = _grid_law(row, correction, counts)
        if law is None:
            continue
        families[law.family] = families.get(law.family, 0) + 1
        points.append(point)
        quantiles.append(law.quantile(alpha))

    if not points:
        raise EstimationError(
            f"all {len(grid)} grid points were dropped "
            f"({counts['degenerate']} degenerate, {counts['discarded']} discarded)",
            method.method_id,
            cross.t,
        )

    logger.debug("jlsmc at t=%.6g: families %s, %s", cross.t, families, counts)

    quantile = center + scale * np.interp(feature, points, quantiles)
    diagnostics = dict(counts)
    diagnostics.update({f"family_{name}": count for name, count in sorted(families.items())})

    return ImCross(
        t_index=cross.t_index,
        t=cross.t,
        per_path_im=im_from_quantile(quantile),
        method=method,
        quantile=quantile,
        diagnostics=diagnostics,
    )
