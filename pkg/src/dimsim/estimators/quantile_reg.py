"""Direct conditional-quantile regression of the value change."""

import logging

import numpy as np

from dimsim.estimators.method_spec import ImCross, QuantileReg, im_from_quantile
from dimsim.estimators.nested_mc import inner_map
from dimsim.regression import fit_quantile
from dimsim.utils import rng
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)


def quantile_reg_estimator(
    cross,
    basis,
    alpha,
    inner_augment=0,
    seed=None,
    outer=None,
    rule="full",
    steps=5000,
    learn_rate=0.5,
    smoothing=None,
):
    """Per-path initial margin from a pinball-loss fit of the `alpha`-quantile.

    Parameters
    ----------
    cross : :obj:`dimsim.simulation.DeltaVCross`
    basis : :obj:`dimsim.regression.BasisSpec`
    alpha : :obj:`float`
    inner_augment : :obj:`int`
        Inner samples appended to the training set per path, each paired
        with the feature of its anchor. 0 trains on the cross-section only.
    seed : :obj:`int`, optional
    outer : :obj:`dimsim.simulation.OuterPathSet`, optional
        Required when `inner_augment` is positive.
    rule : :obj:`dimsim.simulation.InclusionRule` or :obj:`str`
    steps, learn_rate, smoothing
        Passed to :func:`dimsim.regression.fit_quantile`.

    Raises
    ------
    ConvergenceError
        Propagated from the optimizer.
    """
    check_probability(alpha)
    check(cross.n_outer > 0, "regress on an empty cross-section")
    check(inner_augment >= 0, f"use inner_augment={inner_augment}")

    feature = cross.feature(basis.feature)
    x, y = feature, cross.dv

    if inner_augment > 0:
        check(outer is not None, "augment the training set without the outer path set")
        inner = inner_map(
            outer,
            cross.t_index,
            cross.delta,
            rule,
            inner_augment,
            lambda block: block,
            seed,
            rng.AUGMENT,
        )
        x = np.concatenate([feature, np.repeat(feature, inner_augment)])
        y = np.concatenate([cross.dv, inner.ravel()])

    model = fit_quantile(x, y, basis, alpha, smoothing, steps, learn_rate)
    logger.debug(
        "quantile regression at t=%.6g on %d samples: %d steps", cross.t, len(y),
        model.diagnostics["iterations"],
    )

    quantile = model.predict(feature)
    method = QuantileReg(
        basis=basis,
        inner_augment=inner_augment,
        steps=steps,
        learn_rate=learn_rate,
        smoothing=smoothing,
    )

    return ImCross(
        t_index=cross.t_index,
        t=cross.t,
        per_path_im=im_from_quantile(quantile),
        method=method,
        quantile=quantile,
        diagnostics={
            "iterations": model.diagnostics["iterations"],
            "loss": model.diagnostics["loss"],
        },
    )
