"""Brute-force nested Monte Carlo, the benchmark of every other estimator."""

import logging

import numpy as np

from dimsim.estimators.method_spec import ImCross, NestedMC, im_from_quantile
from dimsim.simulation import inner_block_size, inner_dv_block
from dimsim.utils import rng
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)


def inner_map(outer, t_index, delta, rule, n_inner, reduce, seed=None, purpose=rng.INNER):
    """Simulates `n_inner` inner value changes from every outer path and reduces them.

    Anchors are processed in blocks; `reduce` maps a ``[n_block, n_inner]``
    block to an array whose first axis runs over the block's paths.

    Returns
    -------
    :obj:`numpy.ndarray`
        The reduced blocks stacked over all paths.
    """
    seed = outer.seed if seed is None else seed
    t = float(outer.times[t_index])
    size = inner_block_size(n_inner)
    fixings = outer.fixing_at(t_index)
    parts = []

    for start in range(0, outer.n_outer, size):
        ids = np.arange(start, min(start + size, outer.n_outer))
        block = inner_dv_block(
            outer.model,
            outer.instrument,
            t,
            t_index,
            outer.states[ids, t_index],
            outer.values[ids, t_index],
            outer.deflators[ids, t_index],
            None if fixings is None else fixings[ids],
            ids,
            n_inner,
            delta,
            rule,
            seed,
            purpose,
        )
        parts.append(reduce(block))

    return np.concatenate(parts, axis=0)


def inner_raw_moments(outer, t_index, delta, rule, n_inner, seed=None, purpose=rng.INNER):
    """Per-path raw moments ``E[dv**k]``, ``k = 1..4``, of the inner samples.

    Returns
    -------
    :obj:`numpy.ndarray`
        ``[n_outer, 4]``.
    """

    def reduce(block):
        return np.stack([np.mean(block**k, axis=1) for k in range(1, 5)], axis=1)

    return inner_map(outer, t_index, delta, rule, n_inner, reduce, seed, purpose)


def inner_moments(outer, t_index, delta, rule, n_inner, seed=None, purpose=rng.INNER):
    """Per-path mean and central moments of the inner samples.

    Returns
    -------
    :obj:`numpy.ndarray`
        ``[n_outer, 4]`` with columns mean, cm2, cm3, cm4.
    """

    def reduce(block):
        mean = block.mean(axis=1)
        centered = block - mean[:, None]
        return np.stack(
            [mean] + [np.mean(centered**k, axis=1) for k in range(2, 5)], axis=1
        )

    return inner_map(outer, t_index, delta, rule, n_inner, reduce, seed, purpose)


def nested_mc(outer, t_index, delta, rule, n_inner, alpha, seed=None):
    """Per-path initial margin from the empirical quantile of inner value changes.

    Parameters
    ----------
    outer : :obj:`dimsim.simulation.OuterPathSet`
    t_index : :obj:`int`
    delta : :obj:`float`
        Margin period of risk; ``t + delta`` must lie on the grid.
    rule : :obj:`dimsim.simulation.InclusionRule` or :obj:`str`
    n_inner : :obj:`int`
    alpha : :obj:`float`
    seed : :obj:`int`, optional
        Defaults to the seed of the outer simulation.

    Returns
    -------
    :obj:`ImCross`
    """
    check_probability(alpha)
    check(n_inner >= 2, f"use n_inner={n_inner}; at least 2 are needed")
    if n_inner < 50:
        logger.debug("nested quantile at alpha=%g from only %d inner samples", alpha, n_inner)

    # validates the horizon before any inner work
    outer.horizon_index(t_index, delta)

    def reduce(block):
        return np.quantile(block, alpha, axis=1, method="linear")

    quantile = inner_map(outer, t_index, delta, rule, n_inner, reduce, seed)

    return ImCross(
        t_index=int(t_index),
        t=float(outer.times[t_index]),
        per_path_im=im_from_quantile(quantile),
        method=NestedMC(n_inner=n_inner),
        quantile=quantile,
    )

