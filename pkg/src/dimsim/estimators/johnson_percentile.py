"""Johnson percentile matching on limited conditional samples.

Each anchor gets a small sample of value changes, either simulated inner
samples or pseudo-inner samples borrowed from the outer paths closest in
the conditioning key. A Johnson law is put through four sample percentiles
and its `alpha`-quantile is the anchor's estimate.
"""

import logging

import numpy as np

from dimsim.estimators.method_spec import (
    JPP_SOURCES,
    ImCross,
    JohnsonPercentile,
    im_from_quantile,
)
from dimsim.estimators.nested_mc import inner_map
from dimsim.exceptions import DegenerateDistributionError
from dimsim.johnson import DEFAULT_Z, fit_percentiles, normal_params
from dimsim.simulation import knn_windows
from dimsim.utils import rng
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)

MIN_SAMPLES = 20


def _sample_quantile(samples, alpha, z):
    """Johnson percentile quantile of `samples`; True as second item on fallback."""

    if len(np.unique(samples)) >= 4:
        try:
            return fit_percentiles(samples, z).quantile(alpha), False
        except DegenerateDistributionError:
            pass

    sd = float(np.std(samples))
    mean = float(np.mean(samples))
    if not sd > 0:
        return mean, True
    return normal_params(mean, sd).quantile(alpha), True


def _pseudo_quantiles(cross, alpha, k, stride, z, key):
    keys = cross.feature(key)
    n = cross.n_outer
    check(k <= n, f"use k={k} pseudo samples out of {n} paths")

    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    sorted_dv = cross.dv[order]
    starts = knn_windows(sorted_keys, k)

    anchors = np.arange(0, n, stride)
    if anchors[-1] != n - 1:
        anchors = np.append(anchors, n - 1)

    quantiles = np.empty(len(anchors))
    fallbacks = 0
    for i, j in enumerate(anchors):
        quantiles[i], fallback = _sample_quantile(sorted_dv[starts[j] : starts[j] + k], alpha, z)
        fallbacks += fallback

    anchor_keys, first = np.unique(sorted_keys[anchors], return_index=True)
    if len(anchor_keys) == 1:
        quantile = np.full(n, quantiles[first[0]])
    else:
        quantile = np.interp(keys, anchor_keys, quantiles[first])

    return quantile, len(anchors), fallbacks


def _inner_quantiles(outer, cross, alpha, n_inner, z, rule, seed):
    check(outer is not None, "simulate inner samples without the outer path set")

    def reduce(block):
        return np.array([_sample_quantile(row, alpha, z) for row in block], dtype=float)

    result = inner_map(outer, cross.t_index, cross.delta, rule, n_inner, reduce, seed, rng.AUGMENT)
    return result[:, 0], cross.n_outer, int(result[:, 1].sum())


def johnson_percentile_estimator(
    cross,
    alpha,
    source="pseudo",
    k=200,
    stride=10,
    n_inner=50,
    z=DEFAULT_Z,
    key="X",
    outer=None,
    rule="full",
    seed=None,
):
    """Per-path initial margin from Johnson percentile fits at anchors.

    Parameters
    ----------
    cross : :obj:`dimsim.simulation.DeltaVCross`
    alpha : :obj:`float`
    source : :obj:`str`
        ``"pseudo"``: every `stride`-th path in key order (and the last one)
        is an anchor whose sample is the window of `k` paths nearest in
        `key`; quantiles are interpolated linearly in the key, flat beyond
        the outermost anchors. ``"inner"``: every path is an anchor with
        `n_inner` simulated samples.
    k, stride, n_inner : :obj:`int`
    z : :obj:`float`
        Percentile spacing in normal scores.
    key : :obj:`str`
        ``"X"`` or ``"V"``.
    outer : :obj:`dimsim.simulation.OuterPathSet`, optional
        Required for the inner source.
    rule : :obj:`dimsim.simulation.InclusionRule` or :obj:`str`
    seed : :obj:`int`, optional

    Returns
    -------
    :obj:`ImCross`
        Anchors whose samples do not spread fall back to the normal law;
        their count is in ``diagnostics["normal_fallback"]``.
    """
    check_probability(alpha)
    check(source in JPP_SOURCES, f"use percentile source '{source}'")

    if source == "pseudo":
        check(k >= MIN_SAMPLES, f"use k={k} pseudo samples; at least {MIN_SAMPLES} are needed")
        quantile, anchors, fallbacks = _pseudo_quantiles(cross, alpha, k, stride, z, key)
    else:
        check(
            n_inner >= MIN_SAMPLES,
            f"use n_inner={n_inner}; at least {MIN_SAMPLES} are needed",
        )
        quantile, anchors, fallbacks = _inner_quantiles(
            outer, cross, alpha, n_inner, z, rule, seed
        )

    if fallbacks:
        logger.warning(
            "johnson percentile at t=%.6g: %d of %d anchors fell back to the normal law",
            cross.t,
            fallbacks,
            anchors,
        )

    method = JohnsonPercentile(source=source, k=k, stride=stride, n_inner=n_inner, z=z, key=key)

    return ImCross(
        t_index=cross.t_index,
        t=cross.t,
        per_path_im=im_from_quantile(quantile),
        method=method,
        quantile=quantile,
        diagnostics={"anchors": anchors, "normal_fallback": fallbacks},
    )
