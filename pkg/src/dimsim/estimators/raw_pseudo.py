"""Empirical quantiles of raw pseudo-inner samples."""

import numpy as np

from dimsim.estimators.method_spec import ImCross, RawPseudo, im_from_quantile
from dimsim.simulation import INNER_BLOCK_CELLS, knn_windows
from dimsim.utils.check import check, check_probability


def raw_pseudo(cross, k, alpha, key="X"):
    """Per-path initial margin from the `k` outer value changes nearest in `key`.

    Every path's sample is the window of `k` consecutive paths in key order
    that contains it and is tightest around its key, and the path's
    quantile is the type-7 empirical quantile of that window.

    Parameters
    ----------
    cross : :obj:`dimsim.simulation.DeltaVCross`
    k : :obj:`int`
        At least 2; ``ceil(2 / alpha)`` or more keeps the quantile off the
        sample minimum.
    alpha : :obj:`float`
    key : :obj:`str`
        ``"X"`` or ``"V"``.

    Returns
    -------
    :obj:`ImCross`
    """
    check_probability(alpha)
    n = cross.n_outer
    check(2 <= k <= n, f"use k={k} pseudo samples out of {n} paths")

    keys = cross.feature(key)
    order = np.argsort(keys, kind="stable")
    sorted_dv = cross.dv[order]
    starts = knn_windows(keys[order], k)

    sorted_quantile = np.empty(n)
    offsets = np.arange(k)
    rows = max(1, INNER_BLOCK_CELLS // k)

    for begin in range(0, n, rows):
        end = min(begin + rows, n)
        window = sorted_dv[starts[begin:end, None] + offsets]
        sorted_quantile[begin:end] = np.quantile(window, alpha, axis=1, method="linear")

    quantile = np.empty(n)
    quantile[order] = sorted_quantile

    return ImCross(
        t_index=cross.t_index,
        t=cross.t,
        per_path_im=im_from_quantile(quantile),
        method=RawPseudo(k=k, key=key),
        quantile=quantile,
    )
