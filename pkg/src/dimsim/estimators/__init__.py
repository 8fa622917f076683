"""The eight initial margin estimators and their common entry point."""

from dataclasses import replace
import logging
import time

from dimsim.estimators.delta_gamma import (
    delta_gamma_cf,
    delta_gamma_estimator,
    delta_gamma_moments,
    delta_gamma_normal,
)
from dimsim.estimators.johnson_percentile import johnson_percentile_estimator
from dimsim.estimators.lsmc import EvalGrid, eval_grid, glsmc, jlsmc
from dimsim.estimators.method_spec import (
    METHODS,
    DeltaGammaCF,
    DeltaGammaNormal,
    Glsmc,
    ImCross,
    Jlsmc,
    JohnsonPercentile,
    MethodSpec,
    NestedMC,
    QuantileReg,
    RawPseudo,
    method_from_dict,
    requirements_of,
)
from dimsim.estimators.nested_mc import inner_moments, inner_raw_moments, nested_mc
from dimsim.estimators.quantile_reg import quantile_reg_estimator
from dimsim.estimators.raw_pseudo import raw_pseudo
from dimsim.exceptions import ValidationError
from dimsim.simulation import delta_v

logger = logging.getLogger(__name__)


def _run(method, outer, cross, alpha, rule, seed):
    if isinstance(method, NestedMC):
        return nested_mc(outer, cross.t_index, cross.delta, rule, method.n_inner, alpha, seed)
    if isinstance(method, Glsmc):
        return glsmc(cross, method.basis, alpha, method.var_floor)
    if isinstance(method, Jlsmc):
        return jlsmc(
            cross,
            method.basis,
            alpha,
            None,
            method.correction,
            method.moment_source,
            outer,
            rule,
            method.n_inner,
            seed,
            method.eval_points,
        )
    if isinstance(method, QuantileReg):
        return quantile_reg_estimator(
            cross,
            method.basis,
            alpha,
            method.inner_augment,
            seed,
            outer,
            rule,
            method.steps,
            method.learn_rate,
            method.smoothing,
        )
    if isinstance(method, DeltaGammaNormal):
        return delta_gamma_estimator(outer, cross, alpha)
    if isinstance(method, DeltaGammaCF):
        return delta_gamma_estimator(outer, cross, alpha, True, method.kurtosis_convention)
    if isinstance(method, JohnsonPercentile):
        return johnson_percentile_estimator(
            cross,
            alpha,
            method.source,
            method.k,
            method.stride,
            method.n_inner,
            method.z,
            method.key,
            outer,
            rule,
            seed,
        )
    if isinstance(method, RawPseudo):
        return raw_pseudo(cross, method.k, alpha, method.key)

    raise ValidationError(f"Cannot estimate with unknown method {method!r}.")


def estimate(method, outer, t_index, delta, rule, alpha, seed=None):
    """Runs `method` on the cross-section of `outer` at grid index `t_index`.

    Parameters
    ----------
    method : :obj:`MethodSpec`
    outer : :obj:`dimsim.simulation.OuterPathSet`
    t_index : :obj:`int`
    delta : :obj:`float`
    rule : :obj:`dimsim.simulation.InclusionRule` or :obj:`str`
    alpha : :obj:`float`
    seed : :obj:`int`, optional
        Seed of inner and augmenting samples; defaults to the outer seed.

    Returns
    -------
    :obj:`ImCross`
        Carries `method` itself and the estimation wall time, value change
        cross-section included.
    """
    start = time.perf_counter()
    cross = delta_v(outer, t_index, delta, rule)
    result = _run(method, outer, cross, alpha, rule, seed)
    wall_time = time.perf_counter() - start

    logger.debug("%s at t=%.6g took %.3fs", method.method_id, cross.t, wall_time)

    return replace(result, method=method, wall_time=wall_time)


__all__ = [
    "estimate",
    "nested_mc",
    "inner_moments",
    "inner_raw_moments",
    "glsmc",
    "jlsmc",
    "EvalGrid",
    "eval_grid",
    "quantile_reg_estimator",
    "delta_gamma_normal",
    "delta_gamma_cf",
    "delta_gamma_moments",
    "delta_gamma_estimator",
    "johnson_percentile_estimator",
    "raw_pseudo",
    "ImCross",
    "MethodSpec",
    "METHODS",
    "NestedMC",
    "Glsmc",
    "Jlsmc",
    "QuantileReg",
    "DeltaGammaNormal",
    "DeltaGammaCF",
    "JohnsonPercentile",
    "RawPseudo",
    "method_from_dict",
    "requirements_of",
]
