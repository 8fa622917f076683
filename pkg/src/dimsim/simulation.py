"""Outer and inner path sets, MPoR value changes and sample utilities.

All monetary quantities produced here for value changes are in time-0
deflated units: a value ``V`` observed at ``t`` on a path with money-market
deflator ``D(t)`` enters as ``D(t) V``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
import logging
from typing import Optional

import numpy as np
import pandas as pd

from dimsim.exceptions import GridError, ValidationError
from dimsim.models.instrument import TIME_TOL
from dimsim.models.parameters import G1ppParams
from dimsim.utils import rng
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1024
INNER_BLOCK_CELLS = 1 << 19


class InclusionRule(Enum):
    """Which MPoR cashflows enter the value change."""

    FULL = "full"
    NONE = "none"
    POSITIVE_ONLY = "positive"
    NEGATIVE_ONLY = "negative"

    @classmethod
    def from_name(cls, name):
        if isinstance(name, cls):
            return name
        for rule in cls:
            if rule.value == name:
                return rule
        choices = ", ".join(rule.value for rule in cls)
        raise ValidationError(f"Cannot use inclusion rule '{name}'; choose one of {choices}.")

    def apply(self, amounts):
        amounts = np.asarray(amounts, dtype=float)

        if self is InclusionRule.FULL:
            return amounts
        if self is InclusionRule.NONE:
            return np.zeros_like(amounts)
        if self is InclusionRule.POSITIVE_ONLY:
            return np.maximum(amounts, 0.0)
        return np.minimum(amounts, 0.0)


@dataclass(frozen=True)
class CashflowEvents:
    """Realized cashflows of a path set in columnar form.

    Rows are sorted by ``(path_id, time)``; amounts are undeflated and
    `deflator` holds ``D(time)`` on the paying path.
    """

    path_id: np.ndarray
    time: np.ndarray
    amount: np.ndarray
    deflator: np.ndarray

    def __len__(self):
        return len(self.path_id)

    def for_path(self, m):
        mask = self.path_id == m
        return list(zip(self.time[mask].tolist(), self.amount[mask].tolist()))

    def window_sum(self, n_outer, t, t_end, rule):
        """Per-path deflated sum of ``f(amount)`` over flows in ``[t, t_end)``."""

        mask = (self.time >= t - TIME_TOL) & (self.time < t_end - TIME_TOL)
        weights = rule.apply(self.amount[mask]) * self.deflator[mask]
        return np.bincount(self.path_id[mask], weights=weights, minlength=n_outer)

    @staticmethod
    def empty():
        return CashflowEvents(
            np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0), np.zeros(0)
        )


@dataclass(frozen=True)
class OuterPathSet:
    """Outer paths on a time grid.

    Parameters
    ----------
    times : :obj:`numpy.ndarray`
        Grid of length ``T_n``, strictly increasing from 0.
    states : :obj:`numpy.ndarray`
        ``[n_outer, T_n]`` driver states (spot, or short-rate factor).
    values : :obj:`numpy.ndarray`
        ``[n_outer, T_n]`` undeflated portfolio values.
    deflators : :obj:`numpy.ndarray`
        ``[n_outer, T_n]`` money-market deflators ``D(t)``.
    events : :obj:`CashflowEvents`
    seed : :obj:`int`
    model : :obj:`GbmParams` or :obj:`G1ppParams`
    instrument : :obj:`dimsim.models.instrument.Instrument`
    fixings : :obj:`numpy.ndarray`, optional
        ``[n_outer, T_n]`` floating fixing in force at each grid time.
    """

    times: np.ndarray
    states: np.ndarray
    values: np.ndarray
    deflators: np.ndarray
    events: CashflowEvents
    seed: int
    model: object
    instrument: object
    fixings: Optional[np.ndarray] = None

    @property
    def n_outer(self):
        return self.states.shape[0]

    def horizon_index(self, t_index, delta):
        """Grid index of ``times[t_index] + delta``."""

        check(0 <= t_index < len(self.times), f"use t_index={t_index} outside the grid", GridError)
        target = self.times[t_index] + delta
        j = int(np.argmin(np.abs(self.times - target)))
        check(
            abs(self.times[j] - target) <= 1e-9 * max(1.0, target),
            f"find t+delta={target:.6g} on the simulation grid",
            GridError,
        )
        return j

    def fixing_at(self, t_index):
        return None if self.fixings is None else self.fixings[:, t_index]

    def __repr__(self):
        result = "<outer_path_set"
        result += f" n_outer={self.n_outer} n_times={len(self.times)} seed={self.seed}"
        result += ">"

        return result


@dataclass(frozen=True)
class DeltaVCross:
    """MPoR value changes at one grid time with their conditioning features."""

    t_index: int
    t: float
    delta: float
    dv: np.ndarray
    x: np.ndarray
    v: np.ndarray
    deflator: np.ndarray
    fixing: Optional[np.ndarray] = None

    @property
    def n_outer(self):
        return len(self.dv)

    def feature(self, name):
        """The conditioning feature ``"X"`` or ``"V"``."""

        if name == "X":
            return self.x
        if name == "V":
            return self.v
        raise ValidationError(f"Cannot condition on feature '{name}'; use X or V.")


@dataclass(frozen=True)
class Anchor:
    """Starting point of inner simulations.

    Parameters
    ----------
    t : :obj:`float`
    state : :obj:`float`
    value : :obj:`float`
        Undeflated portfolio value at the anchor.
    deflator : :obj:`float`
    fixing : :obj:`float`, optional
    index : :obj:`int`
        Path index, part of the random stream key.
    t_index : :obj:`int`
        Grid index, part of the random stream key.
    """

    t: float
    state: float
    value: float
    deflator: float = 1.0
    fixing: Optional[float] = None
    index: int = 0
    t_index: int = 0


@dataclass(frozen=True)
class InnerSampleSet:
    """Conditional samples of the value change at one anchor.

    `neighborhood` is the closed key interval the samples were taken from
    when ``origin == "pseudo"``.
    """

    anchor: Anchor
    dv: np.ndarray
    origin: str
    neighborhood: Optional[tuple] = None

    def __post_init__(self):
        check(len(self.dv) >= 2, "build an inner sample set with fewer than 2 samples")


def time_grid(maturity, n_steps):
    """Equally spaced grid ``[0, maturity]`` with `n_steps` intervals."""

    check(n_steps >= 1, f"build a grid with n_steps={n_steps}", GridError)
    return np.linspace(0.0, float(maturity), int(n_steps) + 1)


def _merge_times(grid, extra):
    """Union of `grid` and `extra`, dropping entries within tolerance of the grid."""

    extra = np.asarray(extra, dtype=float)
    if len(extra) == 0:
        return np.asarray(grid, dtype=float)
    distance = np.min(np.abs(extra[:, None] - np.asarray(grid)[None, :]), axis=1)
    return np.union1d(grid, extra[distance > 1e-9])


def _is_in(times, value):
    return bool(np.any(np.abs(times - value) <= 1e-9))


def _step(model, state, t0, t1, normals):
    """Exact transition over ``[t0, t1]``; returns the new state and ``D(t1)/D(t0)``."""

    h = t1 - t0
    if isinstance(model, G1ppParams):
        x_next, integral = model.evolve(state, h, normals.T)
        return x_next, np.exp(-integral - model.shift_integral(t0, t1))

    spot_next = model.evolve(state, h, normals[:, 0])
    return spot_next, np.full_like(state, model.deflator_step(h))


def _simulate_block(model, inst, grid, sub_times, path_ids, seed):
    n = len(path_ids)
    k = model.normals_per_step
    n_sub = len(sub_times)
    normals = rng.keyed_normals(seed, rng.OUTER, path_ids, max(n_sub - 1, 0) * k)
    normals = normals.reshape(n, max(n_sub - 1, 0), k)

    events = inst.event_times()
    payments = inst.payment_times()

    states = np.empty((n, len(grid)))
    values = np.empty((n, len(grid)))
    deflators = np.empty((n, len(grid)))
    fixings = None

    state = model.initial_state(n)
    fixing = inst.initial_fixing(model, n)
    if fixing is not None:
        fixings = np.empty((n, len(grid)))
    deflator = np.ones(n)

    flow_times, flow_amounts, flow_deflators, flow_ids = [], [], [], []
    g = 0

    for j, u in enumerate(sub_times):
        if g < len(grid) and abs(grid[g] - u) <= 1e-9:
            states[:, g] = state
            values[:, g] = inst.value(model, grid[g], state, fixing)
            deflators[:, g] = deflator
            if fixings is not None:
                fixings[:, g] = fixing
            g += 1

        if _is_in(events, u):
            if _is_in(payments, u):
                flow_times.append(np.full(n, u))
                flow_amounts.append(inst.flows(model, u, state, fixing))
                flow_deflators.append(deflator.copy())
                flow_ids.append(np.asarray(path_ids))
            fixing = inst.reset(model, u, state, fixing)

        if j + 1 < n_sub:
            state, ratio = _step(model, state, u, sub_times[j + 1], normals[:, j, :])
            deflator = deflator * ratio

    if flow_ids:
        block_events = (
            np.concatenate(flow_ids),
            np.concatenate(flow_times),
            np.concatenate(flow_amounts),
            np.concatenate(flow_deflators),
        )
    else:
        block_events = None

    return states, values, deflators, fixings, block_events


def simulate_outer(model, inst, n_outer, times, seed, threads=None):
    """Simulates outer paths of the driver and values the instrument on them.

    Every path owns the random stream keyed by ``(seed, path index)``, so the
    result does not depend on `threads`.

    Parameters
    ----------
    model : :obj:`GbmParams` or :obj:`G1ppParams`
    inst : :obj:`dimsim.models.instrument.Instrument`
    n_outer : :obj:`int`
    times : :obj:`numpy.ndarray`
        Grid starting at 0 and ending no later than maturity.
    seed : :obj:`int`
    threads : :obj:`int`, optional
        Worker count; None uses the executor default.

    Returns
    -------
    :obj:`OuterPathSet`
    """
    times = np.asarray(times, dtype=float)
    check(len(times) > 0, "simulate on an empty time grid", GridError)
    check(n_outer >= 1, f"simulate n_outer={n_outer} paths")
    check(abs(times[0]) <= TIME_TOL, "simulate on a grid that does not start at 0", GridError)
    check(np.all(np.diff(times) > 0), "simulate on a grid that is not increasing", GridError)
    check(
        times[-1] <= inst.maturity + TIME_TOL,
        f"simulate past maturity {inst.maturity}",
        GridError,
    )
    inst.check_model(model)

    events = inst.event_times()
    sub_times = _merge_times(times, events[events <= times[-1] + TIME_TOL])
    blocks = [
        np.arange(start, min(start + BLOCK_SIZE, n_outer))
        for start in range(0, n_outer, BLOCK_SIZE)
    ]

    def run(path_ids):
        return _simulate_block(model, inst, times, sub_times, path_ids, seed)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(run, blocks))

    states = np.vstack([r[0] for r in results])
    values = np.vstack([r[1] for r in results])
    deflators = np.vstack([r[2] for r in results])
    fixings = None if results[0][3] is None else np.vstack([r[3] for r in results])

    parts = [r[4] for r in results if r[4] is not None]
    if parts:
        ids, when, amount, deflator = (np.concatenate(col) for col in zip(*parts))
        order = np.lexsort((when, ids))
        flows = CashflowEvents(ids[order], when[order], amount[order], deflator[order])
    else:
        flows = CashflowEvents.empty()

    logger.info(
        "simulated %d outer paths on %d grid times (%d cashflow events)",
        n_outer,
        len(times),
        len(flows),
    )

    return OuterPathSet(
        times=times,
        states=states,
        values=values,
        deflators=deflators,
        events=flows,
        seed=int(seed),
        model=model,
        instrument=inst,
        fixings=fixings,
    )


def delta_v(outer, t_index, delta, rule):
    """MPoR value change of every outer path at ``times[t_index]``.

    ``dv = D(t+delta) V(t+delta) + sum D(t_i) f(CF_i) - D(t) V(t)`` over the
    flows paid in ``[t, t+delta)``.
    """
    rule = InclusionRule.from_name(rule)
    j = outer.horizon_index(t_index, delta)
    t = float(outer.times[t_index])

    flows = outer.events.window_sum(outer.n_outer, t, outer.times[j], rule)
    end_value = outer.deflators[:, j] * outer.values[:, j]
    start_value = outer.deflators[:, t_index] * outer.values[:, t_index]
    dv = end_value + flows - start_value

    check(np.all(np.isfinite(dv)), f"build a finite value change at t={t:.6g}")

    return DeltaVCross(
        t_index=int(t_index),
        t=t,
        delta=float(delta),
        dv=dv,
        x=outer.states[:, t_index],
        v=outer.values[:, t_index],
        deflator=outer.deflators[:, t_index],
        fixing=outer.fixing_at(t_index),
    )


def inner_dv_block(
    model, inst, t, t_index, states, values, deflators, fixings, anchor_ids,
    n_inner, delta, rule, seed, purpose=rng.INNER,
):
    """Inner value changes for many anchors at one grid time.

    Returns
    -------
    :obj:`numpy.ndarray`
        ``[n_anchors, n_inner]`` deflated value changes; row ``a`` only
        depends on ``(seed, purpose, t_index, anchor_ids[a])``.
    """
    check(n_inner >= 1, f"simulate n_inner={n_inner} inner samples")
    check(
        t + delta <= inst.maturity + TIME_TOL,
        f"simulate an MPoR ending after maturity {inst.maturity}",
        GridError,
    )
    rule = InclusionRule.from_name(rule)

    t_end = t + delta
    events = inst.event_times()
    payments = inst.payment_times()
    inside = events[(events >= t - TIME_TOL) & (events < t_end - TIME_TOL)]
    sub_times = _merge_times(np.array([t, t_end]), inside)

    n_anchors = len(anchor_ids)
    k = model.normals_per_step
    n_steps = len(sub_times) - 1

    normals = rng.keyed_normals(
        seed, purpose, anchor_ids, n_inner * n_steps * k, prefix=(int(t_index),)
    )
    normals = normals.reshape(n_anchors * n_inner, n_steps, k)

    state = np.repeat(np.asarray(states, dtype=float), n_inner)
    deflator = np.repeat(np.asarray(deflators, dtype=float), n_inner)
    fixing = None if fixings is None else np.repeat(np.asarray(fixings, dtype=float), n_inner)
    flows = np.zeros_like(state)

    for j, u in enumerate(sub_times[:-1]):
        if _is_in(events, u):
            if _is_in(payments, u):
                flows = flows + rule.apply(inst.flows(model, u, state, fixing)) * deflator
            fixing = inst.reset(model, u, state, fixing)
        state, ratio = _step(model, state, u, sub_times[j + 1], normals[:, j, :])
        deflator = deflator * ratio

    end_value = deflator * inst.value(model, t_end, state, fixing)
    start_value = np.repeat(np.asarray(deflators) * np.asarray(values), n_inner)
    dv = end_value + flows - start_value

    return dv.reshape(n_anchors, n_inner)


def inner_block_size(n_inner):
    """Anchors per vectorized inner-simulation block."""

    return max(1, INNER_BLOCK_CELLS // max(int(n_inner), 1))


def simulate_inner(model, inst, anchor, n_inner, delta, rule, seed, purpose=rng.INNER):
    """Nested value-change samples over the MPoR starting at `anchor`.

    Parameters
    ----------
    anchor : :obj:`Anchor`
    n_inner : :obj:`int`
        At least 2.

    Returns
    -------
    :obj:`InnerSampleSet`
    """
    dv = inner_dv_block(
        model,
        inst,
        anchor.t,
        anchor.t_index,
        [anchor.state],
        [anchor.value],
        [anchor.deflator],
        None if anchor.fixing is None else [anchor.fixing],
        [anchor.index],
        n_inner,
        delta,
        rule,
        seed,
        purpose,
    )
    return InnerSampleSet(anchor=anchor, dv=dv[0], origin="nested")


def anchor_of(outer, t_index, m):
    """The :obj:`Anchor` of outer path `m` at grid index `t_index`."""

    fixing = outer.fixing_at(t_index)
    return Anchor(
        t=float(outer.times[t_index]),
        state=float(outer.states[m, t_index]),
        value=float(outer.values[m, t_index]),
        deflator=float(outer.deflators[m, t_index]),
        fixing=None if fixing is None else float(fixing[m]),
        index=int(m),
        t_index=int(t_index),
    )


def empirical_quantile(samples, alpha, axis=None):
    """Type-7 (linear interpolation) empirical quantile."""

    samples = np.asarray(samples, dtype=float)
    check(samples.size > 0, "take the quantile of an empty sample")
    check_probability(alpha)

    return np.quantile(samples, alpha, axis=axis, method="linear")


def pseudo_inner(cross, anchor_index, key, k):
    """Borrows the value changes of the `k` outer paths nearest the anchor.

    Distances are measured in the conditioning feature `key` (``"X"`` or
    ``"V"``); ties go to the lower path index.
    """
    check(k >= 2, f"use k={k} pseudo samples; at least 2 are needed")
    check(k <= cross.n_outer, f"use k={k} pseudo samples out of {cross.n_outer} paths")

    feature = cross.feature(key)
    distance = np.abs(feature - feature[anchor_index])
    order = np.lexsort((np.arange(cross.n_outer), distance))
    chosen = np.sort(order[:k])

    anchor = Anchor(
        t=cross.t,
        state=float(cross.x[anchor_index]),
        value=float(cross.v[anchor_index]),
        deflator=float(cross.deflator[anchor_index]),
        index=int(anchor_index),
        t_index=cross.t_index,
    )
    neighborhood = (float(feature[chosen].min()), float(feature[chosen].max()))

    return InnerSampleSet(
        anchor=anchor, dv=cross.dv[chosen], origin="pseudo", neighborhood=neighborhood
    )


def knn_windows(sorted_keys, k):
    """Start of the `k`-nearest window of every point of an ascending key array.

    For the point at sorted position ``j`` the window ``[lo, lo + k)``
    contains ``j`` and minimizes the largest key distance to ``key[j]``.
    """
    keys = np.asarray(sorted_keys, dtype=float)
    n = len(keys)
    check(2 <= k <= n, f"use k={k} neighbors out of {n} points")

    j = np.arange(n)
    lo = np.maximum(0, j - k + 1)
    hi = np.minimum(j, n - k)

    # smallest lo with key[lo + k] - key[j] >= key[j] - key[lo]
    while np.any(lo < hi):
        mid = (lo + hi) // 2
        right = keys[np.minimum(mid + k, n - 1)] - keys[j]
        left = keys[j] - keys[mid]
        move = right < left
        lo = np.where(move & (lo < hi), mid + 1, lo)
        hi = np.where(~move & (lo < hi), mid, hi)

    return lo


def martingale_drift(outer):
    """Mean and standard error of deflated value plus realized flows minus ``V(0)``.

    Returns
    -------
    :obj:`pandas.DataFrame`
        Columns ``t``, ``mean``, ``stderr``; one row per grid time.
    """
    n, n_times = outer.values.shape
    paid = np.zeros((n, n_times + 1))
    events = outer.events
    first_after = np.searchsorted(outer.times, events.time + TIME_TOL, side="left")
    np.add.at(paid, (events.path_id, first_after), events.amount * events.deflator)
    realized = np.cumsum(paid, axis=1)[:, :n_times]

    gain = outer.deflators * outer.values + realized - outer.values[:, [0]]
    stderr = gain.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(n_times)

    return pd.DataFrame({"t": outer.times, "mean": gain.mean(axis=0), "stderr": stderr})
