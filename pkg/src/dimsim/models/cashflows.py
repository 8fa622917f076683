from dataclasses import dataclass
from typing import Optional

import numpy as np

from dimsim.models.instrument import TIME_TOL
from dimsim.utils.check import check


@dataclass(frozen=True)
class EventPath:
    """Driver observations of one path at the instrument's event dates.

    Parameters
    ----------
    times : :obj:`numpy.ndarray`
        Event dates, ascending.
    states : :obj:`numpy.ndarray`
        Driver state at each date.
    fixings : :obj:`numpy.ndarray`, optional
        Fixing in force just before each date (floating-rate instruments).
    """

    times: np.ndarray
    states: np.ndarray
    fixings: Optional[np.ndarray] = None


def cashflows_in_window(inst, model, path, t, t_end):
    """Cashflows of `inst` paid in the window ``[t, t_end)`` along `path`.

    Returns
    -------
    :obj:`list` of (:obj:`float`, :obj:`float`)
        ``(time, amount)`` pairs, one per payment date in the window; amounts
        paid on the same date are netted.
    """
    check(t < t_end, f"collect cashflows on the empty window [{t}, {t_end})")

    payments = inst.payment_times()
    result = []

    for i, time in enumerate(path.times):
        if time < t - TIME_TOL or time >= t_end - TIME_TOL:
            continue
        if not np.any(np.abs(payments - time) <= TIME_TOL):
            continue

        fixing = None if path.fixings is None else path.fixings[i]
        amount = inst.flows(model, float(time), path.states[i], fixing)
        result.append((float(time), float(amount)))

    return result
