"""Columnar export and import of outer path sets.

A path set is written as a long CSV with one row per ``(path, grid time)``
and the columns ``path_id, t, X, V, deflator`` (plus ``fixing`` for
floating-rate instruments), and a sidecar JSON holding the seed, the model,
the instrument and the realized cashflow events.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from dimsim.exceptions import ValidationError
from dimsim.models.instrument import instrument_from_dict
from dimsim.models.parameters import model_from_dict, model_to_dict
from dimsim.simulation import CashflowEvents, OuterPathSet

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def events_path(csv_path):
    """Sidecar JSON location of a path CSV."""

    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + "_events.json")


def export_paths(outer, csv_path):
    """Writes `outer` to `csv_path` and its sidecar JSON.

    Returns
    -------
    (:obj:`pathlib.Path`, :obj:`pathlib.Path`)
        The CSV and JSON locations.
    """
    csv_path = Path(csv_path)
    n, n_times = outer.states.shape

    frame = pd.DataFrame(
        {
            "path_id": np.repeat(np.arange(n), n_times),
            "t": np.tile(outer.times, n),
            "X": outer.states.ravel(),
            "V": outer.values.ravel(),
            "deflator": outer.deflators.ravel(),
        }
    )
    if outer.fixings is not None:
        frame["fixing"] = outer.fixings.ravel()

    sidecar = {
        "seed": outer.seed,
        "model": model_to_dict(outer.model),
        "instrument": outer.instrument.to_dict(),
        "events": {
            "path_id": outer.events.path_id.tolist(),
            "time": outer.events.time.tolist(),
            "amount": outer.events.amount.tolist(),
            "deflator": outer.events.deflator.tolist(),
        },
    }

    try:
        frame.to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
        with open(events_path(csv_path), "w") as file:
            json.dump(sidecar, file)
    except OSError as e:
        raise ValidationError(f"Cannot write path set to {csv_path}: {e}") from e

    logger.info("exported %d paths to %s", n, csv_path)

    return csv_path, events_path(csv_path)


def import_paths(csv_path):
    """Reads a path set written by :func:`export_paths`."""

    csv_path = Path(csv_path)

    try:
        frame = pd.read_csv(csv_path, float_precision="round_trip")
        with open(events_path(csv_path)) as file:
            sidecar = json.load(file)
    except OSError as e:
        raise ValidationError(f"Cannot read path set from {csv_path}: {e}") from e

    missing = {"path_id", "t", "X", "V", "deflator"} - set(frame.columns)
    if missing:
        raise ValidationError(
            f"Cannot read path set from {csv_path}: missing columns {sorted(missing)}."
        )

    frame = frame.sort_values(["path_id", "t"], kind="stable")
    n = int(frame["path_id"].nunique())
    times = frame.loc[frame["path_id"] == frame["path_id"].iloc[0], "t"].to_numpy()
    n_times = len(times)

    if n * n_times != len(frame):
        raise ValidationError(f"Cannot read path set from {csv_path}: ragged time grid.")

    def matrix(column):
        return frame[column].to_numpy(dtype=float).reshape(n, n_times)

    events = sidecar["events"]
    flows = CashflowEvents(
        path_id=np.asarray(events["path_id"], dtype=np.int64),
        time=np.asarray(events["time"], dtype=float),
        amount=np.asarray(events["amount"], dtype=float),
        deflator=np.asarray(events["deflator"], dtype=float),
    )

    return OuterPathSet(
        times=times,
        states=matrix("X"),
        values=matrix("V"),
        deflators=matrix("deflator"),
        events=flows,
        seed=int(sidecar["seed"]),
        model=model_from_dict(sidecar["model"]),
        instrument=instrument_from_dict(sidecar["instrument"]),
        fixings=matrix("fixing") if "fixing" in frame.columns else None,
    )
