import numpy as np
import pytest

from dimsim.exceptions import ValidationError
from dimsim.models import CallCombination, G1ppParams, GbmParams, IrSwap
from dimsim.path_io import events_path, export_paths, import_paths
from dimsim.simulation import simulate_outer, time_grid


def assert_same_paths(result, expected):
    assert np.array_equal(result.times, expected.times)
    assert np.array_equal(result.states, expected.states)
    assert np.array_equal(result.values, expected.values)
    assert np.array_equal(result.deflators, expected.deflators)
    assert np.array_equal(result.events.path_id, expected.events.path_id)
    assert np.array_equal(result.events.amount, expected.events.amount)
    assert result.seed == expected.seed
    assert result.model == expected.model
    assert result.instrument.to_dict() == expected.instrument.to_dict()


def test_call_paths_round_trip(tmp_path):
    model = GbmParams(spot0=85.0, rate_dom=0.03, rate_fgn=0.0, sigma=0.1)
    inst = CallCombination([(1, 120), (-2, 150)], 5.0)
    outer = simulate_outer(model, inst, 40, time_grid(5.0, 10), 8)

    csv_path, json_path = export_paths(outer, tmp_path / "paths.csv")
    result = import_paths(csv_path)

    assert json_path == events_path(csv_path)
    assert result.fixings is None
    assert_same_paths(result, outer)


def test_swap_paths_round_trip(tmp_path):
    inst = IrSwap(maturity=2.0, notional_schedule=[(0.0, 10.0)])
    outer = simulate_outer(G1ppParams(), inst, 25, time_grid(2.0, 8), 8)

    export_paths(outer, tmp_path / "paths.csv")
    result = import_paths(tmp_path / "paths.csv")

    assert np.array_equal(result.fixings, outer.fixings)
    assert_same_paths(result, outer)


def test_sidecar_location():
    assert events_path("out/paths.csv").name == "paths_events.json"


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="Cannot read path set"):
        import_paths(tmp_path / "missing.csv")


def test_missing_column(tmp_path):
    model = GbmParams(spot0=85.0, rate_dom=0.03, rate_fgn=0.0, sigma=0.1)
    outer = simulate_outer(model, CallCombination([(1, 120)], 5.0), 5, time_grid(5.0, 5), 0)
    csv_path, _ = export_paths(outer, tmp_path / "paths.csv")

    lines = csv_path.read_text().splitlines()
    csv_path.write_text("\n".join(",".join(line.split(",")[:-1]) for line in lines) + "\n")

    with pytest.raises(ValidationError, match="missing columns"):
        import_paths(csv_path)
