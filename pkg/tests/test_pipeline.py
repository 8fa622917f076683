import json

import numpy as np
import pandas as pd
import pytest

from dimsim.config import RunConfig
from dimsim.estimators import DeltaGammaNormal, Glsmc, NestedMC, RawPseudo
from dimsim.exceptions import EstimationError, GridError, ValidationError
from dimsim.models import G1ppParams, IrSwap
from dimsim.pipeline import (
    DimCurve,
    compute_dim,
    emit,
    read_manifest,
    rmse,
    run_benchmark,
    simulate_config,
)
from dimsim.simulation import InclusionRule, simulate_outer, time_grid

RECORD = {
    "instrument": {"type": "call_combination", "legs": [[1, 120], [-2, 150]], "maturity": 5},
    "model": {"type": "gbm", "spot0": 85, "rate_dom": 0.03, "rate_fgn": 0, "sigma": 0.1},
    "n_outer": 200,
    "delta": 0.5,
    "n_steps": 10,
    "dim_stride": 3,
    "repeats": 2,
    "threads": 2,
    "benchmark": {"name": "nested_mc", "n_inner": 30},
    "methods": [
        {"name": "glsmc", "id": "glsmc-x", "basis": {"kind": "laguerre", "degree": 2}},
        {"name": "raw_pseudo", "id": "raw-too-many", "k": 500},
        {"name": "nested_mc", "id": "nested-copy", "n_inner": 30},
    ],
}


@pytest.fixture
def config(tmp_path):
    return RunConfig.from_dict({**RECORD, "out_dir": str(tmp_path / "out")})


@pytest.fixture(scope="module")
def report():
    config = RunConfig.from_dict(RECORD)
    return run_benchmark(config)


def _curve(dim, times=(1.0, 2.0)):
    return DimCurve(
        times=np.array(times), dim=np.array(dim), method=NestedMC(), rule=InclusionRule.FULL
    )


def test_rmse_identical():
    result = rmse(_curve([1.0, 2.0]), _curve([1.0, 2.0]))
    expected = (0.0, 0.0)

    assert result == expected


def test_rmse_constant_offset():
    absolute, relative = rmse(_curve([1.1, 1.1]), _curve([1.0, 1.0]))

    assert absolute == pytest.approx(0.1)
    assert relative == pytest.approx(0.1)


def test_rmse_zero_benchmark():
    absolute, relative = rmse(_curve([1.0, 1.0]), _curve([0.0, 0.0]))

    assert absolute == pytest.approx(1.0)
    assert relative == float("inf")


def test_rmse_grid_mismatch():
    with pytest.raises(GridError):
        rmse(_curve([1.0, 1.0]), _curve([1.0, 1.0], times=(1.0, 2.5)))

    with pytest.raises(GridError):
        rmse(_curve([1.0], times=(1.0,)), _curve([1.0, 1.0]))


def test_compute_dim_curve(config):
    outer = simulate_config(config)
    curve = compute_dim(outer, Glsmc(), 0.01, 0.5, "full", config.t_indices())

    assert config.t_indices() == [0, 3, 6, 9]
    assert np.allclose(curve.times, [0.0, 1.5, 3.0, 4.5])
    assert curve.dim.shape == (4,)
    assert np.all(curve.dim >= 0)
    assert len(curve.crosses) == 4
    assert curve.wall_time_total >= 0
    assert repr(curve) == "<dim_curve glsmc rule=full n_times=4>"


def test_compute_dim_default_indices(config):
    outer = simulate_config(config)
    curve = compute_dim(outer, Glsmc(), 0.01, 0.5, "full")

    assert np.allclose(curve.times, np.linspace(0.0, 4.5, 10))


def test_compute_dim_does_not_depend_on_threads(config):
    outer = simulate_config(config)
    method = NestedMC(n_inner=20)

    one = compute_dim(outer, method, 0.01, 0.5, "full", [0, 3, 6], threads=1)
    many = compute_dim(outer, method, 0.01, 0.5, "full", [0, 3, 6], threads=4)

    assert np.array_equal(one.dim, many.dim)


def test_compute_dim_off_grid(config):
    outer = simulate_config(config)

    with pytest.raises(GridError):
        compute_dim(outer, Glsmc(), 0.01, 0.25, "full", [0])


def test_delta_gamma_needs_sensitivities():
    outer = simulate_outer(G1ppParams(), IrSwap(), 100, time_grid(15.0, 15), 0)

    with pytest.raises(EstimationError) as info:
        compute_dim(outer, DeltaGammaNormal(), 0.01, 1.0, "full", [0])

    assert info.value.method_id == "delta_gamma_normal"
    assert "sensitivities" in str(info.value)


def test_estimation_error_carries_time(config):
    outer = simulate_config(config)

    with pytest.raises(EstimationError) as info:
        compute_dim(outer, RawPseudo(k=500), 0.01, 0.5, "full", [3], threads=1)

    assert info.value.method_id == "raw_pseudo"
    assert info.value.t == pytest.approx(1.5)
    assert str(info.value).startswith("raw_pseudo at t=1.5: ")


def test_benchmark_rows(report):
    result = [row.method_id for row in report.rows]
    expected = ["nested-copy", "glsmc-x", "raw-too-many"]

    assert result == expected
    assert report.failed


def test_benchmark_same_method_scores_zero(report):
    row = report.rows[0]

    assert row.rmse_abs == 0.0
    assert row.rmse_rel == 0.0
    assert row.repeats == 2
    assert row.wall_time_mean >= 0


def test_benchmark_failed_row(report):
    row = report.rows[-1]

    assert row.failed
    assert row.error.startswith("EstimationError: raw-too-many at t=")
    assert np.isnan(row.rmse_abs)
    assert len(report.curves) == 3


def test_benchmark_without_methods():
    with pytest.raises(ValidationError, match="without any method"):
        run_benchmark(RunConfig.from_dict({**RECORD, "methods": []}))


def test_emit_files(tmp_path, report):
    config = RunConfig.from_dict({**RECORD, "out_dir": str(tmp_path)})
    written = emit(report.curves, report, tmp_path, config, write_im_cross=True)

    result = sorted(path.name for path in written)
    expected = ["benchmark.csv", "dim_curves.csv", "im_cross.csv", "timings.csv"]
    assert result == expected

    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["status"] == "partial"
    assert manifest["seed"] == 0
    assert sorted(manifest["outputs"]) == expected
    assert "numpy" in manifest["versions"]

    benchmark = pd.read_csv(tmp_path / "benchmark.csv", keep_default_na=False)
    assert list(benchmark.columns) == ["method_id", "rmse_abs", "rmse_rel", "spec", "error"]
    assert list(benchmark["method_id"]) == ["nested-copy", "glsmc-x", "raw-too-many"]

    im_cross = pd.read_csv(tmp_path / "im_cross.csv")
    assert list(im_cross.columns) == ["t", "path_id", "im", "method_id"]
    assert len(im_cross) == 3 * 4 * 200


def test_emit_dim_curves_round_trip(tmp_path, report):
    emit(report.curves, None, tmp_path)
    frame = pd.read_csv(tmp_path / "dim_curves.csv", float_precision="round_trip")

    assert list(frame.columns) == ["t", "dim", "method_id", "rule"]
    for curve in report.curves:
        rows = frame[frame["method_id"] == curve.method_id]
        assert np.array_equal(rows["t"].to_numpy(), curve.times)
        assert np.array_equal(rows["dim"].to_numpy(), curve.dim)
        assert set(rows["rule"]) == {"full"}

    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert manifest["config"] is None


def test_emit_empty(tmp_path):
    emit([], None, tmp_path)

    result = (tmp_path / "dim_curves.csv").read_text().strip()
    expected = "t,dim,method_id,rule"

    assert result == expected


def test_emit_is_deterministic(tmp_path):
    config = RunConfig.from_dict({**RECORD, "methods": RECORD["methods"][:1]})
    contents = []
    for name, threads in (("a", 1), ("b", 3)):
        run = RunConfig.from_dict({**config.to_dict(), "threads": threads})
        report = run_benchmark(run)
        emit(report.curves, report, tmp_path / name, run)
        contents.append(
            [(tmp_path / name / f).read_bytes() for f in ("dim_curves.csv", "benchmark.csv")]
        )

    assert contents[0] == contents[1]


def test_read_manifest(tmp_path, config):
    emit([], None, tmp_path, config)

    result = read_manifest(tmp_path / "run_manifest.json")

    assert result == config
