"""DIM curves, benchmark comparisons and report files."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
import json
import logging
from pathlib import Path
import platform
from typing import List, Optional

import numpy as np
import pandas as pd

from dimsim.config import RunConfig
from dimsim.estimators import estimate
from dimsim.estimators.method_spec import SENSITIVITIES, requirements_of
from dimsim.exceptions import DimsimError, EstimationError, GridError, ValidationError
from dimsim.path_io import FLOAT_FORMAT
from dimsim.simulation import InclusionRule, simulate_outer
from dimsim.utils.check import check

logger = logging.getLogger(__name__)

MANIFEST = "run_manifest.json"
DIM_CURVES = "dim_curves.csv"
BENCHMARK = "benchmark.csv"
TIMINGS = "timings.csv"
IM_CROSS = "im_cross.csv"


@dataclass
class DimCurve:
    """Expected initial margin over the simulation grid for one method.

    Parameters
    ----------
    times : :obj:`numpy.ndarray`
    dim : :obj:`numpy.ndarray`
        Path average of the per-path initial margin at each time.
    method : :obj:`dimsim.estimators.MethodSpec`
    rule : :obj:`dimsim.simulation.InclusionRule`
    wall_time_total : :obj:`float`
    step_times : :obj:`numpy.ndarray`
        Estimation seconds per time step.
    crosses : :obj:`list` of :obj:`dimsim.estimators.ImCross`
    """

    times: np.ndarray
    dim: np.ndarray
    method: object
    rule: InclusionRule
    wall_time_total: float = 0.0
    step_times: Optional[np.ndarray] = None
    crosses: list = field(default_factory=list)

    @property
    def method_id(self):
        return self.method.method_id

    def __repr__(self):
        return f"<dim_curve {self.method_id} rule={self.rule.value} n_times={len(self.times)}>"


@dataclass
class BenchmarkRow:
    method_id: str
    spec: str
    rmse_abs: float = float("nan")
    rmse_rel: float = float("nan")
    wall_time_mean: float = float("nan")
    wall_time_sd: float = float("nan")
    repeats: int = 0
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


@dataclass
class BenchmarkReport:
    """Accuracy and timing of every compared method against the benchmark.

    `rows` are sorted by absolute RMSE, failed methods last; the benchmark
    method itself has no row.
    """

    benchmark: DimCurve
    rows: List[BenchmarkRow] = field(default_factory=list)
    curves: List[DimCurve] = field(default_factory=list)

    @property
    def failed(self):
        return any(row.failed for row in self.rows)


def check_requirements(method, outer):
    """Raises EstimationError if `outer` cannot feed `method`."""

    inst = outer.instrument
    if SENSITIVITIES in requirements_of(method) and not inst.has_sensitivities:
        raise EstimationError(
            f"needs sensitivities, which a {inst.name} does not provide", method.method_id
        )


def compute_dim(outer, method, alpha, delta, rule, t_indices=None, seed=None, threads=None):
    """DIM curve of `method` at the grid indices `t_indices`.

    Time steps are estimated concurrently; every step draws from its own
    keyed random streams, so the curve does not depend on `threads`.

    Parameters
    ----------
    outer : :obj:`dimsim.simulation.OuterPathSet`
    method : :obj:`dimsim.estimators.MethodSpec`
    alpha : :obj:`float`
    delta : :obj:`float`
    rule : :obj:`dimsim.simulation.InclusionRule` or :obj:`str`
    t_indices : :obj:`list` of :obj:`int`, optional
        Defaults to every index whose MPoR ends on the grid.
    seed : :obj:`int`, optional
    threads : :obj:`int`, optional

    Returns
    -------
    :obj:`DimCurve`

    Raises
    ------
    EstimationError
        Carrying the failing time and method id.
    """
    rule = InclusionRule.from_name(rule)
    check_requirements(method, outer)

    if t_indices is None:
        end = outer.times[-1] - delta + 1e-9 * max(1.0, outer.times[-1])
        t_indices = [i for i, t in enumerate(outer.times) if t <= end]
    for t_index in t_indices:
        outer.horizon_index(t_index, delta)

    def run(t_index):
        try:
            return estimate(method, outer, t_index, delta, rule, alpha, seed)
        except EstimationError:
            raise
        except DimsimError as e:
            raise EstimationError(str(e), method.method_id, float(outer.times[t_index])) from e

    with ThreadPoolExecutor(max_workers=threads) as executor:
        crosses = list(executor.map(run, t_indices))

    step_times = np.array([c.wall_time for c in crosses])
    curve = DimCurve(
        times=outer.times[list(t_indices)],
        dim=np.array([c.dim for c in crosses]),
        method=method,
        rule=rule,
        wall_time_total=float(step_times.sum()),
        step_times=step_times,
        crosses=crosses,
    )
    logger.info(
        "%s: %d time steps in %.3fs", method.method_id, len(t_indices), curve.wall_time_total
    )

    return curve


def rmse(curve, benchmark):
    """Absolute and relative root-mean-square deviation from `benchmark`.

    Returns
    -------
    (:obj:`float`, :obj:`float`)
        ``sqrt(mean((dim - bench)**2))`` and the same divided by the mean
        benchmark DIM.
    """
    check(
        len(curve.times) == len(benchmark.times)
        and np.allclose(curve.times, benchmark.times, rtol=0.0, atol=1e-12),
        "compare DIM curves on different time grids",
        GridError,
    )
    if len(curve.dim) == 0:
        return 0.0, 0.0

    absolute = float(np.sqrt(np.mean((curve.dim - benchmark.dim) ** 2)))
    scale = float(np.mean(benchmark.dim))
    if absolute == 0.0:
        return 0.0, 0.0
    return absolute, absolute / scale if scale > 0 else float("inf")


def simulate_config(config):
    """Outer paths of a :class:`dimsim.config.RunConfig`."""

    return simulate_outer(
        config.model.build(),
        config.instrument.build(),
        config.n_outer,
        config.times(),
        config.seed,
        config.threads,
    )


def run_benchmark(config, outer=None):
    """Compares every configured method against the benchmark method.

    The benchmark curve is built once; each method runs ``config.repeats``
    times for timing and its first curve is scored. A failing method yields
    a row with its error and the comparison goes on.

    Returns
    -------
    :obj:`BenchmarkReport`
    """
    check(len(config.methods) > 0, "compare without any method besides the benchmark")
    if outer is None:
        outer = simulate_config(config)

    t_indices = config.t_indices()
    args = (config.alpha, config.delta, config.rule, t_indices, config.seed, config.threads)
    benchmark = compute_dim(outer, config.benchmark.spec, *args)
    report = BenchmarkReport(benchmark=benchmark, curves=[benchmark])

    for entry in config.methods:
        method = entry.spec
        row = BenchmarkRow(method_id=method.method_id, spec=method.describe())
        try:
            runs = [compute_dim(outer, method, *args) for _ in range(config.repeats)]
        except DimsimError as e:
            logger.error("%s failed: %s", method.method_id, e)
            row.error = f"{type(e).__name__}: {e}"
            report.rows.append(row)
            continue

        walls = np.array([run.wall_time_total for run in runs])
        row.rmse_abs, row.rmse_rel = rmse(runs[0], benchmark)
        row.wall_time_mean = float(walls.mean())
        row.wall_time_sd = float(walls.std(ddof=1)) if len(walls) > 1 else 0.0
        row.repeats = len(runs)
        report.rows.append(row)
        report.curves.append(runs[0])

    report.rows.sort(key=lambda row: (row.failed, row.rmse_abs, row.method_id))

    return report


def _versions():
    result = {"python": platform.python_version()}
    for package in ("dimsim", "numpy", "scipy", "pandas"):
        try:
            result[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            result[package] = "unknown"
    return result


def _diagnostics(curves):
    """Per-method sums of the integer estimator diagnostics."""

    result = {}
    for curve in curves:
        totals = {}
        for cross in curve.crosses:
            for key, value in cross.diagnostics.items():
                if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
                    totals[key] = totals.get(key, 0) + int(value)
        if totals:
            result[curve.method_id] = totals
    return result


def write_manifest(out_dir, config=None, status="running", curves=(), outputs=()):
    """Writes the provenance record of a run.

    Returns
    -------
    :obj:`pathlib.Path`
    """
    out_dir = Path(out_dir)
    manifest = {
        "status": status,
        "config": None if config is None else config.to_dict(),
        "seed": None if config is None else config.seed,
        "versions": _versions(),
        "outputs": list(outputs),
        "diagnostics": _diagnostics(curves),
    }

    path = out_dir / MANIFEST
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as file:
            json.dump(manifest, file, indent=2)
    except OSError as e:
        raise ValidationError(f"Cannot write {path}: {e}") from e

    return path


def read_manifest(path):
    """The :class:`dimsim.config.RunConfig` recorded in a run manifest."""

    try:
        with open(path) as file:
            record = json.load(file)
    except OSError as e:
        raise ValidationError(f"Cannot read {path}: {e}") from e

    return RunConfig.from_dict(record["config"])


def _write_csv(frame, path):
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        raise ValidationError(f"Cannot write {path}: {e}") from e
    logger.info("wrote %s", path)
    return path


def curves_frame(curves):
    columns = ["t", "dim", "method_id", "rule"]
    frames = [
        pd.DataFrame(
            {
                "t": curve.times,
                "dim": curve.dim,
                "method_id": curve.method_id,
                "rule": curve.rule.value,
            }
        )
        for curve in curves
    ]
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)[columns]


def im_cross_frame(curves):
    columns = ["t", "path_id", "im", "method_id"]
    frames = [
        pd.DataFrame(
            {
                "t": cross.t,
                "path_id": np.arange(len(cross.per_path_im)),
                "im": cross.per_path_im,
                "method_id": curve.method_id,
            }
        )
        for curve in curves
        for cross in curve.crosses
    ]
    if not frames:
        return pd.DataFrame(columns=columns)
    return pd.concat(frames, ignore_index=True)[columns]


def emit(curves, report, out_dir, config=None, write_im_cross=False):
    """Writes the run files into `out_dir`.

    ``run_manifest.json`` is written first with status ``running`` and
    rewritten last, ``dim_curves.csv`` always, ``benchmark.csv`` and
    ``timings.csv`` when a report is given and ``im_cross.csv`` on request.
    Apart from ``timings.csv`` every file is a function of the configuration
    and the seed.

    Returns
    -------
    :obj:`list` of :obj:`pathlib.Path`
    """
    out_dir = Path(out_dir)
    write_manifest(out_dir, config, "running")
    written = [_write_csv(curves_frame(curves), out_dir / DIM_CURVES)]

    if report is not None:
        rows = pd.DataFrame(
            [
                {
                    "method_id": row.method_id,
                    "rmse_abs": row.rmse_abs,
                    "rmse_rel": row.rmse_rel,
                    "spec": row.spec,
                    "error": row.error,
                }
                for row in report.rows
            ],
            columns=["method_id", "rmse_abs", "rmse_rel", "spec", "error"],
        )
        written.append(_write_csv(rows, out_dir / BENCHMARK))

        timings = pd.DataFrame(
            [
                {
                    "method_id": row.method_id,
                    "wall_time_mean": row.wall_time_mean,
                    "wall_time_sd": row.wall_time_sd,
                    "repeats": row.repeats,
                }
                for row in report.rows
            ],
            columns=["method_id", "wall_time_mean", "wall_time_sd", "repeats"],
        )
        written.append(_write_csv(timings, out_dir / TIMINGS))

    if write_im_cross:
        written.append(_write_csv(im_cross_frame(curves), out_dir / IM_CROSS))

    failed = report is not None and report.failed
    write_manifest(
        out_dir,
        config,
        "partial" if failed else "complete",
        curves,
        [path.name for path in written],
    )

    return written
