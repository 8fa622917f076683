import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np
import pandas as pd
from tabulate import tabulate

from dimsim.config import BUNDLED, parse_config
from dimsim.exceptions import DimsimError, ValidationError
from dimsim.johnson import DEFAULT_Z, MomentSet, fit_corrected, fit_percentiles
from dimsim.path_io import export_paths, import_paths
from dimsim.pipeline import compute_dim, emit, run_benchmark, simulate_config, write_manifest

logger = logging.getLogger("dimsim")

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"


class ConfigurationError(Exception):
    """Wraps errors raised while reading the configuration (exit status 2)."""


def _add_run_flags(parser):
    parser.add_argument(
        "--config",
        required=True,
        help=f"JSON or TOML run file, or a bundled name ({', '.join(BUNDLED)})",
    )
    parser.add_argument("--alpha", type=float, help="quantile level (default 0.01)")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--threads", type=int, help="worker cap (default: all cores)")
    parser.add_argument("--out", help="output directory (default out)")
    parser.add_argument("--n-outer", type=int, help="outer paths (default 20000)")


def _add_paths_flag(parser):
    parser.add_argument(
        "--paths", help="estimate on a path CSV written by 'simulate' instead of simulating"
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dimsim",
        description="Future value-at-risk and dynamic initial margin on Monte Carlo paths.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="simulate and export outer paths")
    _add_run_flags(simulate)

    dim = commands.add_parser("dim", help="DIM curve of one method")
    _add_run_flags(dim)
    _add_paths_flag(dim)
    dim.add_argument(
        "--method", required=True, help="method id from the configuration, or a method name"
    )

    compare = commands.add_parser("compare", help="benchmark every configured method")
    _add_run_flags(compare)
    _add_paths_flag(compare)

    fit = commands.add_parser("fit-johnson", help="fit a Johnson law to a sample file")
    fit.add_argument("samples", help="file with one sample per line")
    fit.add_argument("--method", choices=("moments", "percentile"), default="percentile")
    fit.add_argument("--z", type=float, default=DEFAULT_Z, help="percentile spacing")
    fit.add_argument("--out", help="write the JSON here instead of stdout")

    return parser


def _config(args):
    overrides = {
        "alpha": args.alpha,
        "seed": args.seed,
        "threads": args.threads,
        "out_dir": args.out,
        "n_outer": args.n_outer,
    }
    try:
        return parse_config(args.config, overrides)
    except ValidationError as e:
        raise ConfigurationError(str(e)) from e


def _outer(config, args):
    if not args.paths:
        return simulate_config(config)

    try:
        outer = import_paths(args.paths)
    except ValidationError as e:
        raise ConfigurationError(str(e)) from e

    times = config.times()
    same = len(outer.times) == len(times) and np.allclose(outer.times, times, rtol=0.0, atol=1e-9)
    if not same:
        raise ConfigurationError(
            f"Cannot use the paths in {args.paths}: their time grid is not the configured one."
        )
    return outer


def run_simulate(args):
    config = _config(args)
    out_dir = Path(config.out_dir)
    write_manifest(out_dir, config)

    outer = simulate_config(config)
    csv_path, json_path = export_paths(outer, out_dir / "paths.csv")
    write_manifest(out_dir, config, "complete", outputs=[csv_path.name, json_path.name])

    print(f"Wrote {csv_path}")
    print(f"Wrote {json_path}")
    return 0


def run_dim(args):
    config = _config(args)
    try:
        method = config.method(args.method).spec
    except ValidationError as e:
        raise ConfigurationError(str(e)) from e

    write_manifest(config.out_dir, config)
    outer = _outer(config, args)
    curve = compute_dim(
        outer,
        method,
        config.alpha,
        config.delta,
        config.rule,
        config.t_indices(),
        config.seed,
        config.threads,
    )

    for path in emit([curve], None, config.out_dir, config, config.write_im_cross):
        print(f"Wrote {path}")
    return 0


def run_compare(args):
    config = _config(args)
    write_manifest(config.out_dir, config)
    report = run_benchmark(config, _outer(config, args))

    table = [
        [
            row.method_id,
            row.rmse_abs,
            row.rmse_rel,
            f"{row.wall_time_mean:.3f} ± {row.wall_time_sd:.3f}",
            row.error or row.spec,
        ]
        for row in report.rows
    ]
    print(tabulate(table, headers=["Method", "RMSE", "Rel. RMSE", "Time [s]", "Spec"]))

    for path in emit(report.curves, report, config.out_dir, config, config.write_im_cross):
        print(f"Wrote {path}")

    if report.failed:
        print("Some methods failed; see benchmark.csv.", file=sys.stderr)
        return 1
    return 0


def _read_samples(path):
    try:
        frame = pd.read_csv(path, header=None, comment="#")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigurationError(f"Cannot read samples from {path}: {e}") from e
    return frame.iloc[:, 0].to_numpy(dtype=float)


def run_fit_johnson(args):
    samples = _read_samples(args.samples)

    if args.method == "percentile":
        params = fit_percentiles(samples, args.z)
    else:
        mean = float(np.mean(samples))
        centered = samples - mean
        moments = MomentSet.from_central(
            mean, *(float(np.mean(centered**k)) for k in range(2, 5))
        )
        params = fit_corrected(moments)

    text = json.dumps(params.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"Wrote {args.out}")
    else:
        print(text)
    return 0


COMMANDS = {
    "simulate": run_simulate,
    "dim": run_dim,
    "compare": run_compare,
    "fit-johnson": run_fit_johnson,
}


def main(argv=None):
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT
    )

    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as e:
        print(f"ConfigurationError: {e}", file=sys.stderr)
        return 2
    except DimsimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
