"""Run configuration.

A run is described by a JSON (or TOML) document::

    {
        "instrument": {"type": "call_combination", "legs": [[1, 120], [-2, 150]],
                       "maturity": 5},
        "model": {"type": "gbm", "spot0": 85, "rate_dom": 0.03, "rate_fgn": 0,
                  "sigma": 0.1},
        "delta": 0.05,
        "methods": [{"name": "glsmc"}, {"name": "jlsmc", "id": "jlsmc-project"}]
    }

Only ``instrument`` and ``model`` are required; see :class:`RunConfig` for
the other keys and their defaults. Three reference configurations ship with
the package and can be loaded by name: ``callcombination``, ``irswap`` and
``fxcall``.
"""

from dataclasses import dataclass, field, fields
import json
import logging
from pathlib import Path
from typing import Optional

from importlib_resources import files
import tomli

from dimsim.estimators.method_spec import (
    KURTOSIS_CONVENTIONS,
    DeltaGammaCF,
    JohnsonPercentile,
    MethodSpec,
    NestedMC,
    method_from_dict,
)
from dimsim.exceptions import ValidationError
from dimsim.johnson import DEFAULT_Z
from dimsim.models.instrument import instrument_from_dict
from dimsim.models.parameters import model_from_dict, model_to_dict
from dimsim.simulation import InclusionRule, time_grid
from dimsim.utils.check import check, check_probability

logger = logging.getLogger(__name__)

BUNDLED = ("callcombination", "irswap", "fxcall")


def _build(factory, record, where):
    try:
        return factory(record)
    except TypeError as e:
        raise ValidationError(f"Cannot build {where}: {e}.") from e
    except ValidationError as e:
        raise ValidationError(f"Cannot build {where}: {e}") from e


@dataclass(frozen=True)
class InstrumentConfig:
    """Instrument entry, kept in the canonical form of the instrument's `to_dict`."""

    kind: str
    options: dict = field(default_factory=dict)

    def build(self):
        return instrument_from_dict({"type": self.kind, **self.options})

    def to_dict(self):
        return {"type": self.kind, **self.options}

    @staticmethod
    def from_dict(record, where="instrument"):
        check(isinstance(record, dict), f"read {where}: expected an object")
        record = _build(instrument_from_dict, record, where).to_dict()
        kind = record.pop("type")
        return InstrumentConfig(kind, record)


@dataclass(frozen=True)
class ModelConfig:
    """Driver model entry, ``{"type": "gbm"|"g1pp", ...}``."""

    kind: str
    options: dict = field(default_factory=dict)

    def build(self):
        return model_from_dict({"type": self.kind, **self.options})

    def to_dict(self):
        return {"type": self.kind, **self.options}

    @staticmethod
    def from_dict(record, where="model"):
        check(isinstance(record, dict), f"read {where}: expected an object")
        record = model_to_dict(_build(model_from_dict, record, where))
        kind = record.pop("type")
        return ModelConfig(kind, record)


@dataclass(frozen=True)
class MethodConfig:
    spec: MethodSpec

    @property
    def method_id(self):
        return self.spec.method_id

    def to_dict(self):
        return self.spec.to_dict()

    @staticmethod
    def from_dict(record, where="method", johnson_z=DEFAULT_Z, kurtosis_convention="excess"):
        check(isinstance(record, dict), f"read {where}: expected an object")
        record = dict(record)
        if record.get("name") == JohnsonPercentile.name:
            record.setdefault("z", johnson_z)
        if record.get("name") == DeltaGammaCF.name:
            record.setdefault("kurtosis_convention", kurtosis_convention)
        return MethodConfig(method_from_dict(record, where))


def _default_benchmark():
    return MethodConfig(NestedMC(n_inner=500))


@dataclass(frozen=True)
class RunConfig:
    """A validated run description.

    Parameters
    ----------
    instrument : :obj:`InstrumentConfig`
    model : :obj:`ModelConfig`
    delta : :obj:`float`
        Margin period of risk in years; it must be a whole number of grid
        steps.
    n_outer : :obj:`int`
        At least 100.
    n_steps : :obj:`int`, optional
        Grid intervals over ``[0, maturity]``, by default ``maturity / delta``.
    dim_stride : :obj:`int`
        DIM is estimated at every `dim_stride`-th eligible grid time.
    alpha : :obj:`float`
    rule : :obj:`str`
        MPoR cashflow inclusion, ``full``, ``none``, ``positive`` or ``negative``.
    seed : :obj:`int`
    repeats : :obj:`int`
        Timing repetitions per compared method.
    threads : :obj:`int`, optional
        Worker cap; None uses the hardware parallelism.
    out_dir : :obj:`str`
    benchmark : :obj:`MethodConfig`
    methods : :obj:`tuple` of :obj:`MethodConfig`
    cf_kurtosis_convention : :obj:`str`
        Default kurtosis convention of ``delta_gamma_cf`` entries.
    johnson_z : :obj:`float`
        Default percentile spacing of ``johnson_percentile`` entries.
    write_im_cross : :obj:`bool`
        Also write the per-path initial margins.
    """

    instrument: InstrumentConfig
    model: ModelConfig
    delta: float = 0.05
    n_outer: int = 20000
    n_steps: Optional[int] = None
    dim_stride: int = 1
    alpha: float = 0.01
    rule: str = "full"
    seed: int = 0
    repeats: int = 3
    threads: Optional[int] = None
    out_dir: str = "out"
    benchmark: MethodConfig = field(default_factory=_default_benchmark)
    methods: tuple = ()
    cf_kurtosis_convention: str = "excess"
    johnson_z: float = DEFAULT_Z
    write_im_cross: bool = False

    def __post_init__(self):
        check_probability(self.alpha)
        check(self.delta > 0, f"use delta={self.delta}; it must be positive")
        check(self.n_outer >= 100, f"use n_outer={self.n_outer}; at least 100 are needed")
        check(self.dim_stride >= 1, f"use dim_stride={self.dim_stride}")
        check(self.repeats >= 1, f"use repeats={self.repeats}")
        check(
            self.threads is None or self.threads >= 1,
            f"use threads={self.threads}; it must be positive",
        )
        check(
            self.cf_kurtosis_convention in KURTOSIS_CONVENTIONS,
            f"use cf_kurtosis_convention '{self.cf_kurtosis_convention}'; choose excess or raw",
        )
        check(self.johnson_z > 0, f"use johnson_z={self.johnson_z}; it must be positive")
        InclusionRule.from_name(self.rule)

        maturity = self.instrument.build().maturity
        check(self.delta <= maturity, f"use delta={self.delta} beyond maturity {maturity}")
        if self.n_steps is not None:
            check(self.n_steps >= 1, f"use n_steps={self.n_steps}")
        check(
            abs(self.delta_steps * self.step - self.delta) <= 1e-9 * max(1.0, self.delta),
            f"use delta={self.delta}; it must be a multiple of the grid step {self.step:.6g}",
        )

        ids = [m.method_id for m in self.methods]
        duplicate = next((i for i in ids if ids.count(i) > 1), None)
        check(duplicate is None, f"use method id '{duplicate}' twice; set distinct ids")

    @property
    def maturity(self):
        return self.instrument.build().maturity

    @property
    def resolved_steps(self):
        if self.n_steps is not None:
            return self.n_steps
        return max(1, int(round(self.maturity / self.delta)))

    @property
    def step(self):
        return self.maturity / self.resolved_steps

    @property
    def delta_steps(self):
        return max(1, int(round(self.delta / self.step)))

    def times(self):
        return time_grid(self.maturity, self.resolved_steps)

    def t_indices(self):
        """Grid indices whose MPoR ends on or before maturity."""

        last = self.resolved_steps - self.delta_steps
        return list(range(0, last + 1, self.dim_stride))

    def method(self, name):
        """The configured method with id or name `name`."""

        for entry in self.methods:
            if name in (entry.method_id, entry.spec.name):
                return entry
        if name in (self.benchmark.method_id, self.benchmark.spec.name):
            return self.benchmark
        return MethodConfig.from_dict(
            {"name": name}, "--method", self.johnson_z, self.cf_kurtosis_convention
        )

    def to_dict(self):
        result = {}
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "methods":
                value = [entry.to_dict() for entry in value]
            elif hasattr(value, "to_dict"):
                value = value.to_dict()
            result[item.name] = value
        return result

    @staticmethod
    def from_dict(record):
        check(isinstance(record, dict), "read a configuration that is not an object")
        record = dict(record)
        known = {item.name for item in fields(RunConfig)}

        for key in record:
            if key not in known:
                raise ValidationError(f"Cannot use unknown configuration key '{key}'.")
        for key in ("instrument", "model"):
            check(key in record, f"run without the required key '{key}'")

        johnson_z = record.get("johnson_z", DEFAULT_Z)
        convention = record.get("cf_kurtosis_convention", "excess")

        record["instrument"] = InstrumentConfig.from_dict(record["instrument"])
        record["model"] = ModelConfig.from_dict(record["model"])
        if "benchmark" in record:
            record["benchmark"] = MethodConfig.from_dict(
                record["benchmark"], "benchmark", johnson_z, convention
            )

        methods = record.get("methods", [])
        check(isinstance(methods, list), "read methods: expected a list")
        record["methods"] = tuple(
            MethodConfig.from_dict(entry, f"methods[{i}]", johnson_z, convention)
            for i, entry in enumerate(methods)
        )

        try:
            return RunConfig(**record)
        except TypeError as e:
            raise ValidationError(f"Cannot build the configuration: {e}.") from e

    def __repr__(self):
        result = f"<run_config {self.instrument.kind} n_outer={self.n_outer}"
        result += f" delta={self.delta} alpha={self.alpha} seed={self.seed}"
        result += ">"

        return result


def _read(path):
    path = Path(path)

    if not path.suffix and not path.exists():
        check(
            str(path) in BUNDLED,
            f"find configuration '{path}'; bundled ones are {', '.join(BUNDLED)}",
        )
        text = files("dimsim").joinpath("configs", f"{path}.json").read_text()
        return json.loads(text)

    try:
        if path.suffix == ".toml":
            with open(path, mode="rb") as fp:
                return tomli.load(fp)
        with open(path) as fp:
            return json.load(fp)
    except OSError as e:
        raise ValidationError(f"Cannot read configuration {path}: {e}") from e
    except (json.JSONDecodeError, tomli.TOMLDecodeError) as e:
        raise ValidationError(f"Cannot parse configuration {path}: {e}") from e


def parse_config(path=None, overrides=None):
    """Reads and validates a run configuration.

    Parameters
    ----------
    path : :obj:`str` or :obj:`pathlib.Path`, optional
        A ``.json`` or ``.toml`` file, or the name of a bundled
        configuration. Without a path `overrides` must describe the whole run.
    overrides : :obj:`dict`, optional
        Top-level keys replacing the file's values; None values are ignored.

    Returns
    -------
    :obj:`RunConfig`

    Raises
    ------
    ValidationError
        Naming the offending key and the violated constraint.
    """
    record = _read(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            record[key] = value

    config = RunConfig.from_dict(record)
    logger.debug("parsed %r", config)

    return config

