import json

import pytest

from dimsim.config import BUNDLED, RunConfig, parse_config
from dimsim.estimators import Glsmc, JohnsonPercentile, NestedMC
from dimsim.exceptions import ValidationError
from dimsim.johnson import DEFAULT_Z

MINIMAL = {
    "instrument": {"type": "call_combination", "legs": [[1, 120], [-2, 150]], "maturity": 5},
    "model": {"type": "gbm", "spot0": 85, "rate_dom": 0.03, "rate_fgn": 0, "sigma": 0.1},
}


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_load(name):
    config = parse_config(name)

    assert config.n_outer == 20000
    assert config.alpha == 0.01
    assert config.benchmark.spec == NestedMC(n_inner=500)
    assert len(config.methods) >= 5


def test_callcombination_config():
    config = parse_config("callcombination")

    assert config.model.build().spot0 == 85.0
    assert config.instrument.build().maturity == 5.0
    assert config.resolved_steps == 100
    assert config.delta_steps == 1
    assert config.t_indices() == list(range(0, 100, 4))
    assert config.method("glsmc-x").spec.basis.degree == 7


def test_irswap_config():
    config = parse_config("irswap")

    assert config.resolved_steps == 375
    assert config.step == pytest.approx(0.04)
    assert len(config.t_indices()) == 75
    assert config.instrument.build().fixed_rate == 0.045


def test_defaults():
    config = RunConfig.from_dict(MINIMAL)

    assert config.delta == 0.05
    assert config.resolved_steps == 100
    assert config.rule == "full"
    assert config.seed == 0
    assert config.methods == ()
    assert config.johnson_z == DEFAULT_Z
    assert repr(config) == (
        "<run_config call_combination n_outer=20000 delta=0.05 alpha=0.01 seed=0>"
    )


def test_alpha_out_of_range():
    with pytest.raises(ValidationError, match="alpha=1.5"):
        RunConfig.from_dict({**MINIMAL, "alpha": 1.5})


def test_unknown_key():
    with pytest.raises(ValidationError, match="'colour'"):
        RunConfig.from_dict({**MINIMAL, "colour": "red"})


def test_unknown_method_key():
    record = {**MINIMAL, "methods": [{"name": "glsmc", "colour": "red"}]}

    with pytest.raises(ValidationError, match=r"methods\[0\]\.colour"):
        RunConfig.from_dict(record)


def test_missing_required_key():
    with pytest.raises(ValidationError, match="'model'"):
        RunConfig.from_dict({"instrument": MINIMAL["instrument"]})


def test_bad_instrument():
    record = {**MINIMAL, "instrument": {"type": "call_combination", "legs": [], "maturity": 5}}

    with pytest.raises(ValidationError, match="Cannot build instrument"):
        RunConfig.from_dict(record)


def test_delta_off_grid():
    with pytest.raises(ValidationError, match="multiple of the grid step"):
        RunConfig.from_dict({**MINIMAL, "delta": 0.05, "n_steps": 30})


def test_too_few_paths():
    with pytest.raises(ValidationError, match="n_outer=50"):
        RunConfig.from_dict({**MINIMAL, "n_outer": 50})


def test_duplicate_method_ids():
    record = {**MINIMAL, "methods": [{"name": "glsmc"}, {"name": "glsmc"}]}

    with pytest.raises(ValidationError, match="'glsmc' twice"):
        RunConfig.from_dict(record)


def test_johnson_z_default_reaches_methods():
    record = {**MINIMAL, "johnson_z": 0.4, "methods": [{"name": "johnson_percentile"}]}
    config = RunConfig.from_dict(record)

    assert config.methods[0].spec.z == 0.4
    assert config.method("raw_pseudo").spec.k == 200


def test_method_lookup():
    record = {**MINIMAL, "methods": [{"name": "glsmc", "id": "mine"}]}
    config = RunConfig.from_dict(record)

    assert config.method("mine").spec == Glsmc(label="mine")
    assert config.method("glsmc").method_id == "mine"
    assert config.method("nested_mc").spec == NestedMC(n_inner=500)
    assert config.method("johnson_percentile").spec == JohnsonPercentile()

    with pytest.raises(ValidationError):
        config.method("no_such_method")


def test_dict_round_trip():
    config = parse_config("fxcall")

    result = RunConfig.from_dict(json.loads(json.dumps(config.to_dict())))

    assert result == config


def test_toml_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        "n_outer = 500\n"
        "alpha = 0.05\n"
        "[instrument]\n"
        'type = "fx_call"\n'
        "strike = 105.0\n"
        "maturity = 1.0\n"
        "[model]\n"
        'type = "gbm"\n'
        "spot0 = 100.0\n"
        "rate_dom = 0.08\n"
        "rate_fgn = 0.02\n"
        "sigma = 0.3\n"
        "[[methods]]\n"
        'name = "glsmc"\n'
    )

    config = parse_config(path)

    assert config.n_outer == 500
    assert config.alpha == 0.05
    assert config.instrument.kind == "fx_call"
    assert config.methods[0].method_id == "glsmc"


def test_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(MINIMAL))

    config = parse_config(path, {"seed": 7, "alpha": None})

    assert config.seed == 7
    assert config.alpha == 0.01


def test_unreadable_files(tmp_path):
    with pytest.raises(ValidationError, match="Cannot read configuration"):
        parse_config(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ValidationError, match="Cannot parse configuration"):
        parse_config(broken)

    with pytest.raises(ValidationError, match="bundled ones are"):
        parse_config("nosuchconfig")
