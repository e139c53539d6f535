import json

import pytest

from apgauge.config import load_config, shipped, validate
from apgauge.errors import ConfigError, InvalidPotential

BASE = {"schema_version": 1, "basis": ["1", "sqrt(2)"],
        "coefficients": [{"coeffs": [1, 0], "re": 0.003}, {"coeffs": [0, 1], "re": 0.002}]}


def test_minimal_config_gets_defaults():
    cfg = load_config(BASE)
    assert cfg.N == 3 and cfg.mollifier.name == "standard"
    assert len(cfg.ladder) == 12
    assert cfg.potential.coefficient((-1, 0)) == 0.003


@pytest.mark.parametrize("patch, path", [
    ({"N": 9}, "N"),
    ({"mollifier": "box"}, "mollifier"),
    ({"epsilon": {"max": 0.5}}, "epsilon.max"),
    ({"coefficients": [{"coeffs": [1, "x"]}]}, "coefficients[0].coeffs[1]"),
    ({"surprise": 1}, ""),
    ({"schema_version": 2}, "schema_version"),
])
def test_schema_errors_name_the_field(patch, path):
    doc = {**BASE, **patch}
    with pytest.raises(ConfigError) as exc:
        validate(doc)
    assert exc.value.path == path


def test_coefficients_xor_decay():
    both = {**BASE, "decay": {"C": 0.003, "P": 60}}
    with pytest.raises(ConfigError) as exc:
        load_config(both)
    assert exc.value.path == "coefficients|decay"
    neither = {k: v for k, v in BASE.items() if k != "coefficients"}
    with pytest.raises(ConfigError):
        load_config(neither)


def test_dimension_mismatch():
    doc = {**BASE, "coefficients": [{"coeffs": [1, 0, 0], "re": 0.001}]}
    with pytest.raises(ConfigError) as exc:
        load_config(doc)
    assert exc.value.path == "coefficients[0].coeffs"
    with pytest.raises(ConfigError) as exc:
        load_config({**BASE, "gap_theta": [1]})
    assert exc.value.path == "gap_theta"


def test_dependent_basis_and_large_norm():
    with pytest.raises(ConfigError):
        load_config({**BASE, "basis": ["sqrt(2)", "sqrt(8)"]})
    with pytest.raises(InvalidPotential):
        load_config({**BASE, "coefficients": [{"coeffs": [1, 0], "re": 0.009}]})


def test_file_and_name_loading(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(BASE))
    assert load_config(str(p)).potential.support == load_config(BASE).potential.support
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config("no_such_config")


@pytest.mark.parametrize("name", shipped())
def test_shipped_configs_load(name):
    cfg = load_config(name)
    assert cfg.name == name
    assert load_config(f"{name}.json").doc == cfg.doc


def test_shipped_set():
    assert len(shipped()) == 10
