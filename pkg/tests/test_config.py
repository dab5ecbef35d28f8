import json
import logging
import math

import pytest
from pydantic import ValidationError

from overdet_lab.config import RunConfig, load_config, merge_sections, resolve_threads
from overdet_lab.constants import THREADS_ENV_VAR
from overdet_lab.geometry import BoundaryShape


def test_packaged_defaults():
    config = load_config()
    assert config.resolution.n_r == 32
    assert config.resolution.n_theta == 64
    assert config.c_choice == "mean"
    assert config.sweep.ps[-1] == math.inf
    assert config.shape.to_shape() == BoundaryShape(0.0)


def test_yaml_file_overrides_defaults(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("shape:\n  preset: cos3\n  epsilon: 0.02\nresolution:\n  n_r: 24\n")
    config = load_config(path)
    assert config.resolution.n_r == 24
    assert config.resolution.n_theta == 64
    assert config.shape.to_shape() == BoundaryShape.preset("cos3", 0.02)


def test_json_file_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"sweep": {"ps": ["2", "inf"]}, "c_choice": "c0"}))
    config = load_config(path, overrides={"seed": 7})
    assert config.sweep.ps == [2.0, math.inf]
    assert config.c_choice == "c0"
    assert config.seed == 7


def test_unknown_section_is_ignored(caplog):
    with caplog.at_level(logging.WARNING, logger="overdet_lab.config"):
        merged = merge_sections({"seed": 0}, {"plotting": {"dpi": 300}})
    assert merged == {"seed": 0}
    assert "plotting" in caplog.text


def test_explicit_modes():
    config = RunConfig.model_validate({"shape": {"epsilon": 0.01, "modes": [{"k": 2, "a": 1.0}]}})
    assert config.shape.to_shape() == BoundaryShape.preset("cos2", 0.01)


@pytest.mark.parametrize("data", [
    {"sweep": {"epsilons": [0.01, 0.02]}},
    {"sweep": {"epsilons": [0.02, -0.01]}},
    {"sweep": {"ps": [0.5]}},
    {"resolution": {"n_theta": 63}},
    {"resolution": {"n_r": 2}},
    {"shape": {"preset": "cos9"}},
    {"shape": {"epsilon": 0.01, "modes": [{"k": 20, "a": 1.0}]}, "resolution": {"n_theta": 64}},
    {"c_choice": "median"},
    {"margins": {"sigma": 0.3}},
])
def test_invalid_values_raise(data):
    with pytest.raises(ValidationError):
        RunConfig.model_validate(data)


def test_doubled_resolution_is_capped():
    res = RunConfig().resolution.doubled()
    assert (res.n_r, res.n_theta) == (64, 128)


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "3")
    assert resolve_threads() == 3
    monkeypatch.setenv(THREADS_ENV_VAR, "0")
    assert resolve_threads() == 0
    monkeypatch.setenv(THREADS_ENV_VAR, "-1")
    with pytest.raises(ValueError):
        resolve_threads()
    monkeypatch.delenv(THREADS_ENV_VAR)
    assert resolve_threads() >= 1
