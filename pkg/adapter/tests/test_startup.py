"""Startup behavior: bad model configuration must exit nonzero before
serving."""

import json

from citeward_adapter.__main__ import main
from citeward_adapter.config import AdapterConfig, NliConfig, load_config

import pytest


def test_unresolvable_model_exits_nonzero(tmp_path, capsys):
    config_path = tmp_path / "config.json"
    config_path.write_text(
        json.dumps({"nli": {"family": "hf-classifier", "model_id": "no/such-model"}})
    )
    code = main(["--config", str(config_path)])
    assert code == 1
    assert "startup failed" in capsys.readouterr().err


def test_hf_family_requires_model_id():
    with pytest.raises(ValueError):
        NliConfig(family="hf-classifier")


def test_config_defaults_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"port": 9000, "generation": {"family": "extractive"}}))
    config = load_config(path)
    assert config.port == 9000
    assert config == AdapterConfig(port=9000)
