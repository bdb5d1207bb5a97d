"""
Tests for configuration loading.
"""

import json

import pytest

from src.core.config import WORKERS_ENV, ConfigManager
from src.core.errors import ParameterError


def test_defaults_without_file(tmp_path):
    config = ConfigManager(str(tmp_path / "absent.yaml"))
    assert config.get('seed') == 20240601
    assert config.enumeration_cap == 30
    assert config.get('experiments.gate_sigmas') == 3.0
    assert config.get('no.such.key', 'fallback') == 'fallback'


def test_required_file_must_exist(tmp_path):
    with pytest.raises(ParameterError):
        ConfigManager(str(tmp_path / "absent.yaml"), required=True)


def test_yaml_overrides_are_deep_merged(tmp_path):
    path = tmp_path / "settings.yaml"
    path.write_text("exact:\n  enumeration_cap: 20\nseed: 9\n")
    config = ConfigManager(str(path))
    assert config.enumeration_cap == 20
    assert config.get('exact.chunk_bits') == 20
    assert config.get('seed') == 9


def test_json_file(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({'experiments': {'trials': 7}}))
    assert ConfigManager(str(path)).get('experiments.trials') == 7


def test_malformed_files(tmp_path):
    broken = tmp_path / "broken.yaml"
    broken.write_text("seed: [1, 2\n")
    with pytest.raises(ParameterError):
        ConfigManager(str(broken))
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("42\n")
    with pytest.raises(ParameterError):
        ConfigManager(str(scalar))


def test_merged_prefers_flags(tmp_path):
    path = tmp_path / "settings.yaml"
    path.write_text("seed: 9\ntrials: 4\n")
    config = ConfigManager(str(path))
    resolved = config.merged({'seed': 1, 'trials': None, 'k': None})
    assert resolved == {'seed': 1, 'trials': 4, 'k': None}


def test_workers_environment(tmp_path, monkeypatch):
    path = tmp_path / "settings.yaml"
    path.write_text("workers: 2\n")
    monkeypatch.setenv(WORKERS_ENV, '5')
    assert ConfigManager(str(path)).get('workers') == 5
    monkeypatch.setenv(WORKERS_ENV, 'many')
    assert ConfigManager(str(path)).get('workers') == 2


def test_invalid_workers_fall_back(tmp_path, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    path = tmp_path / "settings.yaml"
    path.write_text("workers: 0\n")
    assert ConfigManager(str(path)).get('workers') == 1
