"""
Configuration management for the condensation laboratory.

Handles loading, validation, and access to configuration settings. The
loader is YAML; JSON config files passed with --config load through the same
path because YAML is a superset of JSON.
"""

import os
import yaml
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from src.core.errors import ParameterError

DEFAULT_CONFIG_PATH = 'config/settings.yaml'

WORKERS_ENV = 'CONDENSATION_LAB_WORKERS'

DEFAULTS: Dict[str, Any] = {
    'seed': 20240601,
    'workers': 1,
    'exact': {
        'enumeration_cap': 30,
        'chunk_bits': 20,
    },
    'analytic': {
        'r_tolerance': 1e-8,
        'x_tolerance': 1e-10,
    },
    'experiments': {
        'trials': 100,
        'gate_sigmas': 3.0,
        'time_budget': 600.0,
    },
    'whitening': {
        'core_l': 10,
    },
    'logging': {
        'level': 'INFO',
        'file': None,
    },
}


def _deep_merge(base: Dict[str, Any], other: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in other.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """Manages configuration loading and access for the laboratory."""

    def __init__(self, config_path: Optional[str] = None, required: bool = False):
        """
        Initialize the configuration manager.

        Args:
            config_path: Path to the YAML (or JSON) configuration file
            required: Raise if the file is missing instead of using defaults
        """
        self.logger = logging.getLogger(__name__)
        self.config_path = Path(config_path) if config_path else None
        self._config: Dict[str, Any] = {}

        self._load_config(required)
        self._validate_config()

    def _load_config(self, required: bool) -> None:
        """Load configuration from file on top of the built-in defaults."""
        loaded: Dict[str, Any] = {}
        if self.config_path is not None:
            if not self.config_path.exists():
                if required:
                    raise ParameterError(f"Configuration file not found: {self.config_path}")
                self.logger.debug(f"Configuration file {self.config_path} not found, using defaults")
            else:
                try:
                    with open(self.config_path, 'r', encoding='utf-8') as file:
                        loaded = yaml.safe_load(file) or {}
                except yaml.YAMLError as e:
                    self.logger.error(f"Error parsing configuration: {e}")
                    raise ParameterError(f"Cannot parse configuration file {self.config_path}: {e}") from e
                if not isinstance(loaded, dict):
                    raise ParameterError(f"Configuration file {self.config_path} must contain a mapping")
                self.logger.info(f"Configuration loaded from {self.config_path}")

        self._config = _deep_merge(DEFAULTS, loaded)

        env_workers = os.environ.get(WORKERS_ENV)
        if env_workers:
            try:
                self._config['workers'] = int(env_workers)
            except ValueError:
                self.logger.warning(f"Ignoring non-integer {WORKERS_ENV}={env_workers!r}")

    def _validate_config(self) -> None:
        """Validate the loaded configuration."""
        for section in ['analytic', 'exact', 'experiments', 'logging']:
            if not isinstance(self._config.get(section), dict):
                self.logger.warning(f"Missing configuration section: {section}")

        cap = self.get('exact.enumeration_cap')
        if not isinstance(cap, int) or cap < 1 or cap > 40:
            self.logger.warning(f"Unusual exact.enumeration_cap {cap!r}; expected an integer in [1, 40]")

        workers = self.get('workers')
        if not isinstance(workers, int) or workers < 1:
            self.logger.warning(f"Invalid workers setting {workers!r}, falling back to 1")
            self._config['workers'] = 1

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value using dot notation.

        Args:
            key: Configuration key in dot notation (e.g., 'exact.enumeration_cap')
            default: Default value if key is not found

        Returns:
            Configuration value or default
        """
        keys = key.split('.')
        value = self._config

        try:
            for k in keys:
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def merged(self, overrides: Dict[str, Any]) -> Dict[str, Any]:
        """
        Resolve flag values against the configuration.

        Explicit flags (values that are not None) win; otherwise a top-level
        key of the same name from the config file is used.

        Args:
            overrides: Flag values keyed by flag name

        Returns:
            Flat resolved dictionary
        """
        resolved: Dict[str, Any] = {}
        for key, value in overrides.items():
            if value is None:
                value = self._config.get(key)
            resolved[key] = value
        return resolved

    @property
    def enumeration_cap(self) -> int:
        """Vertex cap for exhaustive enumeration."""
        return int(self.get('exact.enumeration_cap', 30))

    def get_logging_config(self) -> Dict[str, Any]:
        """Get logging configuration."""
        return self._config.get('logging', {})

    def get_all(self) -> Dict[str, Any]:
        """Get the complete configuration dictionary."""
        return self._config.copy()
