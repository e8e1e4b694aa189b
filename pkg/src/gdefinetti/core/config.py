import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import load_dotenv

from .exceptions import ConfigurationError

# Load environment variables from a .env file if present
load_dotenv()

SETTINGS_FILENAME = "gdefinetti.yaml"


class GdfConfig:
    """
    Centralized configuration management for gdefinetti.

    Values are looked up in this order:
    - runtime overrides set with ``set()``
    - ``GDF_<KEY>`` environment variables
    - an optional ``gdefinetti.yaml`` settings file (or ``GDF_CONFIG_FILE``)
    - the class defaults
    """

    # Default configuration values
    _defaults: Dict[str, Any] = {
        "seed": 0,
        "threads": 1,
        "batches": 100,
        "chunk_size": 20000,
        "max_condition": 1e12,
        "max_fock_dimension": 2_000_000,
        "tail_tolerance": 1e-8,
        "log_level": "WARNING",
        "log_format": "plain",
    }

    # Keys whose environment/YAML values are parsed as numbers
    _types: Dict[str, type] = {
        "seed": int,
        "threads": int,
        "batches": int,
        "chunk_size": int,
        "max_condition": float,
        "max_fock_dimension": int,
        "tail_tolerance": float,
    }

    def __init__(self, working_directory: Optional[Union[str, Path]] = None):
        """
        Initialize configuration with optional working directory override.

        Args:
            working_directory: Directory searched for the settings file
                (defaults to current directory)
        """
        self.working_directory = Path(working_directory or os.getcwd())
        self._config_cache: Dict[str, Any] = {}
        self._file_values: Optional[Dict[str, Any]] = None

    def get_settings_path(self) -> Path:
        """Path of the YAML settings file (may not exist)."""
        override = os.getenv("GDF_CONFIG_FILE")
        if override:
            return Path(override)
        return self.working_directory / SETTINGS_FILENAME

    def _load_file_values(self) -> Dict[str, Any]:
        if self._file_values is not None:
            return self._file_values

        path = self.get_settings_path()
        values: Dict[str, Any] = {}
        if path.is_file():
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    loaded = yaml.safe_load(handle) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Invalid YAML: {e}", str(path))
            if not isinstance(loaded, dict):
                raise ConfigurationError("Settings file must contain a mapping", str(path))
            values = {str(k).lower(): v for k, v in loaded.items()}
        self._file_values = values
        return values

    def _coerce(self, key: str, value: Any) -> Any:
        target = self._types.get(key)
        if target is None or value is None:
            return value
        try:
            if target is int:
                # allow "1e6" style values for counts
                return int(float(value))
            return target(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"Setting '{key}' must be {target.__name__}, got {value!r}")

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value.

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        key = key.lower()
        if key in self._config_cache:
            return self._config_cache[key]

        # Check environment variables first (with GDF_ prefix)
        env_value = os.getenv(f"GDF_{key.upper()}")
        if env_value is not None:
            return self._coerce(key, env_value)

        file_values = self._load_file_values()
        if key in file_values:
            return self._coerce(key, file_values[key])

        return self._defaults.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """
        Set a runtime configuration value.

        Args:
            key: Configuration key
            value: Configuration value
        """
        key = key.lower()
        self._config_cache[key] = self._coerce(key, value)

    def reset(self) -> None:
        """Drop runtime overrides and re-read the settings file on next access."""
        self._config_cache.clear()
        self._file_values = None

    def get_seed(self) -> int:
        """Master seed used when a command does not pass one explicitly."""
        return self.get("seed")

    def get_threads(self) -> int:
        """Worker cap for Monte-Carlo batches."""
        return max(1, self.get("threads"))

    def get_log_level(self) -> str:
        """Get the logging level."""
        return str(self.get("log_level")).upper()

    def to_dict(self) -> Dict[str, Any]:
        """Export current configuration as a dictionary."""
        return {key: self.get(key) for key in self._defaults}


# Global configuration instance
config = GdfConfig()
