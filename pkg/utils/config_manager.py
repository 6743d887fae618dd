"""Configuration manager for the Ising laboratory"""

import copy
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from utils.exceptions import ConfigurationError

ENV_PREFIX = "ISINGLAB_"


class ConfigManager:
    """Layered configuration: defaults < file < environment < flags."""

    required_keys = [
        "logging.level",
        "run.seed",
        "run.threads",
        "output.dir",
        "numerics.grassmann_prune",
        "numerics.grassmann_max_generators",
    ]

    def __init__(self, config_dir: Union[str, Path] = None, user_file: Optional[Union[str, Path]] = None):
        if config_dir is None:
            config_dir = Path(__file__).resolve().parent.parent / "config"
        self.config_dir = Path(config_dir)
        self.default_file = self.config_dir / "default.yaml"
        self.user_file = Path(user_file) if user_file else None
        self.config: Dict[str, Any] = {}
        self.load_config()

    @staticmethod
    def read_file(path: Union[str, Path]) -> Dict[str, Any]:
        """Read a YAML or JSON file; JSON is parsed by the YAML loader."""
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Configuration file not found: {path}")
        try:
            with open(path, 'r') as f:
                data = yaml.safe_load(f)
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark
            where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark is not None else str(path)
            raise ConfigurationError(f"{where}: {e.problem}")
        except yaml.YAMLError as e:
            raise ConfigurationError(f"{path}: {e}")
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}:1:1: top level must be a mapping")
        return data

    def load_config(self) -> None:
        """Load defaults, merge the user file and apply environment overrides."""
        if self.default_file.exists():
            self.config = self.read_file(self.default_file)
        else:
            self.config = {}
        if self.user_file is not None:
            self._merge_configs(self.config, self.read_file(self.user_file))
        self._load_env_vars()

    def _merge_configs(self, base: Dict[str, Any], override: Dict[str, Any]) -> None:
        """Recursively merge two configuration dictionaries."""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._merge_configs(base[key], value)
            else:
                base[key] = copy.deepcopy(value)

    def _load_env_vars(self) -> None:
        """Load configuration from environment variables."""
        if os.getenv(f"{ENV_PREFIX}LOG_LEVEL"):
            self.set("logging.level", os.getenv(f"{ENV_PREFIX}LOG_LEVEL"))
        if os.getenv(f"{ENV_PREFIX}THREADS"):
            self.set("run.threads", self._as_int("THREADS"))
        if os.getenv(f"{ENV_PREFIX}SEED"):
            self.set("run.seed", self._as_int("SEED"))
        if os.getenv(f"{ENV_PREFIX}OUTPUT_DIR"):
            self.set("output.dir", os.getenv(f"{ENV_PREFIX}OUTPUT_DIR"))

    @staticmethod
    def _as_int(name: str) -> int:
        raw = os.getenv(f"{ENV_PREFIX}{name}")
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"Environment variable {ENV_PREFIX}{name} must be an integer, got {raw!r}")

    def apply_overrides(self, overrides: Dict[str, Any]) -> None:
        """Apply dotted-key overrides (command-line flags); None values are ignored."""
        for key, value in overrides.items():
            if value is not None:
                self.set(key, value)

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value"""
        value: Any = self.config
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value"""
        keys = key.split('.')
        config = self.config
        for k in keys[:-1]:
            if not isinstance(config.get(k), dict):
                config[k] = {}
            config = config[k]
        config[keys[-1]] = value

    def section(self, name: str) -> Dict[str, Any]:
        """Return a deep copy of a top-level block (empty when absent)."""
        return copy.deepcopy(self.config.get(name) or {})

    def save(self, path: Union[str, Path]) -> None:
        """Write the resolved configuration as YAML."""
        with open(path, 'w') as f:
            yaml.safe_dump(self.config, f, default_flow_style=False, sort_keys=True)

    def validate(self) -> bool:
        """
        Validate the current configuration.

        Returns:
            bool: True if configuration is valid
        """
        for key in self.required_keys:
            if self.get(key) is None:
                raise ConfigurationError(f"Missing required configuration key: {key}")
        threads = self.get("run.threads")
        if not isinstance(threads, int) or threads < 1:
            raise ConfigurationError(f"run.threads must be a positive integer, got {threads!r}")
        return True
