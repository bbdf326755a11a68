# /src/utils/config/settings.py

import os
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.core.errors import ConfigError

DEFAULTS_PATH = Path(__file__).parent / "config.yaml"
_PLACEHOLDER = re.compile(r"\$\{([A-Z0-9_]+)\}")


class SettingsManager:
    """
    Package defaults from config.yaml, shared by every module.

    Values may hold ${VAR} placeholders; they are resolved against the
    environment on every read, so tests can monkeypatch variables.
    """

    _instance: Optional["SettingsManager"] = None
    _config: Dict[str, Any] = {}

    def __new__(cls) -> "SettingsManager":
        if cls._instance is None:
            instance = super().__new__(cls)
            instance._config = cls._read_defaults(DEFAULTS_PATH)
            cls._instance = instance
        return cls._instance

    @staticmethod
    def _read_defaults(path: Path) -> Dict[str, Any]:
        try:
            with open(path, "r") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Could not load package defaults from {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping of sections")
        return data

    def _resolve(self, value: Any) -> Any:
        """Expand ${VAR} inside strings, recursively; unset variables expand to ''."""
        if isinstance(value, dict):
            return {k: self._resolve(v) for k, v in value.items()}
        if isinstance(value, list):
            return [self._resolve(v) for v in value]
        if isinstance(value, str):
            return _PLACEHOLDER.sub(lambda m: os.getenv(m.group(1), ""), value)
        return value

    def get(self, key: str, default: Any = None) -> Any:
        """Dot-path lookup, e.g. ``get("solver.tol")``."""
        node: Any = self._config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return self._resolve(node)

    def get_logging_config(self) -> Dict[str, Any]:
        return self.get("logging", {})

    def get_solver_config(self) -> Dict[str, Any]:
        return self.get("solver", {})

    def get_decoherence_config(self) -> Dict[str, Any]:
        return self.get("decoherence", {})

    def get_spin_config(self) -> Dict[str, Any]:
        return self.get("spin", {})

    def get_monte_carlo_config(self) -> Dict[str, Any]:
        return self.get("monte_carlo", {})

    def get_output_config(self) -> Dict[str, Any]:
        return self.get("output", {})

    def get_preset(self, name: str) -> Dict[str, Any]:
        """Named parameter bundle; unknown names give an empty dict."""
        return self.get(f"presets.{name}", {})

    def get_preset_names(self) -> List[str]:
        return sorted(self.get("presets", {}).keys())


class RuntimeSettings(BaseSettings):
    """Process-level overrides read from IONTRAP_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="IONTRAP_", extra="ignore")

    threads: Optional[int] = None
    log_level: Optional[str] = None


def get_runtime_settings() -> RuntimeSettings:
    return RuntimeSettings()


# Global instance
settings = SettingsManager()
