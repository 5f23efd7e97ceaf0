"""
Laboratory configuration and logging setup
Numeric caps and tolerances, worker count and log format, read from the environment
"""

import os
import json
import logging
from typing import Dict, Any, Optional, List
from dataclasses import dataclass, asdict, fields, replace
from datetime import datetime, timezone
from enum import Enum

from .errors import ConfigurationError

logger = logging.getLogger(__name__)


class LogLevel(Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class LogFormat(Enum):
    TEXT = "text"
    JSON = "json"


@dataclass(frozen=True)
class NumericsConfig:
    """Caps and tolerances shared by every numeric module"""
    enumeration_cap: int = 24  # bits, classical brute force
    dense_cap: int = 20  # qubits, dense Hamiltonian matrices
    ms_cap: int = 12  # total qubits (system + ancilla), gate verification
    degeneracy_tol: float = 1e-8
    norm_tol: float = 1e-9
    hermitian_tol: float = 1e-10
    steps_per_unit_time: int = 100
    max_step_doublings: int = 4


@dataclass(frozen=True)
class RuntimeConfig:
    """Worker pool and output placement"""
    jobs: int = 1
    output_dir: str = "."


@dataclass(frozen=True)
class LoggingConfig:
    level: LogLevel = LogLevel.INFO
    format: LogFormat = LogFormat.TEXT


class LabConfigManager:
    """Loads configuration from environment variables and an optional JSON file"""

    def __init__(self, environ: Optional[Dict[str, str]] = None):
        self._environ = dict(os.environ if environ is None else environ)
        self.config = self._load_configuration()
        self._validate_configuration()

    def _getenv(self, key: str, default: str) -> str:
        return self._environ.get(key, default)

    def _load_configuration(self) -> Dict[str, Any]:
        config = {
            "numerics": self._get_numerics_config(),
            "runtime": self._get_runtime_config(),
            "logging": self._get_logging_config(),
        }

        overrides = self._load_config_file()
        if overrides:
            for section, values in overrides.items():
                if section not in config or not isinstance(values, dict):
                    logger.warning(f"Ignoring unknown config section '{section}'")
                    continue
                config[section] = self._overlay(config[section], values)

        return config

    def _load_config_file(self) -> Optional[Dict[str, Any]]:
        """Load overrides from the JSON file named by EC3LAB_CONFIG_FILE"""
        config_file = self._getenv("EC3LAB_CONFIG_FILE", "")
        if not config_file:
            return None

        if not os.path.exists(config_file):
            raise ConfigurationError([f"config file {config_file} does not exist"])

        try:
            with open(config_file, "r") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError([f"config file {config_file} unreadable: {e}"]) from e

    @staticmethod
    def _overlay(section: Any, values: Dict[str, Any]) -> Any:
        known = {f.name for f in fields(section)}
        updates = {}
        problems = []
        for key, value in values.items():
            if key not in known:
                problems.append(f"unknown setting '{key}' in {type(section).__name__}")
                continue
            target = type(getattr(section, key))
            try:
                updates[key] = target(value)
            except (TypeError, ValueError):
                problems.append(f"setting '{key}' must be {target.__name__}, got {value!r}")
        if problems:
            raise ConfigurationError(problems)
        return replace(section, **updates)

    def _get_numerics_config(self) -> NumericsConfig:
        try:
            return NumericsConfig(
                enumeration_cap=int(self._getenv("EC3LAB_ENUMERATION_CAP", "24")),
                dense_cap=int(self._getenv("EC3LAB_DENSE_CAP", "20")),
                ms_cap=int(self._getenv("EC3LAB_MS_CAP", "12")),
                degeneracy_tol=float(self._getenv("EC3LAB_DEGENERACY_TOL", "1e-8")),
                norm_tol=float(self._getenv("EC3LAB_NORM_TOL", "1e-9")),
                hermitian_tol=float(self._getenv("EC3LAB_HERMITIAN_TOL", "1e-10")),
                steps_per_unit_time=int(self._getenv("EC3LAB_STEPS_PER_UNIT", "100")),
                max_step_doublings=int(self._getenv("EC3LAB_MAX_STEP_DOUBLINGS", "4")),
            )
        except ValueError as e:
            raise ConfigurationError([f"numeric setting not a number: {e}"]) from e

    def _get_runtime_config(self) -> RuntimeConfig:
        jobs_default = str(os.cpu_count() or 1)
        try:
            jobs = int(self._getenv("EC3LAB_JOBS", jobs_default))
        except ValueError as e:
            raise ConfigurationError([f"EC3LAB_JOBS not an integer: {e}"]) from e
        return RuntimeConfig(
            jobs=jobs,
            output_dir=self._getenv("EC3LAB_OUTPUT_DIR", "."),
        )

    def _get_logging_config(self) -> LoggingConfig:
        level_str = self._getenv("LOG_LEVEL", "INFO").upper()
        format_str = self._getenv("LOG_FORMAT", "text").lower()
        problems = []
        if level_str not in LogLevel.__members__:
            problems.append(f"LOG_LEVEL '{level_str}' is not one of {list(LogLevel.__members__)}")
        if format_str not in {f.value for f in LogFormat}:
            problems.append(f"LOG_FORMAT '{format_str}' must be 'text' or 'json'")
        if problems:
            raise ConfigurationError(problems)
        return LoggingConfig(level=LogLevel(level_str), format=LogFormat(format_str))

    def _validate_configuration(self):
        """Validate critical configuration values"""
        errors: List[str] = []

        numerics = self.config["numerics"]
        for name in ("enumeration_cap", "dense_cap", "ms_cap", "steps_per_unit_time"):
            if getattr(numerics, name) < 1:
                errors.append(f"{name} must be positive")
        if numerics.max_step_doublings < 0:
            errors.append("max_step_doublings must be non-negative")
        for name in ("degeneracy_tol", "norm_tol", "hermitian_tol"):
            value = getattr(numerics, name)
            if not 0.0 < value < 1.0:
                errors.append(f"{name} must lie in (0, 1), got {value}")

        runtime = self.config["runtime"]
        if runtime.jobs < 1:
            errors.append("jobs must be at least 1")

        if errors:
            raise ConfigurationError(errors)

    def get_config(self, section: Optional[str] = None) -> Any:
        """Get configuration section or entire config"""
        if section:
            return self.config.get(section)
        return self.config

    def get_numerics_config(self) -> NumericsConfig:
        return self.config["numerics"]

    def get_runtime_config(self) -> RuntimeConfig:
        return self.config["runtime"]

    def get_logging_config(self) -> LoggingConfig:
        return self.config["logging"]

    def as_dict(self) -> Dict[str, Any]:
        out = {}
        for section, value in self.config.items():
            out[section] = {
                k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(value).items()
            }
        return out


class JsonLogFormatter(logging.Formatter):
    """One JSON object per log record"""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload)


def configure_logging(config: LoggingConfig) -> None:
    """Configure the root logger once, for command-line use"""
    handler = logging.StreamHandler()
    if config.format == LogFormat.JSON:
        handler.setFormatter(JsonLogFormatter())
    else:
        handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(config.level.value)


_config_manager: Optional[LabConfigManager] = None


def get_config_manager() -> LabConfigManager:
    """Get the process-wide configuration manager"""
    global _config_manager
    if _config_manager is None:
        _config_manager = LabConfigManager()
    return _config_manager


def get_numerics() -> NumericsConfig:
    return get_config_manager().get_numerics_config()


def reset_config_manager() -> None:
    """Drop the cached manager so the next access re-reads the environment"""
    global _config_manager
    _config_manager = None
