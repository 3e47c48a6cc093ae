"""
Configuration management with environment overrides
"""

import os
import json
import logging
from typing import Optional, Dict, Any
from pathlib import Path
from .defaults import *
from ..utils.validation import ValidationError, validate_positive

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigManager:
    """
    Manages application configuration stored as JSON in the user's config directory
    """

    HOME_ENV = "MSI_CERT_HOME"
    SOLVER_ENV = "MSI_CERT_SOLVER"
    LOG_LEVEL_ENV = "MSI_CERT_LOG_LEVEL"

    def __init__(self, config_dir: Optional[Path] = None):
        self.logger = logging.getLogger(__name__)
        if config_dir is None:
            env_home = os.getenv(self.HOME_ENV)
            config_dir = Path(env_home) if env_home else Path.home() / CONFIG_DIRNAME
        self.config_dir = Path(config_dir)
        self.config_file = self.config_dir / CONFIG_FILENAME
        self._config: Dict[str, Any] = {}
        self.load_config()

    def ensure_config_dir(self) -> Path:
        """Create the configuration directory on first use"""
        self.config_dir.mkdir(parents=True, exist_ok=True)
        return self.config_dir

    def load_config(self):
        """Load configuration from file"""
        if self.config_file.exists():
            try:
                with open(self.config_file, 'r') as f:
                    self._config = json.load(f)
                self.logger.debug("Configuration loaded from %s", self.config_file)
            except Exception as e:
                self.logger.error(f"Error loading config: {e}")
                self._config = {}
        else:
            self._config = {}

    def save_config(self):
        """Save configuration to file"""
        try:
            self.ensure_config_dir()
            with open(self.config_file, 'w') as f:
                json.dump(self._config, f, indent=2)
            self.logger.info("Configuration saved to %s", self.config_file)
        except Exception as e:
            self.logger.error(f"Error saving config: {e}")
            raise

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value"""
        return self._config.get(key, default)

    def set(self, key: str, value: Any):
        """Set configuration value"""
        self._config[key] = value

    def get_solver(self) -> str:
        """SDP solver name; the environment takes precedence over the file"""
        env_solver = os.getenv(self.SOLVER_ENV)
        if env_solver and env_solver.strip():
            return env_solver.strip().upper()
        return str(self.get("solver", DEFAULT_SOLVER)).upper()

    def set_solver(self, solver: str):
        self.set("solver", solver.upper())

    def get_epsilon(self) -> float:
        return float(self.get("epsilon", DEFAULT_EPSILON))

    def set_epsilon(self, epsilon: float):
        try:
            value = float(epsilon)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"epsilon must be a number, got {epsilon!r}") from e
        if validate_positive(value, "epsilon") >= 1e-2:
            raise ValidationError(f"epsilon must be a small margin below 1e-2, got {epsilon!r}")
        self.set("epsilon", value)

    def get_psd_tolerance(self) -> float:
        return float(self.get("psd_tolerance", DEFAULT_PSD_TOLERANCE))

    def get_residual_factor(self) -> float:
        return float(self.get("residual_factor", DEFAULT_RESIDUAL_FACTOR))

    def get_condition_limit(self) -> float:
        return float(self.get("condition_limit", DEFAULT_CONDITION_LIMIT))

    def get_eigen_threshold(self) -> int:
        return int(self.get("eigen_threshold", DEFAULT_EIGEN_THRESHOLD))

    def get_schur_margin(self) -> float:
        return float(self.get("schur_margin", DEFAULT_SCHUR_MARGIN))

    def get_qmi_tolerance(self) -> float:
        return float(self.get("qmi_tolerance", DEFAULT_QMI_TOLERANCE))

    def get_grid_size(self) -> int:
        return int(self.get("grid_size", DEFAULT_GRID_SIZE))

    def get_msi_cap(self) -> int:
        return int(self.get("msi_cap", DEFAULT_MSI_CAP))

    def get_search(self) -> str:
        return self.get("search", DEFAULT_SEARCH)

    def get_gain_mode(self) -> str:
        return self.get("gain_mode", DEFAULT_GAIN_MODE)

    def get_workers(self) -> int:
        """Number of concurrent candidate evaluations"""
        return max(1, int(self.get("workers", DEFAULT_WORKERS)))

    def get_seed(self) -> int:
        return int(self.get("seed", DEFAULT_SEED))

    def get_log_level(self) -> str:
        """Get logging level"""
        env_level = os.getenv(self.LOG_LEVEL_ENV)
        if env_level and env_level.strip():
            return env_level.strip().upper()
        return self.get("log_level", DEFAULT_LOG_LEVEL)

    def set_log_level(self, level: str):
        level = str(level).strip().upper()
        if level not in LOG_LEVELS:
            raise ValidationError(f"unknown log level {level!r}, expected one of {', '.join(LOG_LEVELS)}")
        self.set("log_level", level)

    @property
    def log_dir(self) -> Path:
        return self.config_dir / "logs"

    def export_config(self) -> Dict[str, Any]:
        """Export the effective configuration, defaults included"""
        config = {
            "solver": self.get_solver(),
            "epsilon": self.get_epsilon(),
            "psd_tolerance": self.get_psd_tolerance(),
            "residual_factor": self.get_residual_factor(),
            "condition_limit": self.get_condition_limit(),
            "eigen_threshold": self.get_eigen_threshold(),
            "schur_margin": self.get_schur_margin(),
            "qmi_tolerance": self.get_qmi_tolerance(),
            "grid_size": self.get_grid_size(),
            "msi_cap": self.get_msi_cap(),
            "search": self.get_search(),
            "gain_mode": self.get_gain_mode(),
            "workers": self.get_workers(),
            "seed": self.get_seed(),
            "log_level": self.get_log_level(),
        }
        config.update({
            "config_file": str(self.config_file),
            "version": "1.0.0"
        })
        return config

    def import_config(self, config_data: Dict[str, Any]):
        """Import configuration"""
        excluded_keys = {"config_file", "version"}

        for key, value in config_data.items():
            if key not in excluded_keys:
                self.set(key, value)

        self.save_config()

    def reset_to_defaults(self):
        """Reset configuration to defaults"""
        self._config = {}
        if self.config_file.exists():
            self.config_file.unlink()
        self.logger.info("Configuration reset to defaults")


# Global configuration instance
config = ConfigManager()
