"""
Configuration management for the experiment pipelines.

Paths and defaults live on Settings; environment overrides are read after
load_dotenv() so a local .env file can set them.
"""

import json
import logging
import logging.config
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Raised when command-line values or presets cannot form a valid run."""
    pass


class Settings:
    """Experiment configuration."""

    # Paths
    BASE_DIR: Path = Path(__file__).parent.parent
    CONFIG_DIR: Path = BASE_DIR / "config"
    LOGGING_CONFIG: Path = CONFIG_DIR / "loggingConfig.json"
    PRESETS_FILE: Path = CONFIG_DIR / "experiments.json"

    # Environment overrides
    OUTPUT_DIR: Path = Path(os.getenv("FEM_OUTPUT_DIR", str(BASE_DIR / "output")))
    LOG_LEVEL: str = os.getenv("FEM_LOG_LEVEL", "INFO").upper()
    WORKERS: int = int(os.getenv("FEM_WORKERS", "1"))


PRESET_SECTIONS = ("dichotomy", "rlw_convergence", "conservation", "impulse")


def get_logging_config() -> dict:
    with open(Settings.LOGGING_CONFIG, "r") as f:
        config_dict = json.load(f)

    # file handler paths are relative to the repository root
    for handler in config_dict.get("handlers", {}).values():
        if "filename" in handler:
            path = Settings.BASE_DIR / handler["filename"]
            path.parent.mkdir(parents=True, exist_ok=True)
            handler["filename"] = str(path)
    config_dict.setdefault("root", {})["level"] = Settings.LOG_LEVEL
    return config_dict


def configure_logging() -> None:
    """Configure the root logger from config/loggingConfig.json."""
    logging.config.dictConfig(get_logging_config())
    logger.debug("Logging has been configured using the JSON file.")


def load_presets(path: Path = None) -> dict:
    """Experiment presets from config/experiments.json."""
    path = Path(path) if path is not None else Settings.PRESETS_FILE
    if not path.exists():
        raise ConfigError(f"Experiment presets not found at {path}")
    try:
        with open(path, "r") as f:
            presets = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed presets in {path}: {e}")
    missing = [s for s in PRESET_SECTIONS if s not in presets]
    if missing:
        raise ConfigError(f"Presets in {path} lack sections {missing}")
    return presets
