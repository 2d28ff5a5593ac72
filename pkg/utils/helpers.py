"""
Helper functions for the volcano-potential toolkit.
"""

import math
import os
from typing import Dict, Any
from dotenv import dotenv_values
from utils.config import logger
from utils.exceptions import UsageError


def load_config_file(file_path: str) -> Dict[str, str]:
    """
    Load a `key = value` configuration file.

    Keys are normalised to argument names (lower case, dashes become
    underscores). Lines starting with `#` are ignored.

    Args:
        file_path: Path to the configuration file

    Returns:
        Dictionary mapping argument names to raw string values
    """
    if not os.path.isfile(file_path):
        raise UsageError(f"Configuration file not found: {file_path}")
    try:
        raw = dotenv_values(file_path)
    except Exception as e:
        logger.error(f"Error loading configuration from {file_path}: {e}")
        raise UsageError(f"Unreadable configuration file {file_path}: {e}") from e

    config = {}
    for key, value in raw.items():
        if value is None:
            raise UsageError(f"Configuration key '{key}' has no value")
        config[normalize_key(key)] = value.strip()
    return config


def normalize_key(key: str) -> str:
    """Map a flag or file key such as `W0-Min` to its argument name `w0_min`."""
    return key.strip().lstrip("-").lower().replace("-", "_")


def parse_finite(name: str, text: Any) -> float:
    """
    Parse a finite decimal.

    Args:
        name: Name of the setting, for error messages
        text: Raw value

    Returns:
        The parsed float
    """
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise UsageError(f"{name}: expected a number, got '{text}'")
    if not math.isfinite(value):
        raise UsageError(f"{name}: value must be finite, got '{text}'")
    return value


def format_float(value: float) -> str:
    """Format a float with 17 significant digits (lossless round trip)."""
    return format(float(value), ".17g")
