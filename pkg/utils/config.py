"""
Configuration settings for the volcano-potential simulation toolkit.
"""

import math
import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def env_int(name: str, default: int, minimum: int = 1) -> int:
    """Integer setting from the environment; malformed values fall back to the default."""
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        logging.getLogger("volcano").warning(f"Ignoring {name}={raw!r}: not an integer")
        return default
    if value < minimum:
        logging.getLogger("volcano").warning(f"Ignoring {name}={value}: below {minimum}")
        return default
    return value


def env_float(name: str, default: float) -> float:
    """Finite float setting from the environment; malformed values fall back to the default."""
    raw = os.getenv(name)
    if raw is None:
        return default
    try:
        value = float(raw)
    except ValueError:
        value = math.nan
    if not math.isfinite(value):
        logging.getLogger("volcano").warning(f"Ignoring {name}={raw!r}: not a finite number")
        return default
    return value


# Application Settings
VERSION = "0.1.0"
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# Parallelism
JOBS = env_int("VOLCANO_JOBS", os.cpu_count() or 1)

# Experiment defaults
DEFAULT_HORIZON = env_float("VOLCANO_HORIZON", 500.0)
DEFAULT_BISECT_TOL = env_float("VOLCANO_BISECT_TOL", 1e-3)
DEFAULT_WIDTH_ACCEL = 0.01

# Integrator defaults
DEFAULT_REL_TOL = env_float("VOLCANO_REL_TOL", 1e-9)
DEFAULT_ABS_TOL = env_float("VOLCANO_ABS_TOL", 1e-12)
STEPS_PER_DRIVE_PERIOD = env_int("VOLCANO_STEPS_PER_DRIVE", 50)
EVENT_TIME_TOL = 1e-6
STEP_UNDERFLOW = 1e-12
ESCAPE_TURNING_POINT_FACTOR = 3.0

# Drive regime
DRIVE_SMALLNESS = env_float("VOLCANO_DRIVE_SMALLNESS", 0.03)
REGIME_SMALLNESS_LIMIT = 0.05
REGIME_FREQUENCY_RATIO_MIN = 10.0

# Reading of the dotted squares in the averaged width equations
LITERAL_DOTS = os.getenv("VOLCANO_LITERAL_DOTS", "FALSE").upper() == "TRUE"

# Period oracle
PERIOD_SENTINEL = 1.0e7
PERIOD_CAP = 1.0e6

# Configure logging
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger = logging.getLogger("volcano")
