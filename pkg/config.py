"""
Configuration module for the Bessel exit-time toolkit
Loads environment variables and the key=value config file and provides centralized configuration
"""

import os
import sys
from dotenv import load_dotenv, dotenv_values
from pathlib import Path

# Load environment variables from .env file (never overrides variables already set)
load_dotenv()

# ============================================================================
# CONFIG FILE (lowest precedence after built-in defaults)
# ============================================================================
# Same syntax as a .env file: KEY=VALUE per line, '#' comments
CONFIG_FILE = Path(os.getenv("BESSEL_EXIT_CONFIG", "bessel-exit.conf"))
_FILE_VALUES = dotenv_values(CONFIG_FILE) if CONFIG_FILE.is_file() else {}


def _setting(name: str, default: str = None) -> str:
    """
    Resolve a setting: environment first, then config file, then default

    Args:
        name: Setting name (e.g. "BESSEL_EXIT_CACHE")
        default: Built-in default

    Returns:
        Raw string value (or default)
    """
    value = os.getenv(name)
    if value is None:
        value = _FILE_VALUES.get(name)
    return default if value is None else value


# ============================================================================
# DIRECTORY PATHS
# ============================================================================
BASE_DIR = Path(__file__).parent
DATA_DIR = BASE_DIR / "data"

# Zero-table cache. Library calls persist tables only when BESSEL_EXIT_CACHE is set;
# the command line falls back to DEFAULT_ZERO_CACHE_DIR
DEFAULT_ZERO_CACHE_DIR = DATA_DIR / "zeros"
_cache_setting = _setting("BESSEL_EXIT_CACHE")
ZERO_CACHE_DIR = Path(_cache_setting) if _cache_setting else None
ZERO_TABLE_FORMAT_VERSION = "v1"

# ============================================================================
# SERIES CONFIGURATION
# ============================================================================
SERIES_ABS_TOL = float(_setting("BESSEL_EXIT_ABS_TOL", "1e-12"))
SERIES_REL_TOL = float(_setting("BESSEL_EXIT_REL_TOL", "1e-12"))
SERIES_MAX_TERMS = int(_setting("BESSEL_EXIT_MAX_TERMS", "20000"))
SERIES_MIN_EXPONENT = float(_setting("BESSEL_EXIT_MIN_EXPONENT", "40"))

# Regime crossover for the hitting-time dispatcher: j_{mu,1}^2 t / 2
SERIES_CROSSOVER = 0.02

# ============================================================================
# SIMULATION CONFIGURATION
# ============================================================================
SIM_STEP = float(_setting("BESSEL_EXIT_SIM_STEP", "1e-4"))
SIM_MAX_TIME = float(_setting("BESSEL_EXIT_SIM_MAX_TIME", "20"))
SIM_BATCH = int(_setting("BESSEL_EXIT_SIM_BATCH", "1024"))  # Paths per RNG stream

# ============================================================================
# RUNTIME
# ============================================================================
WORKERS = int(_setting("BESSEL_EXIT_WORKERS", "1"))
VERBOSE = _setting("BESSEL_EXIT_VERBOSE", "1").lower() in ("1", "true", "yes", "on")

TOOL_VERSION = "1.0.0"


# ============================================================================
# VALIDATION
# ============================================================================
def validate_config():
    """
    Validates that configuration values are usable
    Raises ValueError if a setting is out of range
    """
    if SERIES_ABS_TOL <= 0 or SERIES_REL_TOL <= 0:
        raise ValueError("BESSEL_EXIT_ABS_TOL and BESSEL_EXIT_REL_TOL must be positive")

    if SERIES_MAX_TERMS < 1:
        raise ValueError("BESSEL_EXIT_MAX_TERMS must be at least 1")

    if SIM_STEP <= 0 or SIM_MAX_TIME <= 0:
        raise ValueError("BESSEL_EXIT_SIM_STEP and BESSEL_EXIT_SIM_MAX_TIME must be positive")

    if SIM_BATCH < 1 or WORKERS < 1:
        raise ValueError("BESSEL_EXIT_SIM_BATCH and BESSEL_EXIT_WORKERS must be at least 1")

    # stdout carries data
    print(f"✓ Configuration validated successfully", file=sys.stderr)
    print(f"  - Zero cache: {ZERO_CACHE_DIR or 'memory only'}", file=sys.stderr)
    print(f"  - Series tolerance: abs {SERIES_ABS_TOL:g}, rel {SERIES_REL_TOL:g} (max {SERIES_MAX_TERMS} terms)", file=sys.stderr)
    print(f"  - Simulation step: {SIM_STEP:g} (batch {SIM_BATCH}, workers {WORKERS})", file=sys.stderr)

if __name__ == "__main__":
    validate_config()
