"""
Configuration module for the quasi-Dirac transmission toolkit.

Tunables come from QUASIDIRAC_* environment variables (optionally via a .env
file) and are exposed as typed module constants, plus a grouped CONFIG dict.
"""

import os
from typing import Dict, Any
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

def _get_env(key: str, default: Any = None, var_type: type = str) -> Any:
    """
    Read an environment variable as ``var_type``.

    Booleans accept true/yes/1/y in any case; int, float and Path values go
    through their constructors.

    Raises:
        ValueError: If the value cannot be read as ``var_type``
    """
    value = os.getenv(key)
    if value is None:
        return default

    if var_type == bool:
        return value.lower() in ('true', 'yes', '1', 'y')
    try:
        return var_type(value)
    except ValueError as e:
        raise ValueError(f"{key}={value!r} is not a valid {var_type.__name__}") from e

PROJECT_ROOT = Path(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
OUTPUT_DIR = _get_env("QUASIDIRAC_OUTPUT_DIR", Path("data/figures"), var_type=Path)

GUARD_DIGITS = _get_env("QUASIDIRAC_GUARD_DIGITS", 30, var_type=int)
MIN_DIGITS = _get_env("QUASIDIRAC_MIN_DIGITS", 16, var_type=int)
VANDERMONDE_MAX_ORDER = _get_env("QUASIDIRAC_VANDERMONDE_MAX_ORDER", 64, var_type=int)

VALIDITY_THRESHOLD = _get_env("QUASIDIRAC_VALIDITY_THRESHOLD", 20, var_type=float)

GRID_POINTS = _get_env("QUASIDIRAC_GRID_POINTS", 2001, var_type=int)
WINDOW_SAMPLES = _get_env("QUASIDIRAC_WINDOW_SAMPLES", 512, var_type=int)
WINDOW_TOL = _get_env("QUASIDIRAC_WINDOW_TOL", 0.01, var_type=float)
WINDOW_REFINEMENT = _get_env("QUASIDIRAC_WINDOW_REFINEMENT", 1e-4, var_type=float)
QUAD_TOL = _get_env("QUASIDIRAC_QUAD_TOL", 1e-10, var_type=float)
FOURIER_TOL = _get_env("QUASIDIRAC_FOURIER_TOL", 1e-12, var_type=float)

MAX_OUTPUT_DIGITS = _get_env("QUASIDIRAC_MAX_OUTPUT_DIGITS", 50, var_type=int)
SHOW_PROGRESS = _get_env("QUASIDIRAC_SHOW_PROGRESS", False, var_type=bool)

LOG_LEVEL = _get_env("LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

CONFIG: Dict[str, Any] = {
    "precision": {
        "guard_digits": GUARD_DIGITS,
        "min_digits": MIN_DIGITS,
        "vandermonde_max_order": VANDERMONDE_MAX_ORDER,
    },

    "scenario": {
        "validity_threshold": VALIDITY_THRESHOLD,
    },

    "grids": {
        "grid_points": GRID_POINTS,
        "window_samples": WINDOW_SAMPLES,
        "window_tol": WINDOW_TOL,
        "window_refinement": WINDOW_REFINEMENT,
        "quad_tol": QUAD_TOL,
        "fourier_tol": FOURIER_TOL,
    },

    "output": {
        "dir": OUTPUT_DIR,
        "max_digits": MAX_OUTPUT_DIGITS,
        "show_progress": SHOW_PROGRESS,
    },

    "logging": {
        "level": LOG_LEVEL,
        "format": LOG_FORMAT,
    },

    "paths": {
        "project_root": PROJECT_ROOT,
    },
}

if __name__ == "__main__":
    """Print configuration when module is run directly."""
    import json

    print(json.dumps(CONFIG, indent=2, default=str))
