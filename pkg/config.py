# q-Balazs-Szabados Lab Configuration
# Numeric defaults, output settings and the named experiment presets

import os
import sys

# Arithmetic
DEFAULT_PRECISION_BITS = 256
MIN_PRECISION_BITS = 53
ZERO_GUARD = 1e-40
AGREEMENT_TOL = 1e-20

# Sampling and series truncation
DEFAULT_GRID_M = 256
SERIES_TOL = 1e-30
MAX_SERIES_TERMS = 200000
DEFAULT_WORKING_R = 8  # working disk for entire catalog functions
RAY_SAMPLE_MAX = 1000  # boundedness sampling on [0, RAY_SAMPLE_MAX]

# Rate checks ("~" of the exact-order statements)
WINDOW_FACTOR = 10
SLOPE_TOL = 0.1

# Output
CSV_DIGITS = 25
CSV_HEADER = ["n", "bracket_n", "r", "lhs", "rhs", "normalized_error", "holds", "precision_ok"]
RESULTS_FOLDER = os.environ.get("QBS_RESULTS_FOLDER", "results")
MAX_WORKERS = int(os.environ.get("QBS_MAX_WORKERS", "4"))
DEFAULT_SPOT_CHECKS = 8

QBS_DEBUG = os.environ.get("QBS_DEBUG", "false").lower() == "true"

EXPERIMENT_PRESETS = {
    "identity": {
        "mode": "identity",
        "function": "exp_neg",
        "q": "1.5",
        "beta": "0.5",
        "r": "0.6",
        "R": "8",
        "n": "2,4,8,16,24,32",
        "grid_M": 64,
    },
    "thm1_q1": {
        "mode": "thm1",
        "function": "exp_neg",
        "q": "1",
        "beta": "0.5",
        "r": "0.6",
        "R": "3",
        "n": "16,32,64,128",
    },
    "thm1_q15": {
        "mode": "thm1",
        "function": "exp_neg",
        "q": "1.5",
        "beta": "0.5",
        "r": "0.55",
        "R": "5.5",
        "n": "8,12,16,20,24",
    },
    "vor_i": {
        "mode": "vor",
        "function": "exp_neg",
        "q": "1",
        "beta": "0.3",
        "r": "0.6",
        "R": "3",
        "n": "64,128,256",
    },
    "vor_ii": {
        "mode": "vor",
        "function": "sin",
        "q": "1.1",
        "beta": "0.6",
        "r": "0.55",
        "R": "3",
        "n": "40,48,56",
    },
    "vor_iii": {
        "mode": "vor",
        "function": "exp_neg",
        "q": "1.5",
        "beta": "0.5",
        "r": "0.55",
        "R": "5.5",
        "n": "11,14,18,22",
        "variant": "as_theorem2",
    },
    "rate_q1": {
        "mode": "rate",
        "function": "exp_neg",
        "q": "1",
        "beta": "0.5",
        "r": "0.6",
        "R": "2.5",
        "n": "64,128,256,512",
    },
    "rate_q15": {
        "mode": "rate",
        "function": "exp_neg",
        "q": "1.5",
        "beta": "0.5",
        "r": "0.55",
        "R": "5.5",
        "n": "11:22",
    },
}


def debug(msg: str):
    if QBS_DEBUG:
        print(f"[QBS_DEBUG] {msg}", file=sys.stderr)


def get_preset(name):
    """Get configuration for a named experiment preset"""
    try:
        return dict(EXPERIMENT_PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(get_available_presets())}") from None


def get_available_presets():
    """Get list of available experiment presets"""
    return list(EXPERIMENT_PRESETS.keys())


def preset_to_argv(name):
    """Render a preset as CLI flags"""
    argv = []
    for key, value in get_preset(name).items():
        argv.extend([f"--{key.replace('_', '-')}", str(value)])
    return argv
