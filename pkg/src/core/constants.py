# src/core/constants.py
"""
Constants and configuration values for the torus optimal transport lab.

This module centralizes numerical tolerances, defaults, file layouts and
exit codes used throughout the lab so that every module agrees on them.
"""

from typing import Dict, List

# Lab metadata
LAB_NAME = "torus-ot-lab"
LAB_VERSION = "1.0.0"

# Logging configuration
LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
LOG_FORMATS = {
    'default': '[%(asctime)s] %(levelname)s: %(message)s',
    'detailed': '[%(asctime)s] %(levelname)s - %(name)s - %(message)s',
}

# Numerical tolerances
TOLERANCES: Dict[str, float] = {
    'mean_zero': 1e-10,
    'hermitian': 1e-8,
    'weight_sum': 1e-12,
    'marginal': 1e-9,
    'sinkhorn_marginal': 1e-6,
    'negative_mass': 1e-15,
    'density_negativity': 1e-9,
    'field_mass': 1e-6,
}

# Grid and kernel limits
MIN_GRID_POINTS = 4
SUPPORTED_KERNEL_DIMENSIONS = (1, 2, 3)
MAX_BANDWIDTH = 0.5
H_RULE_CLIP = 0.49
DEFAULT_H_CONSTANT = {1: 0.4, 2: 0.5, 3: 0.5}
KAPPA_TABLE_SPACING = 1e-3
KAPPA_TABLE_RADIUS = 200.0
KDE_RESOLUTION_MIN = 2.0
SMOOTHED_RESOLUTION_MIN = 8.0
REJECTION_CAP = 1_000_000

# Optimal transport defaults
EXACT_ATOM_CAP = 20_000
EMD_MAX_ITER = 10_000_000
SINKHORN_CHECK_EVERY = 10

# Lemma suite criteria
RATIO_CRITERION = 10.0
BIAS_STEP_FACTOR = 1.1
MULTIPLIER_SLOPE_TOLERANCE = 0.2
D1_MULTIPLIER_CRITERION = 3.0
D2_LOG_MODEL_CRITERION = 2.0
SLOPE_BAND_HALF_WIDTH = 0.10
BOOTSTRAP_RESAMPLES = 1000
CI_SLOPE_TOLERANCE = 1e-12
MIN_ROSENTHAL_REPS = 50

# Verdicts
VERDICT_HOLDS = 'holds'
VERDICT_WITHIN_SLACK = 'holds-within-slack'
VERDICT_VIOLATED = 'violated'
VERDICTS = [VERDICT_HOLDS, VERDICT_WITHIN_SLACK, VERDICT_VIOLATED]

# Exit codes
EXIT_CODES = {
    'SUCCESS': 0,
    'VIOLATED': 1,
    'USAGE': 2,
}

# Persistence
CSV_COLUMNS: List[str] = [
    'd', 'p', 'n', 'replicate', 'seed', 'h', 'wasserstein', 'solver', 'runtime_ms'
]
TIMESTAMP_FORMAT = '%Y%m%dT%H%M%SZ'
ENV_PREFIX = 'TORUS_OT_LAB_'

# Error messages
ERROR_MESSAGES = {
    'CONFIG_NOT_FOUND': 'Configuration file not found: {}',
    'CONFIG_INVALID': 'Invalid configuration in {}',
    'NON_FINITE': 'Non-finite coordinates: {}',
    'DIMENSION_MISMATCH': 'Dimension mismatch: {} vs {}',
    'NOT_MEAN_ZERO': 'Field is not mean-zero (mean = {})',
    'ATOM_CAP': 'Exact solver cap exceeded: {} atoms > {}; use the entropic solver',
    'RESOLUTION': 'Kernel under-resolved on the grid: N*h = {} < {}',
    'PIPELINE_NOT_FOUND': 'Unknown subcommand: {}',
}

# Directory names
DIRECTORIES = {
    'logs': 'logs',
    'system_logs': 'system',
    'experiment_logs': 'experiments',
    'results': 'results',
    'configs': 'configs',
}

# File names
FILES = {
    'main_log': 'application.log',
}
