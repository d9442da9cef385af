# src/core/__init__.py
"""
Core utilities for the torus optimal transport lab.

Settings, logging, exceptions, constants and the pydantic models shared by
the numerical modules, the pipelines and the command line.

Example:
    >>> from core import config, setup_logging, log_with_timestamp
    >>> setup_logging('INFO')
    >>> log_with_timestamp('Lab started', 'Main')
"""

from .config import config, load_config_file, validate_config_data, apply_overrides
from .logging import (
    setup_logging, log_with_timestamp, PerformanceLogger,
    log_pipeline_stage, create_experiment_logger
)
from .constants import LAB_NAME, LAB_VERSION, EXIT_CODES, CSV_COLUMNS
from .exceptions import (
    LabError, ConfigurationError, InvalidInputError, BoundsViolationError,
    UnsupportedDensityError, ResolutionError, SolverError, SolverResourceError,
    SamplingError, PersistenceError, ExperimentError
)
from .models import (
    LabSettings, ExperimentConfig, LemmaSuiteConfig, DensityConfig, HRule,
    BoundReport, RateReport, RatePoint
)

__version__ = LAB_VERSION

__all__ = [
    'config',
    'load_config_file',
    'validate_config_data',
    'apply_overrides',
    'setup_logging',
    'log_with_timestamp',
    'PerformanceLogger',
    'log_pipeline_stage',
    'create_experiment_logger',
    'LAB_NAME',
    'LAB_VERSION',
    'EXIT_CODES',
    'CSV_COLUMNS',
    'LabError',
    'ConfigurationError',
    'InvalidInputError',
    'BoundsViolationError',
    'UnsupportedDensityError',
    'ResolutionError',
    'SolverError',
    'SolverResourceError',
    'SamplingError',
    'PersistenceError',
    'ExperimentError',
    'LabSettings',
    'ExperimentConfig',
    'LemmaSuiteConfig',
    'DensityConfig',
    'HRule',
    'BoundReport',
    'RateReport',
    'RatePoint',
]
