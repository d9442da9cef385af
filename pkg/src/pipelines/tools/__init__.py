"""
Pipeline tools: concurrent task execution, rate fitting, suite task
builders, atomic writers and plotting.

Example:
    >>> from pipelines.tools import fit_rate, output_name
    >>> round(fit_rate([(1, 1.0), (10, 0.1)])[0], 6)
    -1.0
"""

from .executor import run_tasks
from .regression import (
    reference_slope,
    fit_rate,
    bootstrap_slope_ci,
    log_model_fit,
    default_acceptance,
    build_rate_report,
)
from .writers import (
    output_name,
    atomic_write,
    atomic_write_bytes,
    atomic_write_text,
    write_records_csv,
    write_json_model,
    read_json_model,
)

__all__ = [
    'run_tasks',
    'reference_slope',
    'fit_rate',
    'bootstrap_slope_ci',
    'log_model_fit',
    'default_acceptance',
    'build_rate_report',
    'output_name',
    'atomic_write',
    'atomic_write_bytes',
    'atomic_write_text',
    'write_records_csv',
    'write_json_model',
    'read_json_model',
]
