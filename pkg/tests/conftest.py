"""
Test configuration and fixtures for the torus optimal transport lab.

Puts src/ on the Python path and isolates log and output directories in a
temporary directory before any lab module is imported.
"""
import math
import os
import sys
import tempfile
from pathlib import Path

import pytest

PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT / 'src'))

_SESSION_DIR = Path(tempfile.mkdtemp(prefix='torus_ot_lab_test_'))
os.environ['TORUS_OT_LAB_LOG_DIR'] = str(_SESSION_DIR / 'logs')
os.environ['TORUS_OT_LAB_OUTPUT_DIR'] = str(_SESSION_DIR / 'results')
os.environ.pop('TORUS_OT_LAB_JOBS', None)

from core.config import config  # noqa: E402
from core.models import RatePoint, RateReport  # noqa: E402

config.reload()

CONFIGS_DIR = PROJECT_ROOT / 'configs'


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS_DIR


@pytest.fixture
def write_toml(tmp_path):
    """Write a TOML document into tmp_path and return its path."""
    def _write(text: str, name: str = 'config.toml') -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write


@pytest.fixture
def reset_config():
    """Restore settings from the environment after a test changes them."""
    yield config
    config.reload()


def power_law_report(ns=(100, 1000, 10000), c=0.3, slope=-0.5, name='power_law', d=1,
                     standard_error=0.0) -> RateReport:
    """RateReport of the exact power law c * n^slope."""
    points = [
        RatePoint(n=n, h=0.1, mean=c * n ** slope, standard_error=standard_error,
                  values=[c * n ** slope] * 5)
        for n in ns
    ]
    return RateReport(
        name=name, d=d, p=2.0, solver='exact', points=points,
        slope=slope, intercept=math.log(c), r_squared=1.0,
        slope_ci=(slope, slope), reference_slope=-0.5,
    )


@pytest.fixture
def rate_report_factory():
    return power_law_report
