# src/pipelines/fluctuation_pipeline.py
"""
Fluctuation of the smoothed empirical density.

Runs the moment inequality for A(f_{n,h} - f_h), the multiplier-sum
scalings that control it, and the rate of E||A(f_{n,h} - f_h)||_p over an
n ladder.
"""

import asyncio

from core.models import LemmaSuiteConfig, RateReport

from pipelines.base_pipeline import SuitePipeline
from pipelines.pipeline_registry import register_pipeline
from pipelines.tools.suites import run_sections


async def fluctuation_rate_async(suite: LemmaSuiteConfig, jobs: int = 1) -> RateReport:
    _, rates = await run_sections(suite, ('fluctuation_rate',), jobs)
    return rates[0]


def fluctuation_rate(suite: LemmaSuiteConfig, jobs: int = 1) -> RateReport:
    """Fitted rate of the smoothed fluctuation norm; the section must be enabled."""
    return asyncio.run(fluctuation_rate_async(suite.model_copy(
        update={'fluctuation_rate': suite.fluctuation_rate.model_copy(update={'enabled': True})}
    ), jobs))


class FluctuationPipeline(SuitePipeline):
    sections = ('rosenthal', 'multiplier_sums', 'fluctuation_rate')

    def __init__(self):
        super().__init__('fluctuation', 'Moment bound, multiplier sums and rate of the smoothed fluctuation')


def register_pipelines():
    register_pipeline(FluctuationPipeline())
