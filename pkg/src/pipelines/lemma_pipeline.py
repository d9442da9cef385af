# src/pipelines/lemma_pipeline.py
"""
Lemma suite pipeline: every enabled section of the suite config.

Example:
    >>> from core.config import load_config_file
    >>> from core.models import LemmaSuiteConfig
    >>> suite = load_config_file('configs/default.toml', LemmaSuiteConfig)
    >>> reports = run_lemma_suite(suite, jobs=4)
    >>> sum(report.violated for report in reports)
    0
"""

import asyncio
from typing import List, Tuple

from core.models import BoundReport, LemmaSuiteConfig, RateReport

from pipelines.base_pipeline import SuitePipeline
from pipelines.pipeline_registry import register_pipeline
from pipelines.tools.suites import SECTION_ORDER, run_sections


async def run_lemma_suite_async(suite: LemmaSuiteConfig,
                                jobs: int = 1) -> Tuple[List[BoundReport], List[RateReport]]:
    return await run_sections(suite, SECTION_ORDER, jobs)


def run_lemma_suite(suite: LemmaSuiteConfig, jobs: int = 1) -> List[BoundReport]:
    """All bound reports of the enabled sections, in section order."""
    reports, _ = asyncio.run(run_lemma_suite_async(suite, jobs))
    return reports


class LemmaPipeline(SuitePipeline):
    """Runs the whole lemma suite."""

    sections = SECTION_ORDER

    def __init__(self):
        super().__init__('verify-lemma', 'Run every enabled check of the lemma suite')


def register_pipelines():
    register_pipeline(LemmaPipeline())
