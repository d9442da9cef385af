# src/pipelines/base_pipeline.py
"""
Base pipeline class for lab experiments.

Every CLI subcommand is a pipeline with three stages: measure (run the
Monte Carlo or deterministic computations), summarize (aggregate them into
a report) and persist (write the report atomically). The exit status is
derived from the summary.
"""

import traceback
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from core.config import config, load_config_file, apply_overrides
from core.constants import EXIT_CODES
from core.logging import log_with_timestamp, log_pipeline_stage, PerformanceLogger
from core.models import CliInvocation, LemmaSuiteConfig, SuiteReport
from pipelines.tools.suites import build_suite_report, run_sections
from pipelines.tools.writers import output_name, write_json_model


class BasePipeline(ABC):
    """
    Base class for all lab pipelines.

    A pipeline instance is registered once under its subcommand name and
    executed with the parsed command line of each run.
    """

    def __init__(self, name: str, description: str):
        """
        Initialize the base pipeline.

        Args:
            name: Subcommand name
            description: One-line description shown in --help
        """
        self.name = name
        self.description = description
        self.invocation: Optional[CliInvocation] = None

    @abstractmethod
    async def measure(self) -> Any:
        """Run the computations of this subcommand."""
        pass

    @abstractmethod
    async def summarize(self, measured: Any) -> Any:
        """Aggregate measurements into a report."""
        pass

    @abstractmethod
    async def persist(self, summary: Any) -> List[Path]:
        """Write the report; returns the written paths."""
        pass

    @abstractmethod
    def exit_status(self, summary: Any) -> int:
        """Exit code for a finished run."""
        pass

    async def execute(self, invocation: CliInvocation) -> int:
        """
        Execute measure, summarize and persist for one invocation.

        Returns:
            Exit code of the run

        Raises:
            LabError: any failure, after logging it with its traceback
        """
        self.invocation = invocation
        try:
            log_with_timestamp(f"Starting {self.name} pipeline", "Pipeline")
            measured = await self.measure()
            summary = await self.summarize(measured)
            written = await self.persist(summary)
            for path in written:
                log_with_timestamp(f"Wrote {path}", "Pipeline")
            status = self.exit_status(summary)
            if status == EXIT_CODES['SUCCESS']:
                log_with_timestamp(f"{self.name} pipeline completed successfully", "Pipeline")
            else:
                log_with_timestamp(f"{self.name} pipeline finished with exit code {status}", "Pipeline", "warning")
            return status
        except Exception as e:
            log_with_timestamp(f"Error in {self.name} pipeline: {e}", "Pipeline", "error")
            log_with_timestamp(f"Pipeline traceback: {traceback.format_exc()}", "Pipeline", "debug")
            raise

    @property
    def jobs(self) -> int:
        """--jobs, then TORUS_OT_LAB_JOBS, then 1."""
        if self.invocation is not None and self.invocation.jobs is not None:
            return self.invocation.jobs
        return config.jobs

    @property
    def deterministic(self) -> bool:
        return bool(self.invocation and self.invocation.deterministic_names)

    def output_dir(self) -> Path:
        if self.invocation is not None and self.invocation.output is not None:
            return Path(self.invocation.output)
        return Path(config.output_dir)

    def get_pipeline_info(self) -> Dict[str, Any]:
        """
        Get pipeline information for registration.

        Returns:
            Dictionary containing pipeline information
        """
        return {
            "name": self.name,
            "description": self.description,
            "execute": self.execute,
        }


class SuitePipeline(BasePipeline):
    """
    Base class for pipelines that run sections of the lemma suite.

    Subclasses choose the sections; measurement, the JSON summary and the
    exit status are shared.
    """

    sections: Sequence[str] = ()

    def __init__(self, name: str, description: str, sections: Optional[Sequence[str]] = None):
        super().__init__(name, description)
        if sections is not None:
            self.sections = tuple(sections)
        self.suite: Optional[LemmaSuiteConfig] = None

    def load_suite(self) -> LemmaSuiteConfig:
        suite = load_config_file(self.invocation.config_path, LemmaSuiteConfig)
        return apply_overrides(suite, master_seed=self.invocation.seed)

    @log_pipeline_stage('Measure')
    async def measure(self):
        self.suite = self.load_suite()
        with PerformanceLogger(f"{self.suite.name} [{', '.join(self.sections)}]", "Lemma Suite"):
            return await run_sections(self.suite, self.sections, self.jobs)

    @log_pipeline_stage('Summarize')
    async def summarize(self, measured) -> SuiteReport:
        reports, rates = measured
        return build_suite_report(self.suite, self.sections, reports, rates)

    @log_pipeline_stage('Persist')
    async def persist(self, summary: SuiteReport) -> List[Path]:
        name = f"{summary.name}.{self.name}"
        target = self.output_dir() / output_name(name, 'json', self.deterministic)
        return [write_json_model(target, summary)]

    def exit_status(self, summary: SuiteReport) -> int:
        if summary.violated or not summary.rates_accepted:
            return EXIT_CODES['VIOLATED']
        return EXIT_CODES['SUCCESS']


# Public API
__all__ = [
    'BasePipeline',
    'SuitePipeline',
]
