# src/pipelines/plot_pipeline.py
"""Render a rate report JSON as a log-log SVG."""

from pathlib import Path
from typing import List, Tuple

from core.constants import EXIT_CODES
from core.logging import log_pipeline_stage
from core.models import RateReport

from pipelines.base_pipeline import BasePipeline
from pipelines.pipeline_registry import register_pipeline
from pipelines.tools.plotting import render_plot
from pipelines.tools.writers import atomic_write_text, output_name, read_json_model


class PlotPipeline(BasePipeline):

    def __init__(self):
        super().__init__('plot', 'Render a rate report as a log-log SVG')

    @log_pipeline_stage('Measure')
    async def measure(self) -> RateReport:
        return read_json_model(self.invocation.input_path, RateReport)

    @log_pipeline_stage('Summarize')
    async def summarize(self, measured: RateReport) -> Tuple[RateReport, str]:
        return measured, render_plot(measured, self.invocation.reference_slope)

    def target(self, report: RateReport) -> Path:
        """--out names the SVG file, or the directory it goes into."""
        out = self.output_dir()
        if out.suffix.lower() == '.svg':
            return out
        return out / output_name(report.name, 'svg', self.deterministic)

    @log_pipeline_stage('Persist')
    async def persist(self, summary) -> List[Path]:
        report, document = summary
        return [atomic_write_text(self.target(report), document)]

    def exit_status(self, summary) -> int:
        return EXIT_CODES['SUCCESS']


def register_pipelines():
    register_pipeline(PlotPipeline())
