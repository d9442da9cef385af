# src/pipelines/rate_pipeline.py
"""
Rate experiment pipeline.

For each n on the ladder and each replicate, draw a seeded sample, measure
W_p against the quantized density (or, for the smoothed estimator, between
the quantized kernel density estimate and the quantized density), then fit
the decay exponent of the per-n means.

Example:
    >>> from core.config import load_config_file
    >>> from core.models import ExperimentConfig
    >>> experiment = load_config_file('configs/d1.toml', ExperimentConfig)
    >>> report = run_rate_experiment(experiment, jobs=4)
    >>> report.slope
    -0.49...
"""

import asyncio
import time
from datetime import datetime, timezone
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from core.config import load_config_file, apply_overrides
from core.constants import EXIT_CODES
from core.exceptions import ExperimentError, LabError
from core.logging import (
    log_with_timestamp, log_pipeline_stage, PerformanceLogger, create_experiment_logger,
)
from core.models import ExperimentConfig, RateReport, SpotCheck

from lab.densities import DensitySpec, density_from_config, sample
from lab.kernels import bump_kernel
from lab.rng import derived_seed, make_generator
from lab.torus import Grid
from lab.transport import (
    empirical_vs_density_wasserstein, smoothed_vs_density_wasserstein,
)
from pipelines.base_pipeline import BasePipeline
from pipelines.pipeline_registry import register_pipeline
from pipelines.tools.executor import run_tasks
from pipelines.tools.regression import build_rate_report
from pipelines.tools.writers import output_name, write_json_model, write_records_csv

BOOTSTRAP_STREAM = 0xB007


def _estimate(experiment: ExperimentConfig, density: DensitySpec, grid: Grid, n: int, h: float,
              seed: int, method: str) -> float:
    drawn = sample(density, n, seed)
    if experiment.estimator == 'smoothed':
        estimate = smoothed_vs_density_wasserstein(
            drawn, density, bump_kernel(experiment.d), h, grid, experiment.p,
            method, experiment.epsilon, experiment.max_iter,
        )
    else:
        estimate = empirical_vs_density_wasserstein(
            drawn, density, grid, experiment.p, method, experiment.epsilon, experiment.max_iter,
        )
    return float(estimate.value)


def measure_replicate(experiment: ExperimentConfig, density: DensitySpec, grid: Grid,
                      n: int, replicate: int, deterministic: bool = False) -> Dict[str, Any]:
    """
    One CSV row: the W_p estimate of replicate `replicate` at sample size n.

    Raises:
        ExperimentError: wrapping any lab error with the (n, replicate) coordinate
    """
    seed = derived_seed(experiment.master_seed, n, replicate)
    h = experiment.bandwidth(n)
    started = time.perf_counter()
    try:
        value = _estimate(experiment, density, grid, n, h, seed, experiment.solver)
    except LabError as e:
        raise ExperimentError(
            f"Replicate failed: {e.message}", (n, replicate),
            {'cause': type(e).__name__, **e.details}
        ) from e
    runtime_ms = 0 if deterministic else int(round(1000.0 * (time.perf_counter() - started)))
    return {
        'd': experiment.d,
        'p': experiment.p,
        'n': n,
        'replicate': replicate,
        'seed': seed,
        'h': h,
        'wasserstein': value,
        'solver': experiment.solver,
        'runtime_ms': runtime_ms,
    }


def spot_check(experiment: ExperimentConfig, density: DensitySpec, grid: Grid, n: int,
               entropic: float) -> SpotCheck:
    """Replicate 0 at n re-solved exactly."""
    seed = derived_seed(experiment.master_seed, n, 0)
    try:
        exact = _estimate(experiment, density, grid, n, experiment.bandwidth(n), seed, 'exact')
    except LabError as e:
        raise ExperimentError(f"Spot check failed: {e.message}", (n, 0), e.details) from e
    return SpotCheck(n=n, replicate=0, entropic=entropic, exact=exact, gap=entropic - exact)


def spot_check_sizes(experiment: ExperimentConfig) -> List[int]:
    if experiment.solver != 'entropic' or experiment.exact_spot_check_max_n is None:
        return []
    return [n for n in experiment.n_ladder if n <= experiment.exact_spot_check_max_n]


async def measure_rate_experiment(experiment: ExperimentConfig, jobs: int = 1,
                                  deterministic: bool = False) -> Tuple[pd.DataFrame, List[SpotCheck]]:
    """Replicate table (one row per (n, replicate)) and entropic spot checks."""
    density = density_from_config(experiment.d, experiment.density)
    grid = Grid(d=experiment.d, n_per_axis=experiment.grid_n)
    tasks = [
        partial(measure_replicate, experiment, density, grid, n, replicate, deterministic)
        for n in experiment.n_ladder
        for replicate in range(experiment.reps)
    ]
    with PerformanceLogger(f"{experiment.name}: {len(tasks)} replicates", "Rate Experiment"):
        records = await run_tasks(tasks, jobs)
    table = pd.DataFrame.from_records(records)

    sizes = spot_check_sizes(experiment)
    first = {row['n']: row['wasserstein'] for row in records if row['replicate'] == 0}
    checks = await run_tasks(
        [partial(spot_check, experiment, density, grid, n, first[n]) for n in sizes], jobs
    )
    return table, checks


def summarize_rate_experiment(experiment: ExperimentConfig, table: pd.DataFrame,
                              spot_checks: List[SpotCheck]) -> RateReport:
    warnings = [
        f"entropic value below exact at n={check.n} (gap {check.gap:.3g})"
        for check in spot_checks if check.gap < -1e-12
    ]
    return build_rate_report(
        experiment.name,
        experiment.d,
        experiment.p,
        experiment.solver,
        table,
        make_generator(experiment.master_seed, BOOTSTRAP_STREAM),
        estimator=experiment.estimator,
        master_seed=experiment.master_seed,
        acceptance=experiment.acceptance,
        spot_checks=spot_checks,
        config=experiment.model_dump(mode='json'),
        warnings=warnings,
    )


async def run_rate_experiment_async(experiment: ExperimentConfig, jobs: int = 1,
                                    deterministic: bool = False) -> Tuple[RateReport, pd.DataFrame]:
    table, checks = await measure_rate_experiment(experiment, jobs, deterministic)
    return summarize_rate_experiment(experiment, table, checks), table


def run_rate_experiment(experiment: ExperimentConfig, jobs: int = 1) -> RateReport:
    """Run a rate experiment to completion; deterministic given the config."""
    report, _ = asyncio.run(run_rate_experiment_async(experiment, jobs, deterministic=True))
    return report


class RatePipeline(BasePipeline):
    """Empirical convergence rate of E W_p(mu_n, mu) over an n ladder."""

    def __init__(self):
        super().__init__('rate', 'Fit the convergence rate of E W_p(mu_n, mu) over an n ladder')
        self.experiment: Optional[ExperimentConfig] = None

    def load_experiment(self) -> ExperimentConfig:
        experiment = load_config_file(self.invocation.config_path, ExperimentConfig)
        return apply_overrides(
            experiment,
            master_seed=self.invocation.seed,
            solver=self.invocation.solver,
            epsilon=self.invocation.epsilon,
        )

    @log_pipeline_stage('Measure')
    async def measure(self) -> Tuple[pd.DataFrame, List[SpotCheck]]:
        self.experiment = self.load_experiment()
        log_with_timestamp(
            f"{self.experiment.name}: d={self.experiment.d} p={self.experiment.p:g} "
            f"ladder={self.experiment.n_ladder} reps={self.experiment.reps} "
            f"solver={self.experiment.solver} jobs={self.jobs}",
            "Rate Experiment",
        )
        return await measure_rate_experiment(self.experiment, self.jobs, self.deterministic)

    @log_pipeline_stage('Summarize')
    async def summarize(self, measured) -> Tuple[RateReport, pd.DataFrame]:
        table, checks = measured
        report = summarize_rate_experiment(self.experiment, table, checks)
        logger = create_experiment_logger(self.experiment.name)
        for point in report.points:
            logger.info(f"n={point.n} h={point.h:.4g} mean={point.mean:.6g} se={point.standard_error:.3g}")
        logger.info(f"slope={report.slope:.4f} ci={report.slope_ci} accepted={report.accepted}")
        return report, table

    @log_pipeline_stage('Persist')
    async def persist(self, summary) -> List[Path]:
        report, table = summary
        directory = self.output_dir()
        now = datetime.now(timezone.utc)
        return [
            write_records_csv(directory / output_name(report.name, 'csv', self.deterministic, now), table),
            write_json_model(directory / output_name(report.name, 'json', self.deterministic, now), report),
        ]

    def exit_status(self, summary) -> int:
        report, _ = summary
        return EXIT_CODES['SUCCESS'] if report.accepted is not False else EXIT_CODES['VIOLATED']


def register_pipelines():
    register_pipeline(RatePipeline())
