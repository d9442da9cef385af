# src/pipelines/tools/suites.py
"""
Task builders for the lemma suite.

Each section of a LemmaSuiteConfig becomes a list of independent tasks
(one per random instance, sample size or dimension) and a combine step
that turns the task results into reports. Every task draws from its own
seed stream (master_seed, section, ...), so results do not depend on how
tasks are scheduled.
"""

from functools import partial
from typing import Any, Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd

from core.exceptions import InvalidInputError
from core.logging import log_with_timestamp
from core.models import BoundReport, LemmaSuiteConfig, RateReport, SuiteReport

from lab.bounds import (
    beckmann_consistency_report, bias_ladder_report, bias_ratio, decomposition_report,
    multiplier_sum_report, norm_sandwich_report, peyre_check, rosenthal_check,
    rosenthal_ladder_report, smoothed_fluctuation_norm, smoothing_coupling_check,
    summarize_verdicts, wasserstein_monotonicity_check, weak_duality_report,
)
from lab.densities import (
    DiscreteMeasure, density_from_config, density_to_field, random_cosine_mixture, sample,
)
from lab.kernels import bump_kernel
from lab.rng import derived_seed, make_generator
from lab.torus import Grid, GridField
from pipelines.tools.executor import run_tasks
from pipelines.tools.regression import build_rate_report

SECTION_ORDER = (
    'peyre', 'smoothing_coupling', 'bias', 'rosenthal', 'multiplier_sums',
    'decomposition', 'norms', 'fluctuation_rate',
)
# seed stream per section
SECTION_STREAMS = {name: index + 1 for index, name in enumerate(SECTION_ORDER)}
BOOTSTRAP_STREAM = 0xB007


class SectionPlan(NamedTuple):
    tasks: List[Callable[[], Any]]
    combine: Callable[[List[Any]], List[Any]]


def _flatten(results: List[Any]) -> List[Any]:
    flat = []
    for result in results:
        if isinstance(result, list):
            flat.extend(result)
        else:
            flat.append(result)
    return flat


def _with_instance(report: BoundReport, **extra: Any) -> BoundReport:
    return report.model_copy(update={'metadata': {**report.metadata, **extra}})


def _seed(suite: LemmaSuiteConfig, section: str, *path: int) -> int:
    return derived_seed(suite.master_seed, SECTION_STREAMS[section], *path)


# ---------------------------------------------------------------------------
# Instance tasks
# ---------------------------------------------------------------------------

def _peyre_instance(suite: LemmaSuiteConfig, d: int, instance: int) -> BoundReport:
    section = suite.peyre
    seed = _seed(suite, 'peyre', d, instance)
    rng = make_generator(seed)
    grid = Grid(d=d, n_per_axis=section.grid_by_dim[d])
    f = random_cosine_mixture(d, rng, section.max_modes, section.max_frequency, section.amplitude)
    g = random_cosine_mixture(d, rng, section.max_modes, section.max_frequency, section.amplitude)
    report = peyre_check(f, density_to_field(g, grid), section.p, grid, section.mode)
    return _with_instance(report, instance=instance, seed=seed)


def _smoothing_coupling_instance(suite: LemmaSuiteConfig, d: int, instance: int) -> BoundReport:
    section = suite.smoothing_coupling
    seed = _seed(suite, 'smoothing_coupling', d, instance)
    rng = make_generator(seed)
    grid = Grid(d=d, n_per_axis=section.grid_n)
    n = int(rng.integers(1, section.max_n + 1))
    h = float(rng.uniform(section.h_min_cells / section.grid_n, section.h_max))
    p = float(rng.choice(section.p_values))
    density = random_cosine_mixture(d, rng)
    drawn = sample(density, n, derived_seed(seed, 1))
    report = smoothing_coupling_check(drawn, bump_kernel(d), h, grid, p)
    return _with_instance(report, instance=instance, seed=seed)


def _bias_instance(suite: LemmaSuiteConfig, d: int, instance: int, p: float) -> List[BoundReport]:
    section = suite.bias
    seed = _seed(suite, 'bias', d, instance)
    density = random_cosine_mixture(d, make_generator(seed))
    grid = Grid(d=d, n_per_axis=section.grid_n)
    kernel = bump_kernel(d)
    hs = [2.0 ** -exponent for exponent in section.h_exponents]
    reports = [bias_ratio(density, kernel, h, p, grid) for h in hs]
    reports.append(bias_ladder_report(density, kernel, hs, p, grid))
    return [_with_instance(report, instance=instance, seed=seed) for report in reports]


def _norms_instance(suite: LemmaSuiteConfig, d: int, instance: int) -> List[BoundReport]:
    section = suite.norms
    seed = _seed(suite, 'norms', d, instance)
    rng = make_generator(seed)
    grid = Grid(d=d, n_per_axis=section.grid_by_dim[d])
    values = rng.standard_normal(grid.size)
    field = GridField(grid=grid, values=values - values.mean())

    reports = [norm_sandwich_report(field), beckmann_consistency_report(field)]
    if instance < section.dual_fields:
        for p in section.p_values:
            if p > 2.0:
                reports.append(weak_duality_report(
                    field, p, n_modes=section.n_modes, iters=section.iters, seed=derived_seed(seed, 1)
                ))
        atoms = rng.random((2, 8, d))
        weights = rng.dirichlet(np.ones(8), size=2)
        reports.append(wasserstein_monotonicity_check(
            DiscreteMeasure(atoms=atoms[0], weights=weights[0]),
            DiscreteMeasure(atoms=atoms[1], weights=weights[1]),
            [1.0, 2.0] + [p for p in section.p_values if p > 2.0],
        ))
    return [_with_instance(report, instance=instance, seed=seed) for report in reports]


def _fluctuation_replicate(suite: LemmaSuiteConfig, n: int, replicate: int) -> Dict[str, Any]:
    section = suite.fluctuation_rate
    seed = _seed(suite, 'fluctuation_rate', n, replicate)
    density = density_from_config(section.d, section.density)
    grid = Grid(d=section.d, n_per_axis=section.grid_n)
    h = section.h_rule.bandwidth(n, section.d)
    drawn = sample(density, n, seed)
    value = smoothed_fluctuation_norm(drawn.points, density, bump_kernel(section.d), h, section.p, grid)
    return {'n': n, 'replicate': replicate, 'seed': seed, 'h': h, 'value': value}


# ---------------------------------------------------------------------------
# Section plans
# ---------------------------------------------------------------------------

def _peyre_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.peyre
    tasks = [partial(_peyre_instance, suite, d, k) for d in section.dims for k in range(section.instances)]
    return SectionPlan(tasks, _flatten)


def _smoothing_coupling_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.smoothing_coupling
    tasks = [partial(_smoothing_coupling_instance, suite, d, k)
             for d in section.dims for k in range(section.instances)]
    return SectionPlan(tasks, _flatten)


def _bias_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.bias
    tasks = [partial(_bias_instance, suite, d, k, p)
             for d in section.dims for k in range(section.densities) for p in section.p_values]
    return SectionPlan(tasks, _flatten)


def _rosenthal_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.rosenthal
    density = density_from_config(section.d, section.density)
    grid = Grid(d=section.d, n_per_axis=section.grid_n)
    kernel = bump_kernel(section.d)
    seed = _seed(suite, 'rosenthal')
    tasks = [
        partial(rosenthal_check, density, kernel, section.h_rule.bandwidth(n, section.d),
                section.p, n, grid, section.reps, seed)
        for n in section.n_ladder
    ]
    return SectionPlan(tasks, lambda reports: list(reports) + [rosenthal_ladder_report(reports)])


def _multiplier_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.multiplier_sums
    hs = [2.0 ** -exponent for exponent in section.h_exponents]
    tasks = [
        partial(multiplier_sum_report, bump_kernel(d), hs, section.p_star, section.truncation_factor)
        for d in section.dims
    ]
    return SectionPlan(tasks, _flatten)


def _decomposition_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.decomposition
    task = partial(
        decomposition_report,
        density_from_config(section.d, section.density),
        bump_kernel(section.d),
        section.n,
        section.p,
        Grid(d=section.d, n_per_axis=section.grid_n),
        section.reps,
        _seed(suite, 'decomposition'),
    )
    return SectionPlan([task], _flatten)


def _norms_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.norms
    tasks = [partial(_norms_instance, suite, d, k) for d in section.dims for k in range(section.field_count)]
    return SectionPlan(tasks, _flatten)


def fluctuation_rate_report(suite: LemmaSuiteConfig, records: List[Dict[str, Any]]) -> RateReport:
    """RateReport of the smoothed fluctuation norm over the section's n ladder."""
    section = suite.fluctuation_rate
    table = pd.DataFrame.from_records(records)
    return build_rate_report(
        f"{suite.name}.fluctuation",
        section.d,
        section.p,
        'spectral',
        table,
        make_generator(suite.master_seed, SECTION_STREAMS['fluctuation_rate'], BOOTSTRAP_STREAM),
        estimator='fluctuation',
        value_column='value',
        master_seed=suite.master_seed,
        config=section.model_dump(mode='json'),
    )


def _fluctuation_plan(suite: LemmaSuiteConfig) -> SectionPlan:
    section = suite.fluctuation_rate
    tasks = [partial(_fluctuation_replicate, suite, n, r) for n in section.n_ladder for r in range(section.reps)]
    return SectionPlan(tasks, lambda records: [fluctuation_rate_report(suite, records)])


SECTION_BUILDERS: Dict[str, Callable[[LemmaSuiteConfig], SectionPlan]] = {
    'peyre': _peyre_plan,
    'smoothing_coupling': _smoothing_coupling_plan,
    'bias': _bias_plan,
    'rosenthal': _rosenthal_plan,
    'multiplier_sums': _multiplier_plan,
    'decomposition': _decomposition_plan,
    'norms': _norms_plan,
    'fluctuation_rate': _fluctuation_plan,
}


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def enabled_sections(suite: LemmaSuiteConfig, sections: Sequence[str]) -> List[str]:
    unknown = [name for name in sections if name not in SECTION_BUILDERS]
    if unknown:
        raise InvalidInputError(f"Unknown suite sections: {unknown}", {'sections': list(sections)})
    return [name for name in SECTION_ORDER if name in sections and getattr(suite, name).enabled]


async def run_sections(suite: LemmaSuiteConfig, sections: Sequence[str] = SECTION_ORDER,
                       jobs: int = 1) -> Tuple[List[BoundReport], List[RateReport]]:
    """
    Run the enabled sections; all their tasks share one worker pool.

    Returns:
        Bound reports and rate reports, in section order
    """
    plans = [(name, SECTION_BUILDERS[name](suite)) for name in enabled_sections(suite, sections)]
    tasks = [task for _, plan in plans for task in plan.tasks]
    log_with_timestamp(f"{suite.name}: {len(tasks)} tasks in {len(plans)} sections", "Lemma Suite")
    results = await run_tasks(tasks, jobs)

    reports, rates = [], []
    offset = 0
    for name, plan in plans:
        chunk = results[offset:offset + len(plan.tasks)]
        offset += len(plan.tasks)
        for item in plan.combine(chunk):
            if isinstance(item, RateReport):
                rates.append(item)
            else:
                reports.append(_with_instance(item, section=name))
        log_with_timestamp(f"{suite.name}: section {name} done", "Lemma Suite", "debug")
    return reports, rates


def build_suite_report(suite: LemmaSuiteConfig, sections: Sequence[str],
                       reports: List[BoundReport], rates: List[RateReport]) -> SuiteReport:
    return SuiteReport(
        name=suite.name,
        master_seed=suite.master_seed,
        sections=enabled_sections(suite, sections),
        reports=reports,
        rates=rates,
        counts=summarize_verdicts(reports),
        config=suite.model_dump(mode='json'),
    )
