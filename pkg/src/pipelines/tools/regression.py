# src/pipelines/tools/regression.py
"""
Rate fitting for Monte Carlo ladders.

A rate experiment yields replicate values at each sample size n. These are
aggregated to per-n means and standard errors, the log-mean is regressed
on log n, the slope gets a bootstrap confidence interval over replicates,
and for d = 2 the means are also fitted to the sqrt(log n / n) model.
"""

import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import linregress

from core.constants import (
    BOOTSTRAP_RESAMPLES, CI_SLOPE_TOLERANCE, D2_LOG_MODEL_CRITERION, SLOPE_BAND_HALF_WIDTH,
)
from core.exceptions import InvalidInputError
from core.logging import log_with_timestamp
from core.models import AcceptanceBand, LogModelFit, RatePoint, RateReport, SpotCheck

_LOGGER_NAME = "Rate Fit"


def reference_slope(d: int) -> float:
    """Exponent of the expected rate: -1/2 for d <= 2, -1/d above."""
    if d < 1:
        raise InvalidInputError("dimension must be >= 1", {'d': d})
    return -0.5 if d <= 2 else -1.0 / d


def fit_rate(points: Iterable[Tuple[float, float]]) -> Tuple[float, float, float]:
    """
    Least squares of log(mean) on log(n).

    Returns:
        (slope, intercept, r_squared); the intercept is in natural logs

    Raises:
        InvalidInputError: fewer than two distinct n, or a nonpositive mean
    """
    points = [(float(n), float(mean)) for n, mean in points]
    if any(n <= 0 or mean <= 0 for n, mean in points):
        raise InvalidInputError("rate fit needs positive n and positive means", {'points': points})
    if len({n for n, _ in points}) < 2:
        raise InvalidInputError("rate fit needs at least two distinct n", {'points': points})
    x = np.log([n for n, _ in points])
    y = np.log([mean for _, mean in points])
    fit = linregress(x, y)
    r_squared = float(fit.rvalue ** 2) if np.isfinite(fit.rvalue) else 1.0
    return float(fit.slope), float(fit.intercept), r_squared


def bootstrap_slope_ci(ns: Sequence[int], samples: Sequence[Sequence[float]],
                       rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES,
                       level: float = 0.95) -> Tuple[float, float]:
    """
    Percentile interval of the fitted slope under resampling of replicates within each n.
    """
    x = np.log(np.asarray(ns, dtype=float))
    centered = x - x.mean()
    denominator = float(np.sum(centered ** 2))
    if denominator <= 0:
        raise InvalidInputError("bootstrap needs at least two distinct n")

    means = np.empty((resamples, len(ns)))
    for column, values in enumerate(samples):
        values = np.asarray(values, dtype=float)
        index = rng.integers(0, values.size, size=(resamples, values.size))
        means[:, column] = values[index].mean(axis=1)
    logs = np.log(np.maximum(means, np.finfo(float).tiny))
    slopes = (logs - logs.mean(axis=1, keepdims=True)) @ centered / denominator

    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(slopes, [tail, 100.0 - tail])
    return float(low), float(high)


def log_model_fit(ns: Sequence[int], means: Sequence[float]) -> Optional[LogModelFit]:
    """
    Fit mean * sqrt(n / log n) to a constant.

    Sample sizes n <= 1 (log n <= 0) are skipped; None when fewer than two remain.
    """
    pairs = [(n, mean) for n, mean in zip(ns, means) if n > 1 and mean > 0]
    if len(pairs) < 2:
        return None
    constants = [mean * math.sqrt(n / math.log(n)) for n, mean in pairs]
    return LogModelFit(
        constants=constants,
        max_min_ratio=max(constants) / min(constants),
        residual=float(np.std(np.log(constants))),
    )


def default_acceptance(d: int) -> AcceptanceBand:
    """Slope within 0.1 of the reference (d = 1, 3); log model max/min < 2 (d = 2)."""
    if d == 2:
        return AcceptanceBand(log_ratio_max=D2_LOG_MODEL_CRITERION)
    expected = reference_slope(d)
    return AcceptanceBand(
        slope_min=expected - SLOPE_BAND_HALF_WIDTH,
        slope_max=expected + SLOPE_BAND_HALF_WIDTH,
    )


def is_accepted(slope: float, log_model: Optional[LogModelFit], band: AcceptanceBand) -> bool:
    """Every bound the band sets must hold; a log-model bound without a log model is skipped."""
    if band.slope_min is not None and slope < band.slope_min:
        return False
    if band.slope_max is not None and slope > band.slope_max:
        return False
    if band.log_ratio_max is not None and log_model is not None:
        if log_model.max_min_ratio >= band.log_ratio_max:
            return False
    return True


def aggregate_points(table: pd.DataFrame, value_column: str = 'wasserstein') -> List[RatePoint]:
    """Per-n mean, standard error (ddof = 1) and replicate values, in increasing n."""
    points = []
    for n, group in table.sort_values(['n', 'replicate']).groupby('n', sort=True):
        values = group[value_column].to_numpy(dtype=float)
        standard_error = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
        points.append(RatePoint(
            n=int(n),
            h=float(group['h'].iloc[0]),
            mean=float(values.mean()),
            standard_error=standard_error,
            values=values.tolist(),
        ))
    return points


def monotone_trend_warnings(points: Sequence[RatePoint]) -> List[str]:
    """Increases of the mean beyond 3 combined standard errors."""
    warnings = []
    for first, second in zip(points, points[1:]):
        spread = 3.0 * math.hypot(first.standard_error, second.standard_error)
        if second.mean > first.mean + spread:
            warnings.append(
                f"mean increased from n={first.n} ({first.mean:.4g}) to n={second.n} ({second.mean:.4g})"
            )
    return warnings


def interval_warnings(slope: float, interval: Tuple[float, float]) -> List[str]:
    """Flag a bootstrap interval that misses the fitted slope, a sign of a degenerate resample."""
    low, high = interval
    if low - CI_SLOPE_TOLERANCE <= slope <= high + CI_SLOPE_TOLERANCE:
        return []
    return [f"bootstrap interval [{low:.4g}, {high:.4g}] excludes the fitted slope {slope:.4g}"]


def build_rate_report(name: str, d: int, p: float, solver: str, table: pd.DataFrame,
                      rng: np.random.Generator, estimator: str = 'empirical',
                      value_column: str = 'wasserstein', master_seed: int = 0,
                      acceptance: Optional[AcceptanceBand] = None,
                      spot_checks: Sequence[SpotCheck] = (),
                      config: Optional[Dict[str, Any]] = None,
                      warnings: Sequence[str] = ()) -> RateReport:
    """
    Aggregate a replicate table into a RateReport.

    Args:
        table: one row per replicate with columns n, replicate, h and value_column
        rng: generator for the bootstrap resamples
    """
    points = aggregate_points(table, value_column)
    slope, intercept, r_squared = fit_rate((point.n, point.mean) for point in points)
    raw_ci = bootstrap_slope_ci([point.n for point in points], [point.values for point in points], rng)
    slope_ci = (min(raw_ci[0], slope), max(raw_ci[1], slope))

    log_model = log_model_fit([point.n for point in points], [point.mean for point in points]) if d == 2 else None
    band = acceptance if acceptance is not None else default_acceptance(d)
    accepted = is_accepted(slope, log_model, band)

    all_warnings = list(warnings) + monotone_trend_warnings(points) + interval_warnings(slope, raw_ci)
    for message in all_warnings:
        log_with_timestamp(f"{name}: {message}", _LOGGER_NAME, "warning")
    log_with_timestamp(
        f"{name}: slope {slope:.4f} CI [{slope_ci[0]:.4f}, {slope_ci[1]:.4f}] "
        f"reference {reference_slope(d):.4f} accepted={accepted}",
        _LOGGER_NAME,
    )
    return RateReport(
        name=name,
        d=d,
        p=p,
        solver=solver,
        estimator=estimator,
        points=points,
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        slope_ci=slope_ci,
        bootstrap_interval=raw_ci,
        reference_slope=reference_slope(d),
        log_model=log_model,
        spot_checks=list(spot_checks),
        accepted=accepted,
        master_seed=master_seed,
        config=config or {},
        warnings=all_warnings,
    )
