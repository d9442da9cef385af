# src/lab/bounds.py
"""
Executable inequality checks.

Every check returns a BoundReport whose verdict follows from lhs, rhs and
the slack budget alone (violated iff lhs > rhs + slack). Inequalities with
fully computable sides are checked directly; those with unknown constants
are checked through the boundedness of an observed ratio over a ladder of
scales.
"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.fft
from scipy.stats import linregress

from core.constants import (
    BIAS_STEP_FACTOR, D1_MULTIPLIER_CRITERION, MIN_ROSENTHAL_REPS, MULTIPLIER_SLOPE_TOLERANCE,
    RATIO_CRITERION, TOLERANCES, VERDICTS,
)
from core.exceptions import InvalidInputError
from core.logging import log_with_timestamp
from core.models import BoundReport

from lab.densities import (
    DensitySpec, DiscreteMeasure, EmpiricalMeasure, density_to_field, quantize, quantize_field, sample,
)
from lab.kernels import (
    KernelSpec, as_bandwidth, kde_field, kde_spectrum, kernel_C0, smoothed_density_field, v_h_sums,
)
from lab.rng import derived_seed
from lab.spectral import (
    SpectralField, beckmann_upper_bound, dual_ascent_lower_bound, drop_nyquist, empirical_spectrum,
    forward_transform, hermitian_part, inverse_transform, lp_norm, riesz_surrogate_norm,
    sobolev_neg_norm_exact_p2, symbol_a,
)
from lab.torus import Grid, GridField
from lab.transport import (
    empirical_vs_density_wasserstein, exact_wasserstein, explicit_smoothing_plan_cost,
)

_LOGGER_NAME = "Bounds"

# E|mean of n centered i.i.d. terms|^p <= C_p * (rhs without constant), p in {2, 4}
ROSENTHAL_CONSTANTS: Dict[float, float] = {2.0: 1.0, 4.0: 16.0}


def _peyre_factor(p: float, f_min: float) -> float:
    return p * f_min ** (1.0 / p - 1.0)


def _standard_error(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def _mean_zero(field: GridField) -> GridField:
    return GridField(grid=field.grid, values=field.values - field.mean())


def _negative_sobolev(field: GridField, p: float) -> float:
    """Exact norm at p = 2, the Beckmann upper bound otherwise."""
    if p == 2.0:
        return sobolev_neg_norm_exact_p2(field)
    return beckmann_upper_bound(field, p)


# ---------------------------------------------------------------------------
# Transport inequality between densities
# ---------------------------------------------------------------------------

def peyre_check(f: DensitySpec, g_field: GridField, p: float, grid: Grid,
                mode: str = 'exact_p2') -> BoundReport:
    """
    W_p(f, g) <= p f_min^(1/p - 1) ||f - g||_{Hdot^{-1,p}} for f >= f_min.

    exact_p2 uses the exact norm (p = 2 only); consequence replaces the norm
    by the Beckmann upper bound, which keeps the check valid for p >= 2.
    """
    if mode not in ('exact_p2', 'consequence'):
        raise InvalidInputError(f"Unknown mode: {mode}", {'mode': mode})
    if mode == 'exact_p2' and p != 2.0:
        raise InvalidInputError("mode exact_p2 requires p = 2", {'p': p})
    if not p >= 2.0:
        raise InvalidInputError("the norm bound needs p >= 2", {'p': p})
    if g_field.grid != grid:
        raise InvalidInputError("g_field lives on a different grid")
    g_min = float(g_field.values.min())
    if g_min < -TOLERANCES['density_negativity']:
        raise InvalidInputError("g_field must be nonnegative", {'min': g_min})
    g_mean = g_field.mean()
    if abs(g_mean - 1.0) > TOLERANCES['field_mass']:
        raise InvalidInputError("g_field must have grid mean 1", {'mean': g_mean})

    f_field = density_to_field(f, grid)
    difference = _mean_zero(f_field - g_field)
    lhs = exact_wasserstein(quantize(f, grid), quantize_field(g_field), p, keep_plan=False).wasserstein
    if mode == 'exact_p2':
        norm = sobolev_neg_norm_exact_p2(difference)
    else:
        norm = beckmann_upper_bound(difference, p)
    rhs = _peyre_factor(p, f.f_min) * norm
    slack = 2.0 * grid.quantization_slack * p * max(lhs, 1.0)

    return BoundReport.evaluate(
        'peyre', lhs, rhs, slack,
        ratio=lhs / rhs if rhs > 0 else None,
        criterion='W_p <= p f_min^(1/p-1) ||f-g||',
        metadata={'d': grid.d, 'p': p, 'n_per_axis': grid.n_per_axis, 'mode': mode,
                  'f_min': f.f_min, 'norm': norm},
    )


def smoothing_coupling_check(sample_points: EmpiricalMeasure, kernel: KernelSpec, h: float,
                             grid: Grid, p: float) -> BoundReport:
    """W_p(mu_n, quantize(mu_{n,h})) <= C_0 h + sqrt(d)/(2N)."""
    h = as_bandwidth(h)
    smoothed = quantize_field(kde_field(sample_points, kernel, h, grid, method='direct'))
    lhs = exact_wasserstein(sample_points.to_discrete(), smoothed, p, keep_plan=False).wasserstein
    rhs = explicit_smoothing_plan_cost(kernel, h, p)
    return BoundReport.evaluate(
        'smoothing_coupling', lhs, rhs, grid.quantization_slack + 1e-9,
        ratio=lhs / rhs,
        criterion='W_p(mu_n, mu_n,h) <= C_0 h',
        metadata={'d': grid.d, 'p': p, 'n': sample_points.n, 'h': h,
                  'n_per_axis': grid.n_per_axis},
    )


# ---------------------------------------------------------------------------
# Bias of the smoothed density
# ---------------------------------------------------------------------------

def _bias_norm(f: DensitySpec, kernel: KernelSpec, h: float, p: float, grid: Grid) -> float:
    bias = smoothed_density_field(f, kernel, h, grid) - density_to_field(f, grid)
    return riesz_surrogate_norm(_mean_zero(bias), p)


def bias_ratio(f: DensitySpec, kernel: KernelSpec, h: float, p: float, grid: Grid) -> BoundReport:
    """
    ||A(f_h - f)||_p against the explicit bound 2 pi C_0(1) h sum|alpha_k|.

    The ratio to h f_max is the observed bias constant; the ratio to
    h ||f||_p is kept in metadata.
    """
    h = as_bandwidth(h)
    if not p >= 2.0:
        raise InvalidInputError("bias check needs p >= 2", {'p': p})
    lhs = _bias_norm(f, kernel, h, p, grid)
    amplitude = sum(abs(mode.alpha) for mode in f.modes or ())
    rhs = 2.0 * math.pi * kernel_C0(kernel, 1.0) * h * amplitude
    f_norm = lp_norm(density_to_field(f, grid), p)
    return BoundReport.evaluate(
        'bias', lhs, rhs, 1e-12,
        ratio=lhs / (h * f.f_max),
        criterion='||A(f_h - f)||_p <= 2 pi C_0(1) h sum|alpha|',
        metadata={'d': grid.d, 'p': p, 'h': h, 'f_max': f.f_max,
                  'ratio_to_lp_norm': lhs / (h * f_norm)},
    )


def bias_ladder_report(f: DensitySpec, kernel: KernelSpec, hs: Sequence[float], p: float,
                       grid: Grid) -> BoundReport:
    """
    Upper boundedness of ||A(f_h - f)||_p / (h f_max) down a ladder of h.

    lhs is the largest ratio relative to the coarsest h (criterion 10).
    Consecutive ratios with h max|m|_2 <= 1/2 must not grow by more than
    10%; a growth there is reported as an lhs above the criterion.
    """
    hs = sorted((as_bandwidth(h) for h in hs), reverse=True)
    if len(hs) < 2:
        raise InvalidInputError("a bias ladder needs at least two bandwidths")
    reports = [bias_ratio(f, kernel, h, p, grid) for h in hs]
    ratios = [report.ratio for report in reports]
    top_frequency = max((float(np.linalg.norm(mode.m)) for mode in f.modes or ()), default=0.0)

    coarsest = ratios[0]
    growth = max(ratios) / coarsest if coarsest > 0 else 0.0
    steps = []
    for (h, first), second in zip(zip(hs, ratios), ratios[1:]):
        resolved = h * top_frequency <= 0.5
        steps.append({'h': h, 'step': second / first if first > 0 else 0.0, 'asserted': resolved})
    explosive = [s for s in steps if s['asserted'] and s['step'] > BIAS_STEP_FACTOR]
    lhs = growth if not explosive else max(growth, RATIO_CRITERION * max(s['step'] for s in explosive))

    warnings = []
    if explosive:
        warnings.append(f"bias ratio grew by more than {BIAS_STEP_FACTOR}x at h={explosive[0]['h']}")
    return BoundReport.evaluate(
        'bias_ladder', lhs, RATIO_CRITERION,
        ratio=growth,
        criterion=f"max ratio / coarsest ratio < {RATIO_CRITERION}; resolved steps <= {BIAS_STEP_FACTOR}",
        metadata={'d': grid.d, 'p': p, 'hs': hs, 'ratios': ratios, 'steps': steps,
                  'bias_exceeds_explicit_bound': any(r.violated for r in reports)},
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Moment inequality for the smoothed fluctuation
# ---------------------------------------------------------------------------

def _fluctuation_symbol(kernel: KernelSpec, h: float, grid: Grid) -> np.ndarray:
    """a(m) kappa(h m) on the grid, Nyquist modes removed."""
    freqs = grid.frequencies()
    symbol = symbol_a().evaluate(freqs) * kernel.kappa_radial(h * np.linalg.norm(freqs.astype(float), axis=-1))
    return drop_nyquist(SpectralField(grid=grid, coeffs=symbol)).coeffs


def _density_moment(f_field: GridField, u_values: np.ndarray, q: float) -> np.ndarray:
    """x -> N^-d sum_y f(y) |U(x - y)|^q as a circular convolution."""
    coeffs = scipy.fft.fftn(f_field.array, norm='forward') * scipy.fft.fftn(np.abs(u_values) ** q, norm='forward')
    return np.clip(scipy.fft.ifftn(coeffs, norm='forward').real, 0.0, None)


def _centered_fluctuation(points: np.ndarray, f_hat: np.ndarray, symbol: np.ndarray,
                          grid: Grid) -> GridField:
    """A(f_{n,h} - f_h) = sum_m a(m) kappa(h m) (mu_n_hat - f_hat)(m) e_m."""
    centered = SpectralField(grid=grid, coeffs=symbol * (empirical_spectrum(points, grid).coeffs - f_hat))
    return inverse_transform(hermitian_part(centered))


def smoothed_fluctuation_norm(points: np.ndarray, f: DensitySpec, kernel: KernelSpec, h: float,
                              p: float, grid: Grid) -> float:
    """||A(f_{n,h} - f_h)||_p for one sample."""
    h = as_bandwidth(h)
    symbol = _fluctuation_symbol(kernel, h, grid)
    f_hat = forward_transform(density_to_field(f, grid)).coeffs
    return lp_norm(_centered_fluctuation(points, f_hat, symbol, grid), p)


def rosenthal_check(f: DensitySpec, kernel: KernelSpec, h: float, p: float, n: int, grid: Grid,
                    reps: int, seed: int) -> BoundReport:
    """
    E||(1/n) sum (U_i - E U_i)||_p^p against
    C_p [n^(-p/2) int (E|U|^2)^(p/2) + n^(1-p) int E|U|^p],
    U_i = A(K_h)(. - X_i). The left side is a Monte Carlo mean over reps.
    """
    h = as_bandwidth(h)
    if p not in ROSENTHAL_CONSTANTS:
        raise InvalidInputError("moment check supports p in {2, 4}", {'p': p})
    if n < 1 or reps < 2:
        raise InvalidInputError("need n >= 1 and reps >= 2", {'n': n, 'reps': reps})

    symbol = _fluctuation_symbol(kernel, h, grid)
    f_field = density_to_field(f, grid)
    f_hat = forward_transform(f_field).coeffs
    u_values = scipy.fft.ifftn(symbol, norm='forward').real

    second = _density_moment(f_field, u_values, 2.0)
    pth = _density_moment(f_field, u_values, p)
    rhs_free = n ** (-p / 2.0) * float(np.mean(second ** (p / 2.0))) + n ** (1.0 - p) * float(np.mean(pth))

    values = []
    for replicate in range(reps):
        drawn = sample(f, n, derived_seed(seed, n, replicate))
        fluctuation = _centered_fluctuation(drawn.points, f_hat, symbol, grid)
        values.append(lp_norm(fluctuation, p) ** p)
    lhs = float(np.mean(values))

    warnings = []
    if reps < MIN_ROSENTHAL_REPS:
        warnings.append(f"reps={reps} < {MIN_ROSENTHAL_REPS}: low statistical power")
    constant = ROSENTHAL_CONSTANTS[p]
    return BoundReport.evaluate(
        'rosenthal', lhs, constant * rhs_free, 3.0 * _standard_error(values),
        ratio=lhs / rhs_free if rhs_free > 0 else None,
        criterion=f"E||mean||_p^p <= {constant:g} * moment terms",
        metadata={'d': grid.d, 'p': p, 'n': n, 'h': h, 'reps': reps, 'seed': seed,
                  'rhs_without_constant': rhs_free},
        warnings=warnings,
    )


def rosenthal_ladder_report(reports: Sequence[BoundReport]) -> BoundReport:
    """Boundedness of lhs / rhs-without-constant across an n ladder."""
    ratios = [report.ratio or 0.0 for report in reports]
    warnings = [w for report in reports for w in report.warnings]
    return BoundReport.ratio_boundedness(
        'rosenthal_ladder', ratios, RATIO_CRITERION,
        metadata={'n_ladder': [report.metadata.get('n') for report in reports],
                  'p': reports[0].metadata.get('p') if reports else None},
        warnings=sorted(set(warnings)),
    )


# ---------------------------------------------------------------------------
# Decomposition of the expected Wasserstein distance
# ---------------------------------------------------------------------------

def decomposition_report(f: DensitySpec, kernel: KernelSpec, n: int, p: float, grid: Grid,
                         reps: int, seed: int, h: Optional[float] = None,
                         method: str = 'exact') -> BoundReport:
    """
    E W_p(mu_n, mu) <= C_0 h + p f_min^(1/p-1) E||f_{n,h} - f||_{Hdot^{-1,p}}
    with h = n^(-1/d) unless given.
    """
    if not p >= 2.0:
        raise InvalidInputError("decomposition check needs p >= 2", {'p': p})
    if reps < 2:
        raise InvalidInputError("need reps >= 2", {'reps': reps})
    h = as_bandwidth(min(n ** (-1.0 / grid.d), 0.49) if h is None else h)
    f_hat = forward_transform(density_to_field(f, grid)).coeffs

    distances, norms = [], []
    for replicate in range(reps):
        drawn = sample(f, n, derived_seed(seed, n, replicate))
        distances.append(empirical_vs_density_wasserstein(drawn, f, grid, p, method).value)
        smoothed = kde_spectrum(drawn.points, kernel, h, grid)
        difference = inverse_transform(SpectralField(grid=grid, coeffs=smoothed.coeffs - f_hat))
        norms.append(_negative_sobolev(_mean_zero(difference), p))

    factor = _peyre_factor(p, f.f_min)
    lhs = float(np.mean(distances))
    rhs = kernel_C0(kernel, p) * h + factor * float(np.mean(norms))
    slack = grid.quantization_slack + 3.0 * _standard_error(distances) + 3.0 * factor * _standard_error(norms)
    return BoundReport.evaluate(
        'decomposition', lhs, rhs, slack,
        ratio=lhs / rhs,
        criterion='E W_p <= C_0 h + p f_min^(1/p-1) E||f_n,h - f||',
        metadata={'d': grid.d, 'p': p, 'n': n, 'h': h, 'reps': reps, 'seed': seed,
                  'n_per_axis': grid.n_per_axis, 'method': method},
    )


# ---------------------------------------------------------------------------
# Multiplier sums
# ---------------------------------------------------------------------------

def multiplier_sum_report(kernel: KernelSpec, hs: Sequence[float], p_star: float = 2.0,
                          truncation_factor: float = 4.0) -> BoundReport:
    """
    Scaling of S0 + S1 with h in the three regimes p* < d, p* = d, p* > d:
    log-log slope within 0.2 of p* - d, S / (-log h) bounded (max/min < 10),
    and S bounded (max/min < 3).
    """
    hs = sorted(as_bandwidth(h) for h in hs)
    if len(hs) < 2:
        raise InvalidInputError("a multiplier ladder needs at least two bandwidths")
    d = kernel.d
    sums = [v_h_sums(kernel, h, p_star, d, truncation=int(math.ceil(truncation_factor / h - 1e-9)))
            for h in hs]
    totals = [s.total for s in sums]
    warnings = sorted({w for s in sums for w in s.warnings})
    metadata = {'d': d, 'p_star': p_star, 'hs': hs, 'sums': totals,
                'tail_bounds': [s.tail_bound for s in sums]}

    if p_star < d:
        slope = float(linregress(np.log(hs), np.log(totals)).slope)
        expected = p_star - d
        metadata.update({'slope': slope, 'expected_slope': expected})
        return BoundReport.evaluate(
            'multiplier_sums', abs(slope - expected), MULTIPLIER_SLOPE_TOLERANCE,
            ratio=slope,
            criterion=f"|slope - (p* - d)| <= {MULTIPLIER_SLOPE_TOLERANCE}",
            metadata=metadata, warnings=warnings,
        )
    if p_star == d:
        ratios = [total / -math.log(h) for total, h in zip(totals, hs)]
        return BoundReport.ratio_boundedness(
            'multiplier_sums', ratios, RATIO_CRITERION, metadata=metadata, warnings=warnings
        )
    return BoundReport.ratio_boundedness(
        'multiplier_sums', totals, D1_MULTIPLIER_CRITERION, metadata=metadata, warnings=warnings
    )


# ---------------------------------------------------------------------------
# Norm relations and transport monotonicity
# ---------------------------------------------------------------------------

def norm_sandwich_report(field: GridField) -> BoundReport:
    """2 pi / sqrt(d) <= ||A u||_2 / ||u||_{Hdot^{-1,2}} <= 2 pi; lhs is the distance outside the band."""
    exact = sobolev_neg_norm_exact_p2(field)
    riesz = riesz_surrogate_norm(field, 2.0)
    if exact == 0.0:
        return BoundReport.evaluate('norm_sandwich', 0.0, 0.0, 1e-9, metadata={'d': field.grid.d})
    ratio = riesz / exact
    low, high = 2.0 * math.pi / math.sqrt(field.grid.d), 2.0 * math.pi
    outside = max(low - ratio, ratio - high, 0.0)
    return BoundReport.evaluate(
        'norm_sandwich', outside, 0.0, 1e-9,
        ratio=ratio,
        criterion='2 pi / sqrt(d) <= riesz / exact <= 2 pi',
        metadata={'d': field.grid.d, 'exact': exact, 'riesz': riesz},
    )


def beckmann_consistency_report(field: GridField) -> BoundReport:
    """At p = 2 the Beckmann flux is optimal: its norm equals the exact norm."""
    exact = sobolev_neg_norm_exact_p2(field)
    flux = beckmann_upper_bound(field, 2.0)
    return BoundReport.evaluate(
        'beckmann_p2', abs(flux - exact), 1e-10 * max(1.0, exact),
        criterion='beckmann = exact at p = 2',
        metadata={'d': field.grid.d, 'exact': exact, 'beckmann': flux},
    )


def weak_duality_report(field: GridField, p: float, n_modes: int = 4, iters: int = 200,
                        seed: int = 0) -> BoundReport:
    """Dual ascent lower bound <= Beckmann upper bound."""
    lower = dual_ascent_lower_bound(field, p, n_modes=n_modes, iters=iters, seed=seed)
    upper = beckmann_upper_bound(field, p)
    return BoundReport.evaluate(
        'weak_duality', lower, upper, 1e-8 * max(1.0, upper),
        ratio=lower / upper if upper > 0 else None,
        criterion='dual lower bound <= Beckmann upper bound',
        metadata={'d': field.grid.d, 'p': p, 'n_modes': n_modes, 'iters': iters},
    )


def wasserstein_monotonicity_check(a: DiscreteMeasure, b: DiscreteMeasure,
                                   ps: Sequence[float]) -> BoundReport:
    """W_p >= W_q for p >= q; lhs is the largest decrease along increasing p."""
    ps = sorted(float(p) for p in ps)
    if len(ps) < 2:
        raise InvalidInputError("need at least two exponents")
    distances = [exact_wasserstein(a, b, p, keep_plan=False).wasserstein for p in ps]
    decrease = max(max(lower - upper for lower, upper in zip(distances, distances[1:])), 0.0)
    return BoundReport.evaluate(
        'wasserstein_monotonicity', decrease, 0.0, 1e-9,
        criterion='W_p nondecreasing in p',
        metadata={'ps': ps, 'distances': distances},
    )


def summarize_verdicts(reports: Sequence[BoundReport]) -> Dict[str, int]:
    counts = dict.fromkeys(VERDICTS, 0)
    for report in reports:
        counts[report.verdict] += 1
    if counts['violated']:
        log_with_timestamp(f"{counts['violated']} violated checks", _LOGGER_NAME, "warning")
    return counts
