# src/core/models.py
"""
Pydantic models for settings, experiment configuration and reports.

Settings load from the environment (TORUS_OT_LAB_*), experiment and suite
configs load from TOML files, and reports serialize to JSON. Every model
rejects unknown keys so a typo in a config file fails loudly.
"""

import math
from pathlib import Path
from typing import Dict, Any, List, Optional, Literal, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator, ConfigDict
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import (
    LOG_LEVELS, ENV_PREFIX, DEFAULT_H_CONSTANT, H_RULE_CLIP, SMOOTHED_RESOLUTION_MIN,
    VERDICT_HOLDS, VERDICT_WITHIN_SLACK, VERDICT_VIOLATED, RATIO_CRITERION,
    EXACT_ATOM_CAP,
)


def _is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


class LabSettings(BaseSettings):
    """
    Process-level settings using Pydantic BaseSettings.

    Loaded from TORUS_OT_LAB_* environment variables and an optional .env file.
    """

    log_level: str = Field(default='INFO', description="Logging level")
    log_dir: str = Field(default='logs', description="Directory for log files")
    log_file: Optional[str] = Field(default=None, description="Main log file path")
    jobs: int = Field(default=1, ge=1, le=256, description="Concurrent replicate workers")
    output_dir: str = Field(default='results', description="Default output directory")
    exact_atom_cap: int = Field(default=EXACT_ATOM_CAP, ge=2, description="Exact solver atom cap")
    sinkhorn_max_iter: int = Field(default=5_000, ge=1, description="Sinkhorn iterations per stage")

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        """Validate log level is supported."""
        if v.upper() not in LOG_LEVELS:
            raise ValueError(f"Log level must be one of: {LOG_LEVELS}")
        return v.upper()

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX,
        env_file='.env',
        case_sensitive=False,
        extra='ignore',
    )


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

class ModeConfig(BaseModel):
    """One cosine mode alpha*cos(2*pi*m.x + theta)."""

    model_config = ConfigDict(extra='forbid')

    m: List[int] = Field(min_length=1, max_length=3)
    alpha: float
    theta: float = 0.0

    @field_validator('m')
    @classmethod
    def validate_nonzero(cls, v):
        if not any(v):
            raise ValueError("mode frequency must be nonzero")
        return v


class DensityConfig(BaseModel):
    """Density descriptor as written in config files."""

    model_config = ConfigDict(extra='forbid')

    kind: Literal['uniform', 'cosine_mixture'] = 'uniform'
    modes: List[ModeConfig] = Field(default_factory=list)

    @model_validator(mode='after')
    def validate_modes(self):
        if self.kind == 'uniform' and self.modes:
            raise ValueError("uniform density takes no modes")
        total = sum(abs(mode.alpha) for mode in self.modes)
        if total >= 1.0:
            raise ValueError(f"sum of |alpha| must be < 1, got {total}")
        return self


class HRule(BaseModel):
    """Bandwidth rule h = c * n^(-exponent), clipped into (0, 0.49]."""

    model_config = ConfigDict(extra='forbid')

    c: Optional[float] = Field(default=None, gt=0)
    exponent: Optional[float] = Field(default=None, ge=0)

    def bandwidth(self, n: int, d: int) -> float:
        c = self.c if self.c is not None else DEFAULT_H_CONSTANT.get(d, 0.5)
        exponent = self.exponent if self.exponent is not None else 1.0 / d
        return float(min(c * float(n) ** (-exponent), H_RULE_CLIP))


class AcceptanceBand(BaseModel):
    """Acceptance band for a fitted rate."""

    model_config = ConfigDict(extra='forbid')

    slope_min: Optional[float] = None
    slope_max: Optional[float] = None
    log_ratio_max: Optional[float] = Field(default=None, gt=1)


class ExperimentConfig(BaseModel):
    """Configuration of one rate experiment (the [experiment] table)."""

    model_config = ConfigDict(extra='forbid')

    name: str = Field(pattern=r'^[A-Za-z0-9_.-]+$')
    d: int = Field(ge=1, le=3)
    p: float = Field(default=2.0, ge=1.0)
    density: DensityConfig = Field(default_factory=DensityConfig)
    n_ladder: List[int] = Field(min_length=2)
    h_rule: HRule = Field(default_factory=HRule)
    reps: int = Field(default=20, ge=5)
    grid_n: int = Field(default=64, ge=4)
    solver: Literal['exact', 'entropic'] = 'exact'
    epsilon: float = Field(default=0.003, gt=0)
    max_iter: Optional[int] = Field(default=None, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    estimator: Literal['empirical', 'smoothed'] = 'empirical'
    exact_spot_check_max_n: Optional[int] = Field(default=None, ge=1)
    acceptance: Optional[AcceptanceBand] = None

    @field_validator('grid_n')
    @classmethod
    def validate_grid_n(cls, v):
        if not _is_power_of_two(v):
            raise ValueError(f"grid_n must be a power of two, got {v}")
        return v

    @field_validator('n_ladder')
    @classmethod
    def validate_ladder(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("sample sizes must be >= 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("n_ladder must be strictly increasing")
        return v

    @model_validator(mode='after')
    def validate_consistency(self):
        for mode in self.density.modes:
            if len(mode.m) != self.d:
                raise ValueError(f"mode {mode.m} does not have dimension {self.d}")
        if self.estimator == 'smoothed':
            resolution = self.grid_n * min(self.bandwidths())
            if resolution < SMOOTHED_RESOLUTION_MIN:
                raise ValueError(
                    f"grid_n * min(h) = {resolution:.3g} < {SMOOTHED_RESOLUTION_MIN}"
                )
        return self

    def bandwidths(self) -> List[float]:
        return [self.h_rule.bandwidth(n, self.d) for n in self.n_ladder]

    def bandwidth(self, n: int) -> float:
        return self.h_rule.bandwidth(n, self.d)


# ---------------------------------------------------------------------------
# Lemma suite configuration
# ---------------------------------------------------------------------------

class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')

    enabled: bool = True

    @model_validator(mode='after')
    def validate_grid_sizes(self):
        sizes = list(getattr(self, 'grid_by_dim', {}).values())
        if hasattr(self, 'grid_n'):
            sizes.append(self.grid_n)
        bad = [n for n in sizes if n < 4 or not _is_power_of_two(n)]
        if bad:
            raise ValueError(f"grid sizes must be powers of two >= 4, got {bad}")
        return self


class PeyreSection(_Section):
    instances: int = Field(default=100, ge=1)
    dims: List[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    grid_by_dim: Dict[int, int] = Field(default_factory=lambda: {1: 256, 2: 32})
    p: float = Field(default=2.0, ge=2.0)
    mode: Literal['exact_p2', 'consequence'] = 'exact_p2'
    max_modes: int = Field(default=3, ge=1)
    max_frequency: int = Field(default=3, ge=1)
    amplitude: float = Field(default=0.8, gt=0, lt=1)

    @model_validator(mode='after')
    def validate_grids(self):
        missing = [d for d in self.dims if d not in self.grid_by_dim]
        if missing:
            raise ValueError(f"grid_by_dim has no entry for dims {missing}")
        if self.mode == 'exact_p2' and self.p != 2.0:
            raise ValueError("mode exact_p2 requires p = 2")
        return self


class SmoothingCouplingSection(_Section):
    instances: int = Field(default=100, ge=1)
    dims: List[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    grid_n: int = Field(default=128, ge=4)
    max_n: int = Field(default=200, ge=1)
    p_values: List[float] = Field(default_factory=lambda: [1.0, 2.0], min_length=1)
    h_min_cells: float = Field(default=16.0, gt=0)
    h_max: float = Field(default=0.3, gt=0, lt=0.5)


class BiasSection(_Section):
    densities: int = Field(default=4, ge=1)
    dims: List[int] = Field(default_factory=lambda: [1, 2], min_length=1)
    h_exponents: List[int] = Field(default_factory=lambda: [2, 3, 4, 5, 6, 7], min_length=2)
    p_values: List[float] = Field(default_factory=lambda: [2.0, 4.0], min_length=1)
    grid_n: int = Field(default=64, ge=4)


class RosenthalSection(_Section):
    d: int = Field(default=1, ge=1, le=3)
    p: float = Field(default=2.0)
    n_ladder: List[int] = Field(default_factory=lambda: [16, 64, 256, 1024], min_length=2)
    reps: int = Field(default=100, ge=1)
    grid_n: int = Field(default=256, ge=4)
    h_rule: HRule = Field(default_factory=lambda: HRule(c=0.25, exponent=0.0))
    density: DensityConfig = Field(default_factory=DensityConfig)

    @field_validator('p')
    @classmethod
    def validate_even(cls, v):
        if v not in (2.0, 4.0):
            raise ValueError("Rosenthal moments use p in {2, 4}")
        return v


class MultiplierSection(_Section):
    dims: List[int] = Field(default_factory=lambda: [1, 2, 3], min_length=1)
    p_star: float = Field(default=2.0, gt=1.0)
    h_exponents: List[int] = Field(default_factory=lambda: [3, 4, 5, 6, 7], min_length=2)
    truncation_factor: float = Field(default=4.0, gt=0)


class DecompositionSection(_Section):
    d: int = Field(default=1, ge=1, le=3)
    p: float = Field(default=2.0, ge=2.0)
    n: int = Field(default=256, ge=2)
    grid_n: int = Field(default=512, ge=4)
    reps: int = Field(default=50, ge=2)
    density: DensityConfig = Field(default_factory=DensityConfig)


class NormsSection(_Section):
    field_count: int = Field(default=100, ge=1)
    dims: List[int] = Field(default_factory=lambda: [1, 2, 3], min_length=1)
    grid_by_dim: Dict[int, int] = Field(default_factory=lambda: {1: 64, 2: 32, 3: 16})
    p_values: List[float] = Field(default_factory=lambda: [2.0, 4.0], min_length=1)
    n_modes: int = Field(default=3, ge=1)
    iters: int = Field(default=60, ge=1)
    dual_fields: int = Field(default=5, ge=0)


class FluctuationRateSection(_Section):
    d: int = Field(default=1, ge=1, le=3)
    p: float = Field(default=2.0, ge=2.0)
    n_ladder: List[int] = Field(default_factory=lambda: [64, 128, 256, 512, 1024], min_length=2)
    reps: int = Field(default=20, ge=5)
    grid_n: int = Field(default=256, ge=4)
    h_rule: HRule = Field(default_factory=HRule)
    density: DensityConfig = Field(default_factory=DensityConfig)


class LemmaSuiteConfig(BaseModel):
    """Configuration of the lemma suite (the [suite] table)."""

    model_config = ConfigDict(extra='forbid')

    name: str = Field(default='lemma_suite', pattern=r'^[A-Za-z0-9_.-]+$')
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    peyre: PeyreSection = Field(default_factory=PeyreSection)
    smoothing_coupling: SmoothingCouplingSection = Field(default_factory=SmoothingCouplingSection)
    bias: BiasSection = Field(default_factory=BiasSection)
    rosenthal: RosenthalSection = Field(default_factory=RosenthalSection)
    multiplier_sums: MultiplierSection = Field(default_factory=MultiplierSection)
    decomposition: DecompositionSection = Field(default_factory=DecompositionSection)
    norms: NormsSection = Field(default_factory=NormsSection)
    fluctuation_rate: FluctuationRateSection = Field(default_factory=FluctuationRateSection)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def classify_verdict(lhs: float, rhs: float, slack_budget: float) -> str:
    """Verdict rule: violated iff lhs > rhs + slack_budget."""
    if lhs <= rhs:
        return VERDICT_HOLDS
    if lhs <= rhs + slack_budget:
        return VERDICT_WITHIN_SLACK
    return VERDICT_VIOLATED


class BoundReport(BaseModel):
    """Outcome of one executable inequality check."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    name: str
    lhs: float
    rhs: float
    ratio: Optional[float] = None
    slack_budget: float = Field(default=0.0, ge=0)
    verdict: Literal['holds', 'holds-within-slack', 'violated']
    criterion: Optional[str] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)

    @field_validator('lhs', 'rhs', 'slack_budget', 'ratio')
    @classmethod
    def validate_finite(cls, v):
        if v is not None and not math.isfinite(v):
            raise ValueError(f"report values must be finite, got {v}")
        return v

    @model_validator(mode='after')
    def validate_verdict(self):
        expected = classify_verdict(self.lhs, self.rhs, self.slack_budget)
        if self.verdict != expected:
            raise ValueError(f"verdict {self.verdict!r} inconsistent with values ({expected!r})")
        return self

    @classmethod
    def evaluate(cls, name: str, lhs: float, rhs: float, slack_budget: float = 0.0,
                 ratio: Optional[float] = None, criterion: Optional[str] = None,
                 metadata: Optional[Dict[str, Any]] = None,
                 warnings: Optional[List[str]] = None) -> 'BoundReport':
        """Build a report and derive its verdict from the numbers."""
        lhs, rhs, slack_budget = float(lhs), float(rhs), float(slack_budget)
        return cls(
            name=name,
            lhs=lhs,
            rhs=rhs,
            ratio=None if ratio is None else float(ratio),
            slack_budget=slack_budget,
            verdict=classify_verdict(lhs, rhs, slack_budget),
            criterion=criterion,
            metadata=metadata or {},
            warnings=warnings or [],
        )

    @classmethod
    def ratio_boundedness(cls, name: str, ratios: List[float],
                          criterion: float = RATIO_CRITERION,
                          metadata: Optional[Dict[str, Any]] = None,
                          warnings: Optional[List[str]] = None) -> 'BoundReport':
        """Ladder check: max/min of positive ratios must stay below the criterion."""
        positive = [r for r in ratios if r > 0]
        spread = max(positive) / min(positive) if positive else 1.0
        meta = dict(metadata or {})
        meta['ratios'] = [float(r) for r in ratios]
        return cls.evaluate(
            name, spread, criterion,
            ratio=spread,
            criterion=f"max/min < {criterion}",
            metadata=meta,
            warnings=warnings,
        )

    def rescaled(self, factor: float) -> 'BoundReport':
        """Same check with lhs multiplied by factor (verdict recomputed)."""
        return BoundReport.evaluate(
            self.name, self.lhs * factor, self.rhs, self.slack_budget,
            ratio=self.ratio, criterion=self.criterion,
            metadata=self.metadata, warnings=self.warnings,
        )

    @property
    def violated(self) -> bool:
        return self.verdict == VERDICT_VIOLATED


class RatePoint(BaseModel):
    """Aggregated replicates at one sample size."""

    model_config = ConfigDict(extra='forbid')

    n: int
    h: float
    mean: float
    standard_error: float = Field(ge=0)
    values: List[float]


class LogModelFit(BaseModel):
    """Fit of mean * sqrt(n / log n) to a constant (d = 2 rate model)."""

    model_config = ConfigDict(extra='forbid')

    constants: List[float]
    max_min_ratio: float
    residual: float


class SpotCheck(BaseModel):
    """Entropic replicate re-solved exactly."""

    model_config = ConfigDict(extra='forbid')

    n: int
    replicate: int
    entropic: float
    exact: float
    gap: float


class RateReport(BaseModel):
    """Summary of one rate experiment."""

    model_config = ConfigDict(extra='forbid')

    name: str
    d: int
    p: float
    solver: str
    estimator: str = 'empirical'
    points: List[RatePoint] = Field(min_length=2)
    slope: float
    intercept: float
    r_squared: float
    slope_ci: Tuple[float, float]
    # percentile interval as resampled; slope_ci is its hull with the slope
    bootstrap_interval: Optional[Tuple[float, float]] = None
    reference_slope: float
    log_model: Optional[LogModelFit] = None
    spot_checks: List[SpotCheck] = Field(default_factory=list)
    accepted: Optional[bool] = None
    master_seed: int = 0
    config: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode='after')
    def validate_ci(self):
        low, high = self.slope_ci
        if not low <= self.slope <= high:
            raise ValueError("slope confidence interval must contain the point estimate")
        return self


class SuiteReport(BaseModel):
    """All reports of one lemma-suite run, with verdict counts."""

    model_config = ConfigDict(extra='forbid')

    name: str
    master_seed: int
    sections: List[str]
    reports: List[BoundReport]
    rates: List[RateReport] = Field(default_factory=list)
    counts: Dict[str, int]
    config: Dict[str, Any] = Field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.counts.get(VERDICT_VIOLATED, 0) > 0

    @property
    def rates_accepted(self) -> bool:
        return all(rate.accepted is not False for rate in self.rates)


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

SUBCOMMANDS = ('rate', 'verify-lemma', 'bias', 'fluctuation', 'norms', 'plot')


class CliInvocation(BaseModel):
    """One parsed command line."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    subcommand: Literal['rate', 'verify-lemma', 'bias', 'fluctuation', 'norms', 'plot']
    config_path: Optional[Path] = None
    output: Optional[Path] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)
    deterministic_names: bool = False
    jobs: Optional[int] = Field(default=None, ge=1, le=256)
    solver: Optional[Literal['exact', 'entropic']] = None
    epsilon: Optional[float] = Field(default=None, gt=0)
    verbosity: int = Field(default=0, ge=0)
    input_path: Optional[Path] = None
    reference_slope: Optional[float] = None

    @model_validator(mode='after')
    def validate_required_paths(self):
        if self.subcommand == 'plot':
            if self.input_path is None or self.output is None:
                raise ValueError("plot needs --input and --out")
        elif self.config_path is None:
            raise ValueError(f"{self.subcommand} needs --config")
        return self
