"""
Core Tests - Pydantic Models

Tests for configuration and report models including:
- Experiment config validation (ladders, grids, bandwidth rules)
- Suite section validation
- Verdict consistency of BoundReport
- RateReport and SuiteReport invariants
- CliInvocation path requirements
"""

import math

import pytest
import sys
from pathlib import Path
from pydantic import ValidationError

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / 'src'))

from core.models import (
    DensityConfig, HRule, ExperimentConfig, LemmaSuiteConfig, PeyreSection, RosenthalSection,
    BoundReport, RatePoint, RateReport, SuiteReport, CliInvocation, classify_verdict,
)


def _experiment(**overrides):
    data = {'name': 'unit', 'd': 1, 'n_ladder': [16, 32, 64], 'reps': 5, 'grid_n': 32}
    data.update(overrides)
    return ExperimentConfig(**data)


class TestExperimentConfig:
    """Test experiment configuration validation."""

    def test_defaults(self):
        experiment = _experiment()
        assert experiment.p == 2.0
        assert experiment.solver == 'exact'
        assert experiment.estimator == 'empirical'
        assert experiment.density.kind == 'uniform'

    def test_ladder_strictly_increasing(self):
        with pytest.raises(ValidationError):
            _experiment(n_ladder=[32, 16])
        with pytest.raises(ValidationError):
            _experiment(n_ladder=[16, 16])

    def test_ladder_needs_two_sizes(self):
        with pytest.raises(ValidationError):
            _experiment(n_ladder=[16])
        with pytest.raises(ValidationError):
            _experiment(n_ladder=[])

    def test_reps_minimum(self):
        with pytest.raises(ValidationError):
            _experiment(reps=4)

    def test_grid_power_of_two(self):
        with pytest.raises(ValidationError):
            _experiment(grid_n=48)

    def test_dimension_range(self):
        with pytest.raises(ValidationError):
            _experiment(d=4)

    def test_seed_range(self):
        """Seeds are unsigned 64-bit."""
        assert _experiment(master_seed=2 ** 64 - 1).master_seed == 2 ** 64 - 1
        with pytest.raises(ValidationError):
            _experiment(master_seed=-1)
        with pytest.raises(ValidationError):
            _experiment(master_seed=2 ** 64)

    def test_mode_dimension_must_match(self):
        density = {'kind': 'cosine_mixture', 'modes': [{'m': [1, 0], 'alpha': 0.3}]}
        with pytest.raises(ValidationError):
            _experiment(density=density)

    def test_smoothed_estimator_resolution(self):
        """The smoothed estimator needs grid_n * min(h) >= 8."""
        with pytest.raises(ValidationError):
            _experiment(estimator='smoothed', grid_n=32)
        experiment = _experiment(estimator='smoothed', grid_n=64, h_rule={'c': 0.2, 'exponent': 0.0})
        assert experiment.bandwidths() == [0.2, 0.2, 0.2]


class TestDensityAndBandwidth:
    """Test density descriptors and bandwidth rules."""

    def test_amplitude_sum_below_one(self):
        modes = [{'m': [1], 'alpha': 0.6}, {'m': [2], 'alpha': -0.4}]
        with pytest.raises(ValidationError):
            DensityConfig(kind='cosine_mixture', modes=modes)

    def test_uniform_takes_no_modes(self):
        with pytest.raises(ValidationError):
            DensityConfig(kind='uniform', modes=[{'m': [1], 'alpha': 0.1}])

    def test_zero_frequency_rejected(self):
        with pytest.raises(ValidationError):
            DensityConfig(kind='cosine_mixture', modes=[{'m': [0], 'alpha': 0.1}])

    def test_default_bandwidth_rule(self):
        """h = c * n^(-1/d) with per-dimension constants."""
        rule = HRule()
        assert rule.bandwidth(100, 1) == pytest.approx(0.4 / 100)
        assert rule.bandwidth(100, 2) == pytest.approx(0.5 / 10)

    def test_bandwidth_clip(self):
        """Bandwidths never exceed 0.49."""
        assert HRule(c=3.0, exponent=0.0).bandwidth(10, 1) == 0.49

    def test_experiment_bandwidths(self):
        experiment = _experiment(h_rule={'c': 1.0, 'exponent': 1.0})
        assert experiment.bandwidth(32) == pytest.approx(1 / 32)
        assert experiment.bandwidths() == pytest.approx([1 / 16, 1 / 32, 1 / 64])


class TestSuiteConfig:
    """Test lemma suite section validation."""

    def test_defaults(self):
        suite = LemmaSuiteConfig()
        assert suite.name == 'lemma_suite'
        assert suite.rosenthal.p == 2.0
        assert suite.peyre.grid_by_dim == {1: 256, 2: 32}

    def test_grid_sizes_powers_of_two(self):
        with pytest.raises(ValidationError):
            PeyreSection(grid_by_dim={1: 48, 2: 32})

    def test_peyre_grid_for_every_dim(self):
        with pytest.raises(ValidationError):
            PeyreSection(dims=[1, 2, 3])

    def test_rosenthal_even_moments(self):
        with pytest.raises(ValidationError):
            RosenthalSection(p=3.0)

    def test_unknown_section_key(self):
        with pytest.raises(ValidationError):
            LemmaSuiteConfig(peyre={'instancez': 3})


class TestBoundReport:
    """Test the verdict rule and report invariants."""

    def test_classify_verdict(self):
        assert classify_verdict(1.0, 2.0, 0.0) == 'holds'
        assert classify_verdict(2.0, 2.0, 0.0) == 'holds'
        assert classify_verdict(2.05, 2.0, 0.1) == 'holds-within-slack'
        assert classify_verdict(2.2, 2.0, 0.1) == 'violated'

    def test_evaluate(self):
        report = BoundReport.evaluate('check', 0.5, 1.0, metadata={'d': 1})
        assert report.verdict == 'holds'
        assert not report.violated
        assert report.metadata == {'d': 1}

    def test_inconsistent_verdict_rejected(self):
        with pytest.raises(ValidationError):
            BoundReport(name='check', lhs=2.0, rhs=1.0, verdict='holds')

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            BoundReport.evaluate('check', math.nan, 1.0)
        with pytest.raises(ValidationError):
            BoundReport.evaluate('check', 1.0, math.inf)

    def test_rescaled_flips_verdict(self):
        """Multiplying lhs by 10 turns a holding check into a violation."""
        report = BoundReport.evaluate('check', 0.3, 1.0, slack_budget=0.01)
        scaled = report.rescaled(10.0)
        assert scaled.lhs == pytest.approx(3.0)
        assert scaled.violated
        assert not report.violated

    def test_ratio_boundedness(self):
        holds = BoundReport.ratio_boundedness('ratios', [1.0, 2.0, 4.0])
        assert holds.lhs == pytest.approx(4.0)
        assert holds.verdict == 'holds'
        assert holds.metadata['ratios'] == [1.0, 2.0, 4.0]
        assert BoundReport.ratio_boundedness('ratios', [0.1, 5.0]).violated

    def test_frozen(self):
        report = BoundReport.evaluate('check', 0.5, 1.0)
        with pytest.raises(ValidationError):
            report.lhs = 3.0


class TestRateAndSuiteReports:
    """Test rate and suite report invariants."""

    def _points(self):
        return [
            RatePoint(n=10, h=0.1, mean=0.3, standard_error=0.01, values=[0.3] * 5),
            RatePoint(n=100, h=0.01, mean=0.1, standard_error=0.01, values=[0.1] * 5),
        ]

    def test_ci_must_contain_slope(self):
        with pytest.raises(ValidationError):
            RateReport(name='r', d=1, p=2.0, solver='exact', points=self._points(), slope=-0.5,
                       intercept=0.0, r_squared=1.0, slope_ci=(-0.4, -0.3), reference_slope=-0.5)

    def test_raw_interval_may_exclude_slope(self):
        report = RateReport(name='r', d=1, p=2.0, solver='exact', points=self._points(), slope=-0.5,
                            intercept=0.0, r_squared=1.0, slope_ci=(-0.5, -0.3),
                            bootstrap_interval=(-0.4, -0.3), reference_slope=-0.5)
        assert report.bootstrap_interval == (-0.4, -0.3)

    def test_needs_two_points(self):
        with pytest.raises(ValidationError):
            RateReport(name='r', d=1, p=2.0, solver='exact', points=self._points()[:1], slope=-0.5,
                       intercept=0.0, r_squared=1.0, slope_ci=(-0.6, -0.4), reference_slope=-0.5)

    def test_suite_report_flags(self, rate_report_factory):
        holds = BoundReport.evaluate('a', 0.5, 1.0)
        violated = BoundReport.evaluate('b', 2.0, 1.0)
        report = SuiteReport(name='s', master_seed=0, sections=['norms'], reports=[holds, violated],
                             counts={'holds': 1, 'violated': 1})
        assert report.violated
        assert report.rates_accepted

        rate = rate_report_factory().model_copy(update={'accepted': False})
        clean = SuiteReport(name='s', master_seed=0, sections=['norms'], reports=[holds],
                            rates=[rate], counts={'holds': 1})
        assert not clean.violated
        assert not clean.rates_accepted


class TestCliInvocation:
    """Test command-line invocation validation."""

    def test_config_required(self):
        with pytest.raises(ValidationError):
            CliInvocation(subcommand='rate')
        invocation = CliInvocation(subcommand='rate', config_path=Path('configs/d1.toml'))
        assert invocation.jobs is None
        assert not invocation.deterministic_names

    def test_plot_paths_required(self):
        with pytest.raises(ValidationError):
            CliInvocation(subcommand='plot', input_path=Path('r.json'))
        invocation = CliInvocation(subcommand='plot', input_path=Path('r.json'), output=Path('r.svg'))
        assert invocation.config_path is None

    def test_seed_and_jobs_ranges(self):
        with pytest.raises(ValidationError):
            CliInvocation(subcommand='rate', config_path=Path('c.toml'), seed=-1)
        with pytest.raises(ValidationError):
            CliInvocation(subcommand='rate', config_path=Path('c.toml'), jobs=0)

    def test_unknown_subcommand(self):
        with pytest.raises(ValidationError):
            CliInvocation(subcommand='fit', config_path=Path('c.toml'))
