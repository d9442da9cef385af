"""
Integration tests for the command line.

Each test calls main() with an argv list and checks the exit code and
the files written to a temporary output directory.
"""

import xml.etree.ElementTree as ET

import pytest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / 'src'))

from core.models import BoundReport, RateReport, SuiteReport
from main import main
from pipelines.tools.writers import read_json_model

NORMS_SUITE = """
[suite]
name = "tiny"
master_seed = 5

[suite.norms]
field_count = 2
dims = [1]
grid_by_dim = { 1 = 16 }
p_values = [2.0]
dual_fields = 0
"""


def _smoke(configs_dir, out, *extra) -> int:
    return main(['rate', '--config', str(configs_dir / 'smoke.toml'), '--out', str(out),
                 '--deterministic-names', *extra])


class TestUsageErrors:
    """Test exit code 2."""

    def test_missing_config(self, tmp_path, capsys):
        assert main(['rate', '--config', str(tmp_path / 'absent.toml'), '--out', str(tmp_path)]) == 2
        assert 'not found' in capsys.readouterr().err

    def test_negative_seed(self, configs_dir, tmp_path):
        assert _smoke(configs_dir, tmp_path, '--seed', '-1') == 2
        assert list(tmp_path.iterdir()) == []

    def test_unknown_subcommand(self):
        assert main(['transport']) == 2

    def test_missing_required_flag(self):
        assert main(['rate']) == 2

    def test_invalid_config_values(self, tmp_path, write_toml):
        path = write_toml('[experiment]\nname = "bad"\nd = 1\nn_ladder = [10, 5]\n')
        assert main(['rate', '--config', str(path), '--out', str(tmp_path)]) == 2

    def test_version(self, capsys):
        assert main(['--version']) == 0
        assert 'torus-ot-lab' in capsys.readouterr().out


class TestRateCommand:
    """Test the rate subcommand."""

    def test_smoke_run(self, configs_dir, tmp_path):
        assert _smoke(configs_dir, tmp_path) == 0
        assert sorted(path.name for path in tmp_path.iterdir()) == ['smoke.csv', 'smoke.json']
        report = read_json_model(tmp_path / 'smoke.json', RateReport)
        assert report.accepted is True
        assert report.master_seed == 7
        assert [point.n for point in report.points] == [16, 32, 64, 128]

    def test_rerun_is_byte_identical(self, configs_dir, tmp_path):
        first, second = tmp_path / 'first', tmp_path / 'second'
        assert _smoke(configs_dir, first, '--jobs', '1') == 0
        assert _smoke(configs_dir, second, '--jobs', '3') == 0
        for name in ('smoke.csv', 'smoke.json'):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_seed_override(self, configs_dir, tmp_path):
        assert _smoke(configs_dir, tmp_path, '--seed', '99') == 0
        assert read_json_model(tmp_path / 'smoke.json', RateReport).master_seed == 99

    def test_timestamped_names(self, configs_dir, tmp_path):
        assert main(['rate', '--config', str(configs_dir / 'smoke.toml'), '--out', str(tmp_path)]) == 0
        names = sorted(path.name for path in tmp_path.iterdir())
        assert len(names) == 2
        assert names[0].startswith('smoke.') and names[0].endswith('Z.csv')
        assert names[0][:-len('csv')] == names[1][:-len('json')]

    def test_missed_band(self, tmp_path, write_toml):
        path = write_toml(
            '[experiment]\nname = "strict"\nd = 1\nn_ladder = [16, 32, 64]\nreps = 5\n'
            'grid_n = 32\n\n[experiment.acceptance]\nslope_min = 0.5\n'
        )
        out = tmp_path / 'out'
        assert main(['rate', '--config', str(path), '--out', str(out), '--deterministic-names']) == 1
        assert read_json_model(out / 'strict.json', RateReport).accepted is False


class TestSuiteCommands:
    """Test the lemma suite subcommands."""

    def test_norms_suite(self, tmp_path, write_toml):
        path = write_toml(NORMS_SUITE)
        out = tmp_path / 'out'
        assert main(['norms', '--config', str(path), '--out', str(out), '--deterministic-names']) == 0
        report = read_json_model(out / 'tiny.norms.json', SuiteReport)
        assert report.sections == ['norms']
        assert report.counts.get('violated', 0) == 0
        assert len(report.reports) == 4

    def test_injected_violation(self, tmp_path, write_toml, monkeypatch):
        def broken_sandwich(field):
            return BoundReport.evaluate('norm_sandwich', 2.0, 1.0)

        monkeypatch.setattr('pipelines.tools.suites.norm_sandwich_report', broken_sandwich)
        path = write_toml(NORMS_SUITE)
        out = tmp_path / 'out'
        assert main(['norms', '--config', str(path), '--out', str(out), '--deterministic-names']) == 1
        report = read_json_model(out / 'tiny.norms.json', SuiteReport)
        assert report.counts['violated'] == 2


class TestPlotCommand:
    """Test the plot subcommand."""

    def test_plot_from_rate_report(self, configs_dir, tmp_path):
        assert _smoke(configs_dir, tmp_path) == 0
        target = tmp_path / 'figure.svg'
        assert main(['plot', '--input', str(tmp_path / 'smoke.json'), '--out', str(target)]) == 0
        root = ET.fromstring(target.read_bytes())
        assert root.tag.endswith('svg')

    def test_plot_needs_input(self, tmp_path):
        assert main(['plot', '--out', str(tmp_path)]) == 2

    def test_plot_missing_report(self, tmp_path):
        assert main(['plot', '--input', str(tmp_path / 'absent.json'), '--out', str(tmp_path)]) == 1
