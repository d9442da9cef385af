"""
Pipeline Tools Tests - Plotting

Tests for the log-log rate figure and its SVG rendering.
"""

import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / 'src'))

from core.exceptions import InvalidInputError
from core.models import RatePoint
from pipelines.tools.plotting import build_rate_figure, render_plot


def _display(ax, line) -> np.ndarray:
    return ax.transData.transform(np.column_stack([line.get_xdata(), line.get_ydata()]))


class TestRateFigure:
    """Test the drawn artists."""

    def test_fit_matches_reference_for_exact_law(self, rate_report_factory):
        report = rate_report_factory()
        fig, ax, artists = build_rate_figure(report)
        fig.canvas.draw()
        fit = _display(ax, artists['fit'])
        reference = _display(ax, artists['reference'])
        assert np.max(np.abs(fit - reference)) < 0.5

    def test_reference_anchored_at_first_point(self, rate_report_factory):
        report = rate_report_factory(slope=-0.3)
        _, _, artists = build_rate_figure(report, reference_slope=-1.0)
        x = artists['reference'].get_xdata()
        y = artists['reference'].get_ydata()
        assert x[0] == pytest.approx(2.0)
        assert y[0] == pytest.approx(math.log10(report.points[0].mean))
        assert (y[1] - y[0]) / (x[1] - x[0]) == pytest.approx(-1.0)

    def test_axes_labels(self, rate_report_factory):
        _, ax, _ = build_rate_figure(rate_report_factory(name='rate_d1'))
        assert ax.get_xlabel() == 'log10 n'
        assert 'rate_d1' in ax.get_title()

    def test_two_points(self, rate_report_factory):
        _, _, artists = build_rate_figure(rate_report_factory(ns=(10, 1000)))
        assert len(artists['fit'].get_xdata()) == 2

    def test_repeated_sample_size(self, rate_report_factory):
        with pytest.raises(InvalidInputError):
            build_rate_figure(rate_report_factory(ns=(100, 100)))

    def test_nonpositive_mean(self, rate_report_factory):
        report = rate_report_factory()
        points = list(report.points)
        points[1] = RatePoint(n=points[1].n, h=0.1, mean=0.0, standard_error=0.0, values=[0.0])
        with pytest.raises(InvalidInputError):
            build_rate_figure(report.model_copy(update={'points': points}))


class TestRenderPlot:
    """Test the SVG document."""

    def test_valid_svg(self, rate_report_factory):
        document = render_plot(rate_report_factory(standard_error=0.001))
        root = ET.fromstring(document.encode('utf-8'))
        assert root.tag.endswith('svg')

    def test_byte_stable(self, rate_report_factory):
        report = rate_report_factory(standard_error=0.001)
        assert render_plot(report) == render_plot(report)

    def test_reference_slope_changes_output(self, rate_report_factory):
        report = rate_report_factory()
        assert render_plot(report) != render_plot(report, reference_slope=-1.0)
