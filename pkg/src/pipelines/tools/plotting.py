# src/pipelines/tools/plotting.py
"""
Static log-log plots of rate reports.

Axes carry log10 values directly: points with +-1 standard error bars,
the fitted line and a dashed reference line of a given slope anchored at
the first point. The SVG output is byte-stable for a given report.
"""

import io
import math
from typing import Dict, Optional, Tuple

import matplotlib
from matplotlib.axes import Axes
from matplotlib.figure import Figure
import numpy as np

from core.constants import LAB_NAME
from core.exceptions import InvalidInputError
from core.models import RateReport

matplotlib.use('Agg')

_LN10 = math.log(10.0)
_SVG_RC = {
    'svg.hashsalt': LAB_NAME,
    'svg.fonttype': 'none',
}


def _check_report(report: RateReport) -> None:
    ns = [point.n for point in report.points]
    if len(set(ns)) < 2:
        raise InvalidInputError("plot needs at least two distinct sample sizes", {'n': ns})
    if any(point.mean <= 0 or point.n <= 0 for point in report.points):
        raise InvalidInputError("plot needs positive sample sizes and means")


def build_rate_figure(report: RateReport, reference_slope: Optional[float] = None
                      ) -> Tuple[Figure, Axes, Dict[str, object]]:
    """
    Figure, axes and the drawn artists ('points', 'fit', 'reference').

    Raises:
        InvalidInputError: fewer than two distinct n or a nonpositive mean
    """
    _check_report(report)
    slope = report.reference_slope if reference_slope is None else float(reference_slope)

    x = np.log10([point.n for point in report.points])
    means = np.array([point.mean for point in report.points])
    errors = np.array([point.standard_error for point in report.points])
    y = np.log10(means)
    lower = y - np.log10(np.maximum(means - errors, means * 1e-3))
    upper = np.log10(means + errors) - y

    span = np.array([x.min(), x.max()])
    fit_y = report.slope * span + report.intercept / _LN10
    reference_y = y[0] + slope * (span - x[0])

    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot(1, 1, 1)
    points = ax.errorbar(x, y, yerr=[lower, upper], fmt='o', color='C0', capsize=3,
                         label=f"mean W_{report.p:g} (+-1 SE)")
    (fit,) = ax.plot(span, fit_y, '-', color='C1', label=f"fit slope {report.slope:.3f}")
    (reference,) = ax.plot(span, reference_y, '--', color='0.4', label=f"reference slope {slope:.3f}")

    all_y = np.concatenate([y - lower, y + upper, fit_y, reference_y])
    pad_x = 0.05 * (span[1] - span[0])
    pad_y = 0.05 * max(all_y.max() - all_y.min(), 1e-6)
    ax.set_xlim(span[0] - pad_x, span[1] + pad_x)
    ax.set_ylim(all_y.min() - pad_y, all_y.max() + pad_y)
    ax.set_xlabel('log10 n')
    ax.set_ylabel('log10 mean')
    ax.set_title(f"{report.name} (d={report.d}, p={report.p:g}, {report.solver})")
    ax.legend(loc='best')
    ax.grid(True, linewidth=0.3)

    return fig, ax, {'points': points, 'fit': fit, 'reference': reference}


def render_plot(report: RateReport, reference_slope: Optional[float] = None) -> str:
    """Deterministic SVG document for a rate report."""
    with matplotlib.rc_context(_SVG_RC):
        fig, _, _ = build_rate_figure(report, reference_slope)
        buffer = io.StringIO()
        fig.savefig(buffer, format='svg', metadata={'Date': None})
    return buffer.getvalue()
