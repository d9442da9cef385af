"""
Lab Tests - Bump Kernel and Smoothing

Tests for the bump kernel, its Fourier transform, kernel density
estimates on the grid and the multiplier sums.
"""

import math

import numpy as np
import pytest
import sys
from pathlib import Path
from scipy.integrate import quad

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / 'src'))

from core.exceptions import InvalidInputError, ResolutionError, UnsupportedDensityError
from lab.densities import DensitySpec, EmpiricalMeasure, cosine_mixture_density, uniform_density
from lab.kernels import (
    Bandwidth, as_bandwidth, bump_kernel, bump_profile, kernel_C0, kappa, kappa_decay_slope,
    kappa_decay_constant, smoothed_density_field, kde_spectrum, kde_field, v_h_sums,
)
from lab.spectral import forward_transform
from lab.torus import Grid


def _bump_integral(weight=lambda x: 1.0) -> float:
    value, _ = quad(lambda x: weight(x) * math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0,
                    epsabs=1e-15, epsrel=1e-13, limit=200)
    return value


class TestBumpKernel:
    """Test the kernel and its normalization."""

    def test_profile(self):
        assert bump_profile(0.0) == pytest.approx(math.exp(-1.0))
        assert bump_profile(1.0) == 0.0
        assert bump_profile(1.5) == 0.0
        assert bump_profile(0.999) < 1e-100

    def test_normalization_d1(self):
        kernel = bump_kernel(1)
        assert kernel.c_norm == pytest.approx(1.0 / _bump_integral(), rel=1e-10)

    def test_peak_value(self):
        kernel = bump_kernel(2)
        assert kernel.evaluate(np.zeros(2)) == pytest.approx(kernel.c_norm * math.exp(-1.0))
        assert kernel.evaluate(np.array([0.6, 0.8])) == 0.0

    def test_unsupported_dimension(self):
        with pytest.raises(InvalidInputError):
            bump_kernel(4)

    def test_cached(self):
        assert bump_kernel(1) is bump_kernel(1)

    def test_bandwidth_domain(self):
        assert as_bandwidth(0.25) == 0.25
        assert as_bandwidth(Bandwidth(h=0.1)) == 0.1
        for h in (0.0, 0.5, -0.1):
            with pytest.raises(InvalidInputError):
                as_bandwidth(h)


class TestKappa:
    """Test the Fourier transform of the kernel."""

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_kappa_at_zero(self, d):
        assert kappa(bump_kernel(d), np.zeros(d)) == pytest.approx(1.0, abs=1e-8)

    def test_kappa_matches_quadrature_d1(self):
        kernel = bump_kernel(1)
        for xi in (0.5, 1.2345, 3.7):
            direct = kernel.c_norm * _bump_integral(lambda x: math.cos(2 * math.pi * xi * x))
            assert kappa(kernel, [xi]) == pytest.approx(direct, abs=1e-8)

    def test_kappa_radial_symmetry(self):
        assert kappa(bump_kernel(1), [0.7]) == kappa(bump_kernel(1), [-0.7])
        kernel = bump_kernel(2)
        assert kappa(kernel, [3.0, 4.0]) == kappa(kernel, [5.0, 0.0])
        values = kappa(kernel, np.array([[0.0, 0.0], [0.0, 1.0]]))
        assert values.shape == (2,)

    def test_kappa_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            kappa(bump_kernel(2), [1.0])

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_kappa_decay(self, d):
        """The envelope decays faster than |xi|^-4 on [10, 50]."""
        kernel = bump_kernel(d)
        assert kappa_decay_slope(kernel) <= -4.0
        for gamma_ in (1.0, 2.0, 4.0):
            constant = kappa_decay_constant(kernel, gamma_)
            assert 0.0 < constant < math.inf

    def test_c0_moments(self):
        kernel = bump_kernel(1)
        expected = math.sqrt(kernel.c_norm * _bump_integral(lambda x: x * x))
        assert kernel_C0(kernel, 2.0) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_c0_increasing_and_below_one(self, d):
        kernel = bump_kernel(d)
        values = [kernel_C0(kernel, p) for p in (1.0, 2.0, 4.0)]
        assert all(0.0 < value < 1.0 for value in values)
        assert values[0] <= values[1] <= values[2]


class TestSmoothing:
    """Test smoothing of densities and samples on the grid."""

    def test_smoothed_uniform(self):
        grid = Grid(d=2, n_per_axis=8)
        field = smoothed_density_field(uniform_density(2), bump_kernel(2), 0.2, grid)
        assert np.allclose(field.values, 1.0)

    def test_smoothed_mode_damped(self):
        kernel = bump_kernel(1)
        density = cosine_mixture_density(1, [((1,), 0.5, 0.0)])
        field = smoothed_density_field(density, kernel, 0.3, Grid(d=1, n_per_axis=32))
        coefficient = forward_transform(field).coeff((1,))
        assert coefficient == pytest.approx(0.25 * kappa(kernel, [0.3]), abs=1e-14)

    def test_smoothing_needs_coefficients(self):
        density = DensitySpec.from_callable(1, lambda x: np.ones(len(x)), 1.0, 1.0)
        with pytest.raises(UnsupportedDensityError):
            smoothed_density_field(density, bump_kernel(1), 0.1, Grid(d=1, n_per_axis=16))

    def test_kde_mass(self):
        """A resolved estimate integrates to 1 on the grid."""
        drawn = EmpiricalMeasure(points=[[0.0]])
        field = kde_field(drawn, bump_kernel(1), 0.1, Grid(d=1, n_per_axis=256))
        assert field.mean() == pytest.approx(1.0, abs=1e-6)
        assert field.values.min() >= 0.0

    def test_direct_matches_spectral(self):
        rng = np.random.default_rng(3)
        drawn = EmpiricalMeasure(points=rng.uniform(size=(50, 1)))
        grid = Grid(d=1, n_per_axis=256)
        kernel = bump_kernel(1)
        direct = kde_field(drawn, kernel, 0.1, grid, 'direct')
        spectral = kde_field(drawn, kernel, 0.1, grid, 'spectral')
        assert np.max(np.abs(direct.values - spectral.values)) < 1e-3

    def test_kde_spectrum_zero_frequency(self):
        points = np.random.default_rng(4).uniform(size=(20, 2))
        spectrum = kde_spectrum(points, bump_kernel(2), 0.2, Grid(d=2, n_per_axis=16))
        assert spectrum.coeff((0, 0)) == pytest.approx(1.0, abs=1e-8)

    def test_spectral_resolution(self):
        drawn = EmpiricalMeasure(points=[[0.5]])
        with pytest.raises(ResolutionError):
            kde_field(drawn, bump_kernel(1), 0.1, Grid(d=1, n_per_axis=16), 'spectral')

    def test_unknown_method(self):
        drawn = EmpiricalMeasure(points=[[0.5]])
        with pytest.raises(InvalidInputError):
            kde_field(drawn, bump_kernel(1), 0.1, Grid(d=1, n_per_axis=16), 'fast')

    def test_dimension_mismatch(self):
        drawn = EmpiricalMeasure(points=[[0.5, 0.5]])
        with pytest.raises(InvalidInputError):
            kde_field(drawn, bump_kernel(1), 0.1, Grid(d=1, n_per_axis=16))


class TestMultiplierSums:
    """Test the partial sums of |a(m) kappa(h m)|^p*."""

    def test_matches_brute_force_d2(self):
        kernel = bump_kernel(2)
        h = 0.25
        sums = v_h_sums(kernel, h, 2.0)
        assert sums.truncation == 16
        s0 = s1 = 0.0
        for i in range(-16, 17):
            for j in range(-16, 17):
                l1 = abs(i) + abs(j)
                if l1 == 0 or l1 > 16:
                    continue
                term = (kappa(kernel, [h * i, h * j]) / l1) ** 2
                if l1 <= 4:
                    s0 += term
                else:
                    s1 += term
        assert sums.s0 == pytest.approx(s0, rel=1e-12)
        assert sums.s1 == pytest.approx(s1, rel=1e-12)
        assert sums.total == pytest.approx(s0 + s1, rel=1e-12)
        assert sums.tail_bound >= 0.0

    def test_d1_bounded(self):
        kernel = bump_kernel(1)
        totals = [v_h_sums(kernel, 2.0 ** -k, 2.0).total for k in range(3, 8)]
        assert max(totals) / min(totals) < 3.0
        assert max(totals) < 2 * math.pi ** 2 / 6 + 1e-9

    def test_short_truncation_warns(self):
        sums = v_h_sums(bump_kernel(1), 0.1, 2.0, truncation=10)
        assert sums.truncation == 10
        assert len(sums.warnings) == 1

    def test_invalid_arguments(self):
        with pytest.raises(InvalidInputError):
            v_h_sums(bump_kernel(1), 0.1, 1.0)
        with pytest.raises(InvalidInputError):
            v_h_sums(bump_kernel(1), 0.1, 2.0, d=2)
