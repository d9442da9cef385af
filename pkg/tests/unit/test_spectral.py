"""
Lab Tests - Spectral Machinery

Tests for transforms, Fourier multipliers, L^p norms, negative Sobolev
norms and their proxies, and empirical spectra.
"""

import math

import numpy as np
import pytest
import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / 'src'))

from core.exceptions import InvalidInputError
from lab.spectral import (
    SpectralField, symbol_a, identity_symbol, forward_transform, inverse_transform,
    apply_multiplier, lp_norm, sobolev_neg_norm_exact_p2, riesz_surrogate_norm,
    beckmann_upper_bound, dual_ascent_lower_bound, empirical_spectrum, hermitian_asymmetry,
)
from lab.torus import Grid, GridField

COS_NORM = 1.0 / (2.0 * math.pi * math.sqrt(2.0))


def _cos_field(n: int = 16, k: int = 1, amplitude: float = 1.0) -> GridField:
    grid = Grid(d=1, n_per_axis=n)
    x = grid.nodes()[:, 0]
    return GridField(grid=grid, values=amplitude * np.cos(2 * np.pi * k * x))


def _random_mean_zero(d: int, n: int, seed: int) -> GridField:
    grid = Grid(d=d, n_per_axis=n)
    values = np.random.default_rng(seed).standard_normal(grid.size)
    return GridField(grid=grid, values=values - values.mean())


class TestTransforms:
    """Test forward and inverse transforms."""

    def test_constant_field(self):
        grid = Grid(d=2, n_per_axis=8)
        spectrum = forward_transform(GridField(grid=grid, values=np.ones(grid.size)))
        assert spectrum.coeff((0, 0)) == pytest.approx(1.0)
        assert np.abs(spectrum.coeffs).sum() == pytest.approx(1.0)

    def test_cosine_mode(self):
        spectrum = forward_transform(_cos_field(8))
        assert spectrum.coeff((1,)) == pytest.approx(0.5, abs=1e-15)
        assert spectrum.coeff((-1,)) == pytest.approx(0.5, abs=1e-15)
        assert spectrum.coeff((2,)) == pytest.approx(0.0, abs=1e-15)

    def test_matches_direct_sum(self):
        grid = Grid(d=1, n_per_axis=8)
        values = np.random.default_rng(1).standard_normal(8)
        spectrum = forward_transform(GridField(grid=grid, values=values))
        x = np.arange(8) / 8
        for m in range(-3, 4):
            direct = np.mean(values * np.exp(-2j * np.pi * m * x))
            assert spectrum.coeff((m,)) == pytest.approx(direct, abs=1e-14)

    @pytest.mark.parametrize("d,n", [(1, 8), (1, 16), (2, 8), (2, 16), (3, 8)])
    def test_round_trip(self, d, n):
        grid = Grid(d=d, n_per_axis=n)
        values = np.random.default_rng(d * n).standard_normal(grid.size)
        back = inverse_transform(forward_transform(GridField(grid=grid, values=values)))
        assert np.allclose(back.values, values, atol=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_parseval(self, d):
        grid = Grid(d=d, n_per_axis=8)
        values = np.random.default_rng(d).standard_normal(grid.size)
        spectrum = forward_transform(GridField(grid=grid, values=values))
        assert np.sum(np.abs(spectrum.coeffs) ** 2) == pytest.approx(np.mean(values ** 2), rel=1e-10)

    def test_non_hermitian_rejected(self):
        grid = Grid(d=1, n_per_axis=8)
        coeffs = np.zeros(8, dtype=complex)
        coeffs[1] = 1.0
        spectrum = SpectralField(grid=grid, coeffs=coeffs)
        assert hermitian_asymmetry(spectrum) == pytest.approx(1.0)
        with pytest.raises(InvalidInputError):
            inverse_transform(spectrum)

    def test_zero_coefficients(self):
        grid = Grid(d=2, n_per_axis=4)
        field = inverse_transform(SpectralField(grid=grid, coeffs=np.zeros((4, 4))))
        assert np.all(field.values == 0.0)

    def test_coeff_dimension_mismatch(self):
        spectrum = forward_transform(_cos_field(8))
        with pytest.raises(InvalidInputError):
            spectrum.coeff((1, 0))


class TestMultipliers:
    """Test Fourier multiplier symbols."""

    def test_symbol_a_values(self):
        a = symbol_a()
        assert a((0,)) == 0.0
        assert a((3,)) == pytest.approx(1 / 3)
        assert a((1, -1)) == pytest.approx(0.5)
        assert a((1, 2, -3)) == pytest.approx(1 / 6)

    def test_compose(self):
        square = symbol_a().compose(symbol_a())
        assert square((2, 2)) == pytest.approx(1 / 16)
        assert symbol_a().compose(identity_symbol())((4,)) == pytest.approx(0.25)

    def test_apply_to_single_mode(self):
        """A cos(2 pi k x) = cos(2 pi k x) / k."""
        field = _cos_field(16, k=2)
        result = inverse_transform(apply_multiplier(forward_transform(field), symbol_a()))
        assert np.allclose(result.values, field.values / 2, atol=1e-14)

    def test_halves_coefficient_at_two(self):
        spectrum = forward_transform(_cos_field(8, k=2))
        result = apply_multiplier(spectrum, symbol_a())
        assert isinstance(result, SpectralField)
        assert abs(result.coeff((2,)) - 0.25) < 1e-15
        assert abs(result.coeff((-2,)) - 0.25) < 1e-15

    def test_identity_keeps_every_mode(self):
        """The identity symbol returns a random field unchanged, Nyquist mode included."""
        grid = Grid(d=1, n_per_axis=8)
        values = np.random.default_rng(4).standard_normal(grid.size)
        spectrum = forward_transform(GridField(grid=grid, values=values))
        assert abs(spectrum.coeff((-4,))) > 1e-6
        result = apply_multiplier(spectrum, identity_symbol())
        assert np.array_equal(result.coeffs, spectrum.coeffs)
        assert np.allclose(inverse_transform(result).values, values, atol=1e-14)

    def test_identity_random_field_2d(self):
        grid = Grid(d=2, n_per_axis=8)
        values = np.random.default_rng(5).standard_normal(grid.size)
        spectrum = forward_transform(GridField(grid=grid, values=values))
        restored = inverse_transform(apply_multiplier(spectrum, identity_symbol()))
        assert np.allclose(restored.values, values, atol=1e-13)

    def test_composition_is_product(self):
        spectrum = forward_transform(_random_mean_zero(2, 8, 3))
        a = symbol_a()
        twice = apply_multiplier(apply_multiplier(spectrum, a), a)
        once = apply_multiplier(spectrum, a.compose(a))
        assert np.allclose(twice.coeffs, once.coeffs, atol=1e-15)

    def test_linearity(self):
        u = _random_mean_zero(2, 8, 1)
        v = _random_mean_zero(2, 8, 2)
        combined = GridField(grid=u.grid, values=2.0 * u.values - 3.0 * v.values)
        a = symbol_a()

        def applied(field):
            return inverse_transform(apply_multiplier(forward_transform(field), a)).values

        assert np.allclose(applied(combined), 2.0 * applied(u) - 3.0 * applied(v), atol=1e-12)

    def test_riesz_surrogate_ignores_nyquist_mode(self):
        """The alternating field lives only on m = -N/2, which the norm computations remove."""
        grid = Grid(d=1, n_per_axis=8)
        alternating = GridField(grid=grid, values=(-1.0) ** np.arange(8))
        assert riesz_surrogate_norm(alternating, 2.0) == pytest.approx(0.0, abs=1e-15)


class TestNorms:
    """Test L^p norms and negative Sobolev norms."""

    def test_lp_constant(self):
        grid = Grid(d=2, n_per_axis=4)
        field = GridField(grid=grid, values=np.full(16, -2.5))
        for p in (1.0, 2.0, 7.0):
            assert lp_norm(field, p) == pytest.approx(2.5)

    def test_lp_cosine(self):
        assert lp_norm(_cos_field(16), 2.0) == pytest.approx(1 / math.sqrt(2))
        assert lp_norm(_cos_field(16), 4.0) == pytest.approx((3 / 8) ** 0.25)

    def test_lp_monotone_in_p(self):
        field = _random_mean_zero(2, 8, 3)
        norms = [lp_norm(field, p) for p in (1.0, 1.5, 2.0, 4.0, 8.0)]
        assert all(a <= b + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_lp_rejects_small_p(self):
        with pytest.raises(InvalidInputError):
            lp_norm(_cos_field(8), 0.5)

    def test_exact_norm_of_cosine(self):
        assert sobolev_neg_norm_exact_p2(_cos_field(16)) == pytest.approx(COS_NORM, rel=1e-12)

    def test_exact_norm_zero_and_homogeneous(self):
        grid = Grid(d=2, n_per_axis=8)
        assert sobolev_neg_norm_exact_p2(GridField(grid=grid, values=np.zeros(64))) == 0.0
        field = _random_mean_zero(2, 8, 4)
        scaled = sobolev_neg_norm_exact_p2(field.scaled(-3.0))
        assert scaled == pytest.approx(3.0 * sobolev_neg_norm_exact_p2(field), rel=1e-12)

    def test_exact_norm_requires_mean_zero(self):
        grid = Grid(d=1, n_per_axis=8)
        with pytest.raises(InvalidInputError):
            sobolev_neg_norm_exact_p2(GridField(grid=grid, values=np.ones(8)))
        with pytest.raises(InvalidInputError):
            riesz_surrogate_norm(GridField(grid=grid, values=np.ones(8)), 2.0)

    def test_riesz_norm_of_cosine(self):
        assert riesz_surrogate_norm(_cos_field(16), 2.0) == pytest.approx(1 / math.sqrt(2))

    @pytest.mark.parametrize("d,n", [(1, 32), (2, 16), (3, 8)])
    def test_norm_sandwich(self, d, n):
        """exact <= sqrt(d)/(2 pi) * riesz and riesz <= 2 pi * exact at p = 2."""
        for seed in range(5):
            field = _random_mean_zero(d, n, seed)
            exact = sobolev_neg_norm_exact_p2(field)
            riesz = riesz_surrogate_norm(field, 2.0)
            assert exact <= math.sqrt(d) / (2 * math.pi) * riesz * (1 + 1e-12)
            assert riesz <= 2 * math.pi * exact * (1 + 1e-12)

    @pytest.mark.parametrize("d,n", [(1, 32), (2, 16), (3, 8)])
    def test_beckmann_equals_exact_at_p2(self, d, n):
        field = _random_mean_zero(d, n, 11)
        assert beckmann_upper_bound(field, 2.0) == pytest.approx(sobolev_neg_norm_exact_p2(field), rel=1e-10)


class TestDualAscent:
    """Test the dual lower bound."""

    def test_zero_field(self):
        grid = Grid(d=1, n_per_axis=16)
        assert dual_ascent_lower_bound(GridField(grid=grid, values=np.zeros(16)), 2.0) == 0.0

    def test_cosine_matches_exact(self):
        value = dual_ascent_lower_bound(_cos_field(16), 2.0, iters=20)
        assert value == pytest.approx(COS_NORM, rel=1e-2)
        assert value <= COS_NORM * (1 + 1e-9)

    @pytest.mark.parametrize("p", [2.0, 4.0])
    def test_below_beckmann(self, p):
        field = _random_mean_zero(1, 32, 6)
        lower = dual_ascent_lower_bound(field, p, n_modes=4, iters=30, seed=1)
        assert 0.0 < lower <= beckmann_upper_bound(field, p) * (1 + 1e-9)

    def test_deterministic(self):
        field = _random_mean_zero(2, 8, 7)
        first = dual_ascent_lower_bound(field, 4.0, n_modes=2, iters=10, seed=3)
        assert dual_ascent_lower_bound(field, 4.0, n_modes=2, iters=10, seed=3) == first

    def test_rejects_small_p(self):
        with pytest.raises(InvalidInputError):
            dual_ascent_lower_bound(_cos_field(16), 1.5)


class TestEmpiricalSpectrum:
    """Test spectra of empirical measures."""

    def test_single_point_at_origin(self):
        grid = Grid(d=2, n_per_axis=8)
        spectrum = empirical_spectrum(np.zeros((1, 2)), grid)
        assert np.allclose(spectrum.coeffs, 1.0)

    def test_two_points(self):
        grid = Grid(d=1, n_per_axis=8)
        spectrum = empirical_spectrum(np.array([[0.0], [0.5]]), grid)
        for m in range(-4, 4):
            assert spectrum.coeff((m,)) == pytest.approx((1 + (-1) ** m) / 2, abs=1e-14)

    def test_zero_frequency_is_one(self):
        grid = Grid(d=3, n_per_axis=4)
        points = np.random.default_rng(0).uniform(size=(50, 3))
        assert empirical_spectrum(points, grid).coeff((0, 0, 0)) == pytest.approx(1.0, abs=1e-15)

    def test_empty_and_mismatched(self):
        grid = Grid(d=1, n_per_axis=8)
        with pytest.raises(InvalidInputError):
            empirical_spectrum(np.empty((0, 1)), grid)
        with pytest.raises(InvalidInputError):
            empirical_spectrum(np.zeros((3, 2)), grid)
