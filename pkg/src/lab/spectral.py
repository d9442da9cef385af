# src/lab/spectral.py
"""
Discrete Fourier machinery on the torus grid.

Coefficients follow the convention c(m) = N^-d * sum_x u(x) exp(-2 pi i m.x)
and are stored in FFT layout: the array index k holds the frequency with
m_i = k_i for k_i < N/2 and m_i = k_i - N otherwise. Negative Sobolev norms
and their proxies drop the Nyquist modes (any m_i = -N/2) first, because
those modes have no symmetric partner on the grid.
"""

from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.constants import ERROR_MESSAGES, TOLERANCES
from core.exceptions import InvalidInputError
from core.logging import log_with_timestamp

from lab.rng import make_generator
from lab.torus import Grid, GridField

_LOGGER_NAME = "Spectral"
_EMPIRICAL_CHUNK = 2048


class SpectralField(BaseModel):
    """Fourier coefficients of a grid field, FFT layout, shape grid.shape."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    coeffs: np.ndarray

    @field_validator('coeffs', mode='before')
    @classmethod
    def coerce_coeffs(cls, v):
        array = np.array(v, dtype=complex)
        if not np.all(np.isfinite(array)):
            raise ValueError("coefficients must be finite")
        array.setflags(write=False)
        return array

    @model_validator(mode='after')
    def validate_shape(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {self.coeffs.shape}")
        return self

    def coeff(self, m: Sequence[int]) -> complex:
        """Coefficient at integer frequency m (taken modulo N)."""
        m = tuple(int(k) for k in m)
        if len(m) != self.grid.d:
            raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(len(m), self.grid.d))
        index = tuple(k % self.grid.n_per_axis for k in m)
        return complex(self.coeffs[index])

    def multiplied(self, factors: np.ndarray) -> 'SpectralField':
        return SpectralField(grid=self.grid, coeffs=self.coeffs * factors)


class MultiplierSymbol(BaseModel):
    """A Fourier multiplier a(m), evaluated over whole frequency arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    rule: Callable[[np.ndarray], np.ndarray]

    def evaluate(self, frequencies: np.ndarray) -> np.ndarray:
        """Symbol values for an array of frequency vectors (..., d)."""
        return np.asarray(self.rule(np.asarray(frequencies)), dtype=float)

    def __call__(self, m: Sequence[int]) -> float:
        return float(self.evaluate(np.asarray([m]))[0])

    def compose(self, other: 'MultiplierSymbol') -> 'MultiplierSymbol':
        """Pointwise product of two symbols."""
        first, second = self.rule, other.rule
        return MultiplierSymbol(
            name=f"{self.name}*{other.name}",
            rule=lambda m: np.asarray(first(m)) * np.asarray(second(m)),
        )


def _l1_inverse(m: np.ndarray) -> np.ndarray:
    l1 = np.abs(m).sum(axis=-1).astype(float)
    out = np.zeros_like(l1)
    np.divide(1.0, l1, out=out, where=l1 > 0)
    return out


def symbol_a() -> MultiplierSymbol:
    """a(m) = 1/|m|_1 off the origin, a(0) = 0."""
    return MultiplierSymbol(name='inverse_l1', rule=_l1_inverse)


def identity_symbol() -> MultiplierSymbol:
    return MultiplierSymbol(name='identity', rule=lambda m: np.ones(np.shape(m)[:-1]))


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def forward_transform(field: GridField) -> SpectralField:
    coeffs = scipy.fft.fftn(field.array, norm='forward')
    return SpectralField(grid=field.grid, coeffs=coeffs)


def _partner(coeffs: np.ndarray) -> np.ndarray:
    """conj(c(-m)) for every m, in FFT layout."""
    axes = tuple(range(coeffs.ndim))
    return np.conj(np.roll(np.flip(coeffs, axis=axes), shift=(1,) * coeffs.ndim, axis=axes))


def hermitian_asymmetry(spectrum: SpectralField) -> float:
    """Largest |c(m) - conj(c(-m))| over the grid."""
    return float(np.max(np.abs(spectrum.coeffs - _partner(spectrum.coeffs))))


def hermitian_part(spectrum: SpectralField) -> SpectralField:
    """Closest Hermitian spectrum (c(m) + conj(c(-m))) / 2."""
    return SpectralField(grid=spectrum.grid, coeffs=0.5 * (spectrum.coeffs + _partner(spectrum.coeffs)))


def inverse_transform(spectrum: SpectralField) -> GridField:
    """Real field from Hermitian coefficients."""
    scale = max(1.0, float(np.max(np.abs(spectrum.coeffs))))
    asymmetry = hermitian_asymmetry(spectrum)
    if asymmetry > TOLERANCES['hermitian'] * scale:
        raise InvalidInputError(
            "Coefficients are not Hermitian symmetric",
            {'asymmetry': asymmetry}
        )
    values = scipy.fft.ifftn(spectrum.coeffs, norm='forward').real
    return GridField.from_array(spectrum.grid, values)


def nyquist_mask(grid: Grid) -> np.ndarray:
    """True where some component of m equals -N/2."""
    return np.any(grid.frequencies() == -(grid.n_per_axis // 2), axis=-1)


def drop_nyquist(spectrum: SpectralField) -> SpectralField:
    return spectrum.multiplied(~nyquist_mask(spectrum.grid))


def apply_multiplier(spectrum: SpectralField, symbol: MultiplierSymbol) -> SpectralField:
    """coeff'(m) = s(m) coeff(m) at every representable m."""
    return spectrum.multiplied(symbol.evaluate(spectrum.grid.frequencies()))



def lp_norm(field: GridField, p: float) -> float:
    """(N^-d sum_x |u(x)|^p)^(1/p) for p >= 1."""
    if not p >= 1.0:
        raise InvalidInputError("p must be >= 1", {'p': p})
    values = np.abs(field.values)
    peak = float(values.max())
    if peak == 0.0:
        return 0.0
    # scale out the maximum so large p stays finite
    return peak * float(np.mean((values / peak) ** p)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Negative Sobolev norms and proxies
# ---------------------------------------------------------------------------

def _require_mean_zero(field: GridField) -> None:
    mean = field.mean()
    scale = max(1.0, float(np.max(np.abs(field.values))))
    if abs(mean) > TOLERANCES['mean_zero'] * scale:
        raise InvalidInputError(ERROR_MESSAGES['NOT_MEAN_ZERO'].format(mean), {'mean': mean})


def _squared_frequency(grid: Grid) -> np.ndarray:
    return (grid.frequencies().astype(float) ** 2).sum(axis=-1)


def sobolev_neg_norm_exact_p2(field: GridField) -> float:
    """Exact Hdot^{-1,2} norm: sqrt(sum_{m != 0} |c(m)|^2 / (4 pi^2 |m|^2))."""
    _require_mean_zero(field)
    spectrum = drop_nyquist(forward_transform(field))
    m2 = _squared_frequency(field.grid)
    weights = np.zeros_like(m2)
    np.divide(1.0, 4.0 * np.pi ** 2 * m2, out=weights, where=m2 > 0)
    return float(np.sqrt(np.sum(np.abs(spectrum.coeffs) ** 2 * weights)))


def riesz_surrogate_norm(field: GridField, p: float) -> float:
    """||A u||_p with A the 1/|m|_1 multiplier, Nyquist modes removed."""
    _require_mean_zero(field)
    spectrum = drop_nyquist(forward_transform(field))
    return lp_norm(inverse_transform(apply_multiplier(spectrum, symbol_a())), p)


def _gradient_of_inverse_laplacian(spectrum: SpectralField) -> np.ndarray:
    """Components of V = grad(Delta^-1 u), shape (d, *grid.shape)."""
    grid = spectrum.grid
    freqs = grid.frequencies().astype(float)
    m2 = _squared_frequency(grid)
    inverse = np.zeros_like(m2)
    np.divide(1.0, 2.0 * np.pi * m2, out=inverse, where=m2 > 0)
    components = []
    for axis in range(grid.d):
        coeffs = -1j * freqs[..., axis] * spectrum.coeffs * inverse
        components.append(scipy.fft.ifftn(coeffs, norm='forward').real)
    return np.stack(components)


def beckmann_upper_bound(field: GridField, p: float) -> float:
    """||grad Delta^-1 u||_p, an admissible flux and so an upper bound on the norm."""
    _require_mean_zero(field)
    spectrum = drop_nyquist(forward_transform(field))
    flux = _gradient_of_inverse_laplacian(spectrum)
    magnitude = np.sqrt(np.sum(flux ** 2, axis=0))
    return lp_norm(GridField.from_array(field.grid, magnitude), p)


class _BandLimitedDual:
    """Test functions psi restricted to the modes |m_i| <= n_modes."""

    def __init__(self, field: GridField, n_modes: int, q: float):
        self.grid = field.grid
        self.q = q
        freqs = self.grid.frequencies()
        self.freqs = freqs.astype(float)
        self.band = np.all(np.abs(freqs) <= n_modes, axis=-1) & np.any(freqs != 0, axis=-1)
        coeffs = forward_transform(field).coeffs * self.band
        self.phi_hat = coeffs
        self.phi = scipy.fft.ifftn(coeffs, norm='forward').real

    def project(self, values: np.ndarray) -> np.ndarray:
        coeffs = scipy.fft.fftn(values, norm='forward') * self.band
        return scipy.fft.ifftn(coeffs, norm='forward').real

    def gradient(self, values: np.ndarray) -> np.ndarray:
        coeffs = scipy.fft.fftn(values, norm='forward') * self.band
        return np.stack([
            scipy.fft.ifftn(2j * np.pi * self.freqs[..., axis] * coeffs, norm='forward').real
            for axis in range(self.grid.d)
        ])

    def divergence(self, flux: np.ndarray) -> np.ndarray:
        total = np.zeros(self.grid.shape, dtype=complex)
        for axis in range(self.grid.d):
            total += 2j * np.pi * self.freqs[..., axis] * scipy.fft.fftn(flux[axis], norm='forward')
        return scipy.fft.ifftn(total * self.band, norm='forward').real

    def objective(self, psi: np.ndarray):
        grad = self.gradient(psi)
        magnitude = np.sqrt(np.sum(grad ** 2, axis=0))
        scale = float(np.mean(magnitude ** self.q)) ** (1.0 / self.q)
        inner = float(np.mean(self.phi * psi))
        return inner, scale, grad, magnitude

    def ascent_direction(self, psi: np.ndarray) -> Optional[np.ndarray]:
        inner, scale, grad, magnitude = self.objective(psi)
        if scale <= 0.0:
            return None
        weights = np.zeros_like(magnitude)
        np.power(magnitude, self.q - 2.0, out=weights, where=magnitude > 0)
        flux = scale ** (1.0 - self.q) * weights * grad
        # gradient of the norm is D*(flux) = -div(flux)
        norm_gradient = -self.divergence(flux)
        return self.project((self.phi * scale - inner * norm_gradient) / scale ** 2)


def dual_ascent_lower_bound(field: GridField, p: float, n_modes: int = 4, iters: int = 200,
                            seed: int = 0, restarts: int = 3) -> float:
    """
    Lower bound on the Hdot^{-1,p} norm by maximizing <u, psi> / ||grad psi||_{p'}
    over band-limited test functions psi.

    Restart 0 starts from the band-limited Delta^-1 u, further restarts from
    random band-limited fields seeded by seed. The best ratio seen is
    returned, so the value never decreases with iters.
    """
    _require_mean_zero(field)
    if not p >= 2.0:
        raise InvalidInputError("dual ascent supports p >= 2", {'p': p})
    if n_modes < 1 or iters < 0 or restarts < 1:
        raise InvalidInputError(
            "n_modes and restarts must be >= 1, iters >= 0",
            {'n_modes': n_modes, 'iters': iters, 'restarts': restarts}
        )
    grid = field.grid
    n_modes = min(n_modes, grid.n_per_axis // 2 - 1)
    q = p / (p - 1.0)
    dual = _BandLimitedDual(field, n_modes, q)

    if float(np.max(np.abs(dual.phi_hat))) <= 1e-300:
        return 0.0

    m2 = _squared_frequency(grid)
    inverse = np.zeros_like(m2)
    np.divide(1.0, 4.0 * np.pi ** 2 * m2, out=inverse, where=m2 > 0)
    rng = make_generator(seed, 0xD0A1)

    best = 0.0
    for restart in range(restarts):
        if restart == 0:
            psi = scipy.fft.ifftn(dual.phi_hat * inverse, norm='forward').real
        else:
            psi = dual.project(rng.standard_normal(grid.shape))

        inner, scale, _, _ = dual.objective(psi)
        if scale <= 0.0:
            continue
        psi = psi / scale
        best = max(best, inner / scale)

        for iteration in range(1, iters + 1):
            direction = dual.ascent_direction(psi)
            if direction is None:
                break
            length = float(np.sqrt(np.mean(direction ** 2)))
            if length <= 0.0:
                break
            size = float(np.sqrt(np.mean(psi ** 2)))
            psi = psi + (0.1 / np.sqrt(iteration)) * size * direction / length
            inner, scale, _, _ = dual.objective(psi)
            if scale <= 0.0:
                break
            psi = psi / scale
            best = max(best, inner / scale)

    log_with_timestamp(
        f"Dual ascent p={p} modes={n_modes} iters={iters}: {best:.6g}", _LOGGER_NAME, "debug"
    )
    return float(best)


# ---------------------------------------------------------------------------
# Empirical measures
# ---------------------------------------------------------------------------

def empirical_spectrum(points: np.ndarray, grid: Grid) -> SpectralField:
    """
    Fourier coefficients of the empirical measure (1/n) sum_j delta_{X_j}
    on the grid's frequency box. coeff(0) is exactly 1.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != grid.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(points.shape[1], grid.d))
    n = points.shape[0]
    if n == 0:
        raise InvalidInputError("empirical spectrum of an empty sample")

    axis_freqs = scipy.fft.fftfreq(grid.n_per_axis, d=1.0 / grid.n_per_axis)
    letters = 'abcdefgh'[:grid.d]
    subscripts = ','.join(f'j{letter}' for letter in letters) + '->' + letters

    total = np.zeros(grid.shape, dtype=complex)
    for start in range(0, n, _EMPIRICAL_CHUNK):
        chunk = points[start:start + _EMPIRICAL_CHUNK]
        factors = [np.exp(-2j * np.pi * np.outer(chunk[:, axis], axis_freqs)) for axis in range(grid.d)]
        total += np.einsum(subscripts, *factors, optimize=True)
    return SpectralField(grid=grid, coeffs=total / n)
