# src/lab/kernels.py
"""
The radial bump kernel K(x) = c * exp(-1/(1-|x|^2)) on the unit ball, its
Fourier transform kappa, kernel smoothing on the grid and the multiplier
sums S0, S1 of v_h(m) = a(m) kappa(h m).

kappa is radial, so it is tabulated once per dimension as a function of
|xi|_2 on [0, 200] (spacing 1e-3) and read back through a cubic spline.
The table is the Fourier transform of the kernel's one-axis marginal,
computed with a single long real FFT.
"""

import math
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import comb, gamma
from scipy.stats import linregress

from core.constants import (
    ERROR_MESSAGES, KAPPA_TABLE_RADIUS, KAPPA_TABLE_SPACING, KDE_RESOLUTION_MIN,
    MAX_BANDWIDTH, SUPPORTED_KERNEL_DIMENSIONS,
)
from core.exceptions import InvalidInputError, ResolutionError, UnsupportedDensityError
from core.logging import PerformanceLogger, log_with_timestamp

from lab.densities import DensitySpec, EmpiricalMeasure
from lab.spectral import SpectralField, empirical_spectrum, hermitian_part, inverse_transform
from lab.torus import Grid, GridField

_LOGGER_NAME = "Kernels"
_MARGINAL_SPACING = 5e-4
_GAUSS_NODES = 256
_DIRECT_CHUNK = 1 << 22


def bump_profile(r: Union[float, np.ndarray]) -> np.ndarray:
    """exp(-1/(1-r^2)) for r < 1, zero otherwise."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def sphere_area(d: int) -> float:
    """Area of the unit sphere in R^d (2 for d = 1)."""
    return float(2.0 * np.pi ** (d / 2.0) / gamma(d / 2.0))


def _radial_moment(power: float) -> float:
    """int_0^1 r^power profile(r) dr"""
    value, _ = quad(
        lambda r: r ** power * math.exp(-1.0 / (1.0 - r * r)) if r < 1.0 else 0.0,
        0.0, 1.0, epsabs=1e-15, epsrel=1e-12, limit=200,
    )
    return value


class Bandwidth(BaseModel):
    """Kernel bandwidth h in (0, 1/2)."""

    model_config = ConfigDict(frozen=True)

    h: float = Field(gt=0.0, lt=MAX_BANDWIDTH)


def as_bandwidth(h: Union[float, Bandwidth]) -> float:
    if isinstance(h, Bandwidth):
        return h.h
    if not (0.0 < float(h) < MAX_BANDWIDTH):
        raise InvalidInputError(f"Bandwidth must lie in (0, {MAX_BANDWIDTH})", {'h': h})
    return float(h)


class KernelSpec(BaseModel):
    """Bump kernel in dimension d with its kappa table."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int
    c_norm: float = Field(gt=0)
    knots: np.ndarray
    table: np.ndarray
    envelope: np.ndarray
    spline: CubicSpline

    @field_validator('d')
    @classmethod
    def validate_d(cls, v):
        if v not in SUPPORTED_KERNEL_DIMENSIONS:
            raise ValueError(f"kernel dimension must be one of {SUPPORTED_KERNEL_DIMENSIONS}")
        return v

    @property
    def radius(self) -> float:
        return float(self.knots[-1])

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """K at points of shape (..., d)."""
        x = np.asarray(x, dtype=float)
        return self.c_norm * bump_profile(np.linalg.norm(x, axis=-1))

    def kappa_radial(self, rho: Union[float, np.ndarray]) -> np.ndarray:
        """kappa as a function of |xi|_2; zero beyond the table."""
        rho = np.abs(np.asarray(rho, dtype=float))
        return np.where(rho <= self.radius, self.spline(np.minimum(rho, self.radius)), 0.0)

    def envelope_at(self, rho: Union[float, np.ndarray]) -> np.ndarray:
        """Running maximum of |kappa| beyond rho, an upper bound for |kappa(xi)| at |xi|_2 >= rho."""
        rho = np.abs(np.asarray(rho, dtype=float))
        index = np.floor(rho / KAPPA_TABLE_SPACING).astype(np.int64)
        inside = index < self.envelope.size
        return np.where(inside, self.envelope[np.minimum(index, self.envelope.size - 1)], 0.0)


def _marginal(d: int, c_norm: float, x: np.ndarray) -> np.ndarray:
    """One-axis marginal P(x) = int K(x, y) dy of the d-dimensional kernel."""
    if d == 1:
        return c_norm * bump_profile(x)

    nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_NODES)
    ax = np.abs(x)[:, None]
    inside = ax[:, 0] < 1.0
    result = np.zeros_like(x)
    if d == 2:
        # 2c int_0^sqrt(1-x^2) profile(sqrt(x^2 + y^2)) dy
        half = np.sqrt(np.clip(1.0 - ax ** 2, 0.0, None)) / 2.0
        y = half * (nodes[None, :] + 1.0)
        r = np.sqrt(ax ** 2 + y ** 2)
        result[inside] = (2.0 * c_norm * half * (bump_profile(r) @ weights[:, None]))[inside, 0]
    else:
        # 2 pi c int_|x|^1 profile(r) r dr
        half = (1.0 - ax) / 2.0
        r = ax + half * (nodes[None, :] + 1.0)
        result[inside] = (2.0 * np.pi * c_norm * half * ((bump_profile(r) * r) @ weights[:, None]))[inside, 0]
    return result


def _kappa_table(d: int, c_norm: float) -> Tuple[np.ndarray, np.ndarray]:
    half_width = int(round(1.0 / _MARGINAL_SPACING))
    x = np.arange(-half_width, half_width + 1) * _MARGINAL_SPACING
    length = int(round(1.0 / (KAPPA_TABLE_SPACING * _MARGINAL_SPACING)))

    buffer = np.zeros(length)
    buffer[np.arange(-half_width, half_width + 1) % length] = _marginal(d, c_norm, x)
    spectrum = scipy.fft.rfft(buffer)

    count = int(round(KAPPA_TABLE_RADIUS / KAPPA_TABLE_SPACING)) + 1
    knots = np.arange(count) * KAPPA_TABLE_SPACING
    values = _MARGINAL_SPACING * spectrum[:count].real
    return knots, values


@lru_cache(maxsize=None)
def bump_kernel(d: int) -> KernelSpec:
    """The normalized bump kernel in dimension d in {1, 2, 3}; cached per d."""
    if d not in SUPPORTED_KERNEL_DIMENSIONS:
        raise InvalidInputError(
            f"Bump kernel is available for d in {SUPPORTED_KERNEL_DIMENSIONS}", {'d': d}
        )
    with PerformanceLogger(f"kappa table d={d}", _LOGGER_NAME, "debug"):
        c_norm = 1.0 / (sphere_area(d) * _radial_moment(d - 1))
        knots, values = _kappa_table(d, c_norm)
        envelope = np.maximum.accumulate(np.abs(values)[::-1])[::-1].copy()
        spline = CubicSpline(knots, values)
    for array in (knots, values, envelope):
        array.setflags(write=False)
    return KernelSpec(d=d, c_norm=c_norm, knots=knots, table=values, envelope=envelope, spline=spline)


def kernel_C0(kernel: KernelSpec, p: float) -> float:
    """(int |x|^p K(x) dx)^(1/p)"""
    if not p >= 1.0:
        raise InvalidInputError("p must be >= 1", {'p': p})
    moment = sphere_area(kernel.d) * kernel.c_norm * _radial_moment(p + kernel.d - 1)
    return float(moment ** (1.0 / p))


def kappa(kernel: KernelSpec, xi: Union[Sequence[float], np.ndarray]) -> Union[float, np.ndarray]:
    """kappa(xi) for one frequency (d,) or an array (..., d)."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != kernel.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(xi.shape[-1], kernel.d))
    values = kernel.kappa_radial(np.linalg.norm(xi, axis=-1))
    if values.ndim == 0:
        return float(values)
    return values


def kappa_decay_slope(kernel: KernelSpec, rho_min: float = 10.0, rho_max: float = 50.0) -> float:
    """Fitted log-log slope of the |kappa| envelope over [rho_min, rho_max]."""
    mask = (kernel.knots >= rho_min) & (kernel.knots <= rho_max)
    rho = kernel.knots[mask][::10]
    env = kernel.envelope[mask][::10]
    return float(linregress(np.log(rho), np.log(env)).slope)


def kappa_decay_constant(kernel: KernelSpec, gamma_: float, rho_min: float = 1.0) -> float:
    """Smallest C with |kappa(xi)| <= C |xi|^-gamma over the table beyond rho_min."""
    mask = kernel.knots >= rho_min
    return float(np.max(np.abs(kernel.table[mask]) * kernel.knots[mask] ** gamma_))


# ---------------------------------------------------------------------------
# Smoothing on the grid
# ---------------------------------------------------------------------------

def _check_dimensions(kernel: KernelSpec, grid: Grid, d: int) -> None:
    if not kernel.d == grid.d == d:
        raise InvalidInputError(
            ERROR_MESSAGES['DIMENSION_MISMATCH'].format((kernel.d, grid.d), d)
        )


def smoothed_density_field(density: DensitySpec, kernel: KernelSpec,
                           h: Union[float, Bandwidth], grid: Grid) -> GridField:
    """K_h * f on the grid, from the exact coefficients kappa(h m) f_hat(m)."""
    h = as_bandwidth(h)
    _check_dimensions(kernel, grid, density.d)
    if not density.has_exact_coeffs:
        raise UnsupportedDensityError(
            "Smoothing needs exact Fourier coefficients", {'density': density.name}
        )
    nodes = grid.nodes()
    values = np.ones(grid.size)
    for mode in density.modes:
        m = np.asarray(mode.m, dtype=float)
        damping = float(kernel.kappa_radial(h * np.linalg.norm(m)))
        values += mode.alpha * damping * np.cos(2.0 * np.pi * nodes @ m + mode.theta)
    return GridField(grid=grid, values=values)


def kde_spectrum(points: np.ndarray, kernel: KernelSpec, h: float, grid: Grid) -> SpectralField:
    """kappa(h m) times the empirical spectrum, Hermitian part taken."""
    spectrum = empirical_spectrum(points, grid)
    radius = h * np.linalg.norm(grid.frequencies().astype(float), axis=-1)
    return hermitian_part(spectrum.multiplied(kernel.kappa_radial(radius)))


def _kde_direct(points: np.ndarray, kernel: KernelSpec, h: float, grid: Grid) -> np.ndarray:
    nodes = grid.nodes()
    chunk = max(1, _DIRECT_CHUNK // (nodes.shape[0] * grid.d))
    total = np.zeros(nodes.shape[0])
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        diff = nodes[None, :, :] - block[:, None, :]
        diff -= np.round(diff)
        total += kernel.evaluate(diff / h).sum(axis=0)
    return total / (points.shape[0] * h ** grid.d)


def kde_field(sample: EmpiricalMeasure, kernel: KernelSpec, h: Union[float, Bandwidth],
              grid: Grid, method: str = 'direct') -> GridField:
    """
    f_{n,h}(x) = (1/n) sum_j K_h(x - X_j) at the grid nodes.

    'direct' sums the periodized kernel exactly; 'spectral' inverts
    kappa(h m) mu_n_hat(m) over the grid's frequency box and needs N*h >= 2.
    """
    h = as_bandwidth(h)
    _check_dimensions(kernel, grid, sample.d)
    if method == 'direct':
        return GridField(grid=grid, values=_kde_direct(sample.points, kernel, h, grid))
    if method == 'spectral':
        resolution = grid.n_per_axis * h
        if resolution < KDE_RESOLUTION_MIN:
            raise ResolutionError(
                ERROR_MESSAGES['RESOLUTION'].format(resolution, KDE_RESOLUTION_MIN),
                {'n_per_axis': grid.n_per_axis, 'h': h}
            )
        return inverse_transform(kde_spectrum(sample.points, kernel, h, grid))
    raise InvalidInputError(f"Unknown KDE method: {method}", {'method': method})


# ---------------------------------------------------------------------------
# Multiplier sums
# ---------------------------------------------------------------------------

class MultiplierSums(BaseModel):
    """S0 over 0 < |m|_1 <= 1/h, S1 over 1/h < |m|_1 <= T, and a bound on the rest."""

    model_config = ConfigDict(frozen=True)

    h: float
    p_star: float
    d: int
    s0: float
    s1: float
    tail_bound: float
    truncation: int
    warnings: List[str] = Field(default_factory=list)

    @property
    def total(self) -> float:
        return self.s0 + self.s1


def _orthant_blocks(d: int, truncation: int):
    """Nonzero m >= 0 with |m|_1 <= T in blocks, with multiplicity 2^(number of nonzero entries)."""
    if d == 1:
        m = np.arange(1, truncation + 1)[:, None]
        yield m, np.full(m.shape[0], 2.0)
        return
    for leading in np.ndindex(*([truncation + 1] * (d - 2))):
        remaining = truncation - sum(leading)
        if remaining < 0:
            continue
        i, j = np.meshgrid(np.arange(remaining + 1), np.arange(remaining + 1), indexing='ij')
        keep = (i + j) <= remaining
        if not any(leading):
            keep &= (i + j) > 0
        tail = np.stack([i[keep], j[keep]], axis=-1)
        m = np.hstack([np.tile(np.asarray(leading, dtype=int), (tail.shape[0], 1)), tail])
        yield m, 2.0 ** np.count_nonzero(m, axis=1)


def _shell_counts(d: int, radius: np.ndarray) -> np.ndarray:
    """Number of lattice points with |m|_1 = R exactly."""
    counts = np.zeros_like(radius, dtype=float)
    for k in range(1, d + 1):
        counts += 2.0 ** k * comb(d, k) * comb(radius - 1, k - 1)
    return counts


def v_h_sums(kernel: KernelSpec, h: Union[float, Bandwidth], p_star: float,
             d: Optional[int] = None, truncation: Optional[int] = None) -> MultiplierSums:
    """
    Partial sums of |a(m) kappa(h m)|^p* over the lattice, split at |h m|_1 = 1.

    The truncation T counts the l1 radius of m and defaults to ceil(4/h);
    the reported tail bound covers |m|_1 > T through the kappa envelope.
    """
    h = as_bandwidth(h)
    d = kernel.d if d is None else d
    if d != kernel.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(d, kernel.d))
    if not p_star > 1.0:
        raise InvalidInputError("p* must be > 1", {'p_star': p_star})

    warnings: List[str] = []
    minimum = int(math.ceil(4.0 / h - 1e-9))
    truncation = minimum if truncation is None else int(truncation)
    if truncation < minimum:
        warnings.append(
            f"truncation {truncation} < 4/h = {4.0 / h:.1f}; the tail bound may dominate"
        )

    cutoff = int(math.floor(1.0 / h + 1e-9))
    inner: List[float] = []
    outer: List[float] = []
    for m, multiplicity in _orthant_blocks(d, truncation):
        l1 = m.sum(axis=1).astype(float)
        l2 = np.sqrt((m.astype(float) ** 2).sum(axis=1))
        terms = multiplicity * np.abs(kernel.kappa_radial(h * l2) / l1) ** p_star
        near = m.sum(axis=1) <= cutoff
        inner.append(float(terms[near].sum()))
        outer.append(float(terms[~near].sum()))

    last = int(math.ceil(kernel.radius * math.sqrt(d) / h)) + 1
    shells = np.arange(truncation + 1, max(truncation + 1, last) + 1, dtype=float)
    tail = float(np.sum(
        _shell_counts(d, shells) * shells ** (-p_star)
        * kernel.envelope_at(h * shells / math.sqrt(d)) ** p_star
    ))

    for message in warnings:
        log_with_timestamp(message, _LOGGER_NAME, "warning")
    return MultiplierSums(
        h=h, p_star=p_star, d=d, s0=math.fsum(inner), s1=math.fsum(outer),
        tail_bound=tail, truncation=truncation, warnings=warnings,
    )
