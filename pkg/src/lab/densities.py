# src/lab/densities.py
"""
Bounded densities on the torus, sampling and discretization.

The built-in family is f(x) = 1 + sum_k alpha_k cos(2 pi m_k.x + theta_k)
with sum |alpha_k| < 1, which keeps f between 1 - sum|alpha| and
1 + sum|alpha| and gives exact Fourier coefficients.
"""

from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.constants import ERROR_MESSAGES, REJECTION_CAP, TOLERANCES
from core.exceptions import BoundsViolationError, InvalidInputError, SamplingError
from core.logging import log_with_timestamp
from core.models import DensityConfig

from lab.rng import make_generator
from lab.torus import Grid, GridField, wrap_coordinates

_LOGGER_NAME = "Densities"
_MAX_BATCH = 1 << 20


class CosineMode(BaseModel):
    """alpha * cos(2 pi m.x + theta)"""

    model_config = ConfigDict(frozen=True)

    m: Tuple[int, ...] = Field(min_length=1)
    alpha: float
    theta: float = 0.0

    @field_validator('m')
    @classmethod
    def validate_nonzero(cls, v):
        if not any(v):
            raise ValueError("mode frequency must be nonzero")
        return v


class DensitySpec(BaseModel):
    """
    A density on the torus with certified bounds f_min <= f <= f_max.

    Built-in members carry their cosine modes, from which exact Fourier
    coefficients follow; densities built from a callable carry none.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int = Field(ge=1)
    f_min: float = Field(gt=0)
    f_max: float
    name: str = 'density'
    modes: Optional[Tuple[CosineMode, ...]] = None
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @model_validator(mode='after')
    def validate_bounds(self):
        if self.f_max < self.f_min:
            raise ValueError(f"f_max {self.f_max} < f_min {self.f_min}")
        if (self.modes is None) == (self.evaluator is None):
            raise ValueError("exactly one of modes and evaluator must be given")
        for mode in self.modes or ():
            if len(mode.m) != self.d:
                raise ValueError(f"mode {mode.m} does not have dimension {self.d}")
        return self

    @classmethod
    def from_callable(cls, d: int, evaluator: Callable[[np.ndarray], np.ndarray],
                      f_min: float, f_max: float, name: str = 'custom') -> 'DensitySpec':
        """Density given by a vectorized function of (n, d) points."""
        return cls(d=d, f_min=f_min, f_max=f_max, name=name, evaluator=evaluator)

    @property
    def has_exact_coeffs(self) -> bool:
        return self.modes is not None

    @property
    def exact_coeffs(self) -> Optional[Dict[Tuple[int, ...], complex]]:
        """Finite map m -> f_hat(m); None for callable densities."""
        if self.modes is None:
            return None
        coeffs: Dict[Tuple[int, ...], complex] = {(0,) * self.d: 1.0 + 0j}
        for mode in self.modes:
            half = 0.5 * mode.alpha
            plus = tuple(mode.m)
            minus = tuple(-k for k in mode.m)
            coeffs[plus] = coeffs.get(plus, 0j) + half * np.exp(1j * mode.theta)
            coeffs[minus] = coeffs.get(minus, 0j) + half * np.exp(-1j * mode.theta)
        return coeffs

    def eval(self, x: np.ndarray) -> np.ndarray:
        """Density values at points of shape (n, d); a single (d,) point gives shape (1,)."""
        points = np.atleast_2d(np.asarray(x, dtype=float))
        if points.shape[1] != self.d:
            raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(points.shape[1], self.d))
        if self.evaluator is not None:
            return np.asarray(self.evaluator(points), dtype=float).reshape(points.shape[0])
        values = np.ones(points.shape[0])
        if self.modes:
            frequencies = np.array([mode.m for mode in self.modes], dtype=float)
            alphas = np.array([mode.alpha for mode in self.modes])
            thetas = np.array([mode.theta for mode in self.modes])
            phases = 2.0 * np.pi * points @ frequencies.T + thetas
            values = values + np.cos(phases) @ alphas
        return values


def uniform_density(d: int) -> DensitySpec:
    if d < 1:
        raise InvalidInputError("dimension must be >= 1", {'d': d})
    return DensitySpec(d=d, f_min=1.0, f_max=1.0, name='uniform', modes=())


ModeLike = Union[CosineMode, Tuple[Sequence[int], float, float]]


def _as_mode(mode: ModeLike) -> CosineMode:
    if isinstance(mode, CosineMode):
        return mode
    m, alpha, theta = mode
    try:
        return CosineMode(m=tuple(int(k) for k in m), alpha=float(alpha), theta=float(theta))
    except ValueError as e:
        raise InvalidInputError(f"Invalid cosine mode {mode!r}", {'error': str(e)})


def cosine_mixture_density(d: int, modes: Iterable[ModeLike]) -> DensitySpec:
    """1 + sum alpha cos(2 pi m.x + theta); requires sum |alpha| < 1."""
    modes = tuple(_as_mode(mode) for mode in modes)
    if not modes:
        return uniform_density(d)
    for mode in modes:
        if len(mode.m) != d:
            raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(len(mode.m), d))
    total = float(sum(abs(mode.alpha) for mode in modes))
    if total >= 1.0:
        raise BoundsViolationError(
            "Cosine amplitudes sum to >= 1; the density could vanish",
            {'sum_abs_alpha': total}
        )
    return DensitySpec(
        d=d, f_min=1.0 - total, f_max=1.0 + total, name='cosine_mixture', modes=modes
    )


def density_from_config(d: int, descriptor: DensityConfig) -> DensitySpec:
    """Build the density described in an experiment config."""
    if descriptor.kind == 'uniform':
        return uniform_density(d)
    return cosine_mixture_density(
        d, [(mode.m, mode.alpha, mode.theta) for mode in descriptor.modes]
    )


def random_cosine_mixture(d: int, rng: np.random.Generator, n_modes: int = 3,
                          max_frequency: int = 3, amplitude: float = 0.8) -> DensitySpec:
    """Random member of the family with distinct modes and sum |alpha| <= amplitude."""
    candidates = np.array(
        [m for m in np.ndindex(*([2 * max_frequency + 1] * d))], dtype=int
    ) - max_frequency
    # one representative per +-m pair
    candidates = [m for m in candidates if tuple(m) > tuple(-m)]
    chosen = rng.choice(len(candidates), size=min(n_modes, len(candidates)), replace=False)
    weights = rng.uniform(0.2, 1.0, size=len(chosen))
    scale = amplitude * rng.uniform(0.5, 1.0)
    alphas = scale * weights / weights.sum() * rng.choice([-1.0, 1.0], size=len(chosen))
    thetas = rng.uniform(0.0, 2.0 * np.pi, size=len(chosen))
    return cosine_mixture_density(
        d, [(candidates[k], alpha, theta) for k, alpha, theta in zip(chosen, alphas, thetas)]
    )


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

class DiscreteMeasure(BaseModel):
    """Finitely many atoms with nonnegative weights summing to 1."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    atoms: np.ndarray
    weights: np.ndarray

    @field_validator('atoms', mode='before')
    @classmethod
    def coerce_atoms(cls, v):
        array = np.atleast_2d(np.array(v, dtype=float))
        if array.shape[0] == 0:
            raise ValueError("a discrete measure needs at least one atom")
        array = wrap_coordinates(array)
        array.setflags(write=False)
        return array

    @field_validator('weights', mode='before')
    @classmethod
    def coerce_weights(cls, v):
        array = np.array(v, dtype=float).reshape(-1)
        if np.any(array < 0) or not np.all(np.isfinite(array)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(array.sum() - 1.0) > TOLERANCES['weight_sum']:
            raise ValueError(f"weights sum to {array.sum()!r}, not 1")
        array.setflags(write=False)
        return array

    @model_validator(mode='after')
    def validate_lengths(self):
        if self.atoms.shape[0] != self.weights.size:
            raise ValueError(f"{self.atoms.shape[0]} atoms but {self.weights.size} weights")
        return self

    @classmethod
    def uniform(cls, atoms: np.ndarray) -> 'DiscreteMeasure':
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        return cls(atoms=atoms, weights=np.full(atoms.shape[0], 1.0 / atoms.shape[0]))

    @property
    def d(self) -> int:
        return self.atoms.shape[1]

    def support(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indices, atoms, weights) of the atoms with positive weight."""
        index = np.flatnonzero(self.weights > 0)
        return index, self.atoms[index], self.weights[index]

    def shifted(self, offset: Sequence[float]) -> 'DiscreteMeasure':
        return DiscreteMeasure(atoms=self.atoms + np.asarray(offset, dtype=float), weights=self.weights)


class EmpiricalMeasure(BaseModel):
    """n sample points with implicit weights 1/n."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray
    n_proposals: Optional[int] = None
    n_accepted: Optional[int] = None

    @field_validator('points', mode='before')
    @classmethod
    def coerce_points(cls, v):
        array = np.atleast_2d(np.array(v, dtype=float))
        if array.shape[0] == 0:
            raise ValueError("an empirical measure needs n >= 1 points")
        array = wrap_coordinates(array)
        array.setflags(write=False)
        return array

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def acceptance_rate(self) -> Optional[float]:
        if not self.n_proposals:
            return None
        return self.n_accepted / self.n_proposals

    def to_discrete(self) -> DiscreteMeasure:
        return DiscreteMeasure.uniform(self.points)


def sample(density: DensitySpec, n: int, seed: int) -> EmpiricalMeasure:
    """
    n i.i.d. draws by rejection: propose uniform on [0,1)^d and accept with
    probability f(x)/f_max. Deterministic given seed.
    """
    if n < 1:
        raise InvalidInputError("sample size must be >= 1", {'n': n})
    rng = make_generator(seed)
    accepted: List[np.ndarray] = []
    n_accepted = n_proposals = consecutive_rejections = 0

    while n_accepted < n:
        batch = min(_MAX_BATCH, int(np.ceil((n - n_accepted) * density.f_max * 1.1)) + 16)
        proposals = rng.random((batch, density.d))
        uniforms = rng.random(batch)
        keep = uniforms * density.f_max < density.eval(proposals)
        n_proposals += batch

        hits = np.flatnonzero(keep)
        if hits.size:
            consecutive_rejections = batch - 1 - int(hits[-1])
            accepted.append(proposals[keep])
            n_accepted += hits.size
        else:
            consecutive_rejections += batch
        if consecutive_rejections >= REJECTION_CAP:
            raise SamplingError(
                "Rejection sampler stalled; the density bounds are wrong",
                {'density': density.name, 'consecutive_rejections': consecutive_rejections}
            )

    log_with_timestamp(
        f"Sampled n={n} from {density.name} with {n_proposals} proposals", _LOGGER_NAME, "debug"
    )
    points = np.concatenate(accepted)[:n]
    return EmpiricalMeasure(points=points, n_proposals=n_proposals, n_accepted=n_accepted)


def density_to_field(density: DensitySpec, grid: Grid) -> GridField:
    if density.d != grid.d:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(density.d, grid.d))
    return GridField(grid=grid, values=density.eval(grid.nodes()))


def quantize_field(field: GridField) -> DiscreteMeasure:
    """Atoms at grid nodes with weights proportional to the node values."""
    values = np.asarray(field.values, dtype=float)
    if values.min() < -TOLERANCES['density_negativity']:
        raise InvalidInputError(
            "Field is negative and cannot be quantized", {'min': float(values.min())}
        )
    values = np.clip(values, 0.0, None)
    total = values.sum()
    if total <= 0:
        raise InvalidInputError("Field has no mass")
    return DiscreteMeasure(atoms=field.grid.nodes(), weights=values / total)


def quantize(density: DensitySpec, grid: Grid) -> DiscreteMeasure:
    """Node-value quantization; W_p error at most sqrt(d)/(2N) plus O(Lip(f)/N)."""
    return quantize_field(density_to_field(density, grid))
