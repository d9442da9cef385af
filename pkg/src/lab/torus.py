# src/lab/torus.py
"""
Geometry of the flat torus [0,1)^d.

Points are wrapped coordinates, distances use the minimal image
convention, and a Grid is the uniform lattice {0, 1/N, ..., (N-1)/N}^d in
C (row-major) order. GridField holds one real value per node.
"""

from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.constants import ERROR_MESSAGES, MIN_GRID_POINTS
from core.exceptions import InvalidInputError

ArrayLike = Union[Sequence[float], np.ndarray]


def _as_coordinates(x: ArrayLike) -> np.ndarray:
    array = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(
            ERROR_MESSAGES['NON_FINITE'].format(array.tolist() if array.size <= 8 else array.shape)
        )
    return array


class TorusPoint(BaseModel):
    """A point of the torus with every coordinate in [0, 1)."""

    model_config = ConfigDict(frozen=True)

    coords: Tuple[float, ...] = Field(min_length=1)

    @field_validator('coords')
    @classmethod
    def validate_coords(cls, v):
        for c in v:
            if not (np.isfinite(c) and 0.0 <= c < 1.0):
                raise ValueError(f"coordinate {c} outside [0, 1)")
        return v

    @property
    def d(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def wrap_coordinates(x: ArrayLike) -> np.ndarray:
    """Vectorized wrap of arbitrary real coordinates into [0, 1)."""
    array = _as_coordinates(x)
    wrapped = array - np.floor(array)
    # x - floor(x) can round up to exactly 1.0 for tiny negative x
    wrapped[wrapped >= 1.0] = 0.0
    return wrapped


def wrap(x: ArrayLike) -> TorusPoint:
    """Wrap a real vector onto the torus."""
    array = np.atleast_1d(wrap_coordinates(x))
    if array.ndim != 1:
        raise InvalidInputError("wrap expects a single vector", {'shape': array.shape})
    return TorusPoint(coords=tuple(float(c) for c in array))


def periodic_difference(x: ArrayLike, y: ArrayLike) -> np.ndarray:
    """Minimal image difference x - y; every component lies in [-1/2, 1/2]."""
    diff = _as_coordinates(x) - _as_coordinates(y)
    return diff - np.round(diff)


def _point_array(x: Union[TorusPoint, ArrayLike]) -> np.ndarray:
    if isinstance(x, TorusPoint):
        return x.as_array()
    return np.atleast_1d(_as_coordinates(x))


def periodic_distance(x: Union[TorusPoint, ArrayLike], y: Union[TorusPoint, ArrayLike]) -> float:
    """Geodesic distance on the flat torus."""
    a, b = _point_array(x), _point_array(y)
    if a.shape != b.shape:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(a.shape, b.shape))
    return float(np.linalg.norm(periodic_difference(a, b)))


def periodic_distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise periodic distances between rows of a (n, d) and b (m, d)."""
    a = np.atleast_2d(_as_coordinates(a))
    b = np.atleast_2d(_as_coordinates(b))
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError(ERROR_MESSAGES['DIMENSION_MISMATCH'].format(a.shape[1], b.shape[1]))

    squared = np.zeros((a.shape[0], b.shape[0]))
    for axis in range(a.shape[1]):
        diff = a[:, axis, None] - b[None, :, axis]
        diff -= np.round(diff)
        squared += diff * diff
    return np.sqrt(squared)


@lru_cache(maxsize=32)
def _grid_nodes(d: int, n: int) -> np.ndarray:
    nodes = np.indices((n,) * d, dtype=float).reshape(d, -1).T / n
    nodes.setflags(write=False)
    return nodes


@lru_cache(maxsize=32)
def _grid_frequencies(d: int, n: int) -> np.ndarray:
    axis = np.fft.fftfreq(n, d=1.0 / n).round().astype(int)
    freqs = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1)
    freqs.setflags(write=False)
    return freqs


class Grid(BaseModel):
    """Uniform N^d lattice on the torus; N is a power of two."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(ge=1)
    n_per_axis: int

    @field_validator('n_per_axis')
    @classmethod
    def validate_n(cls, v):
        if v < MIN_GRID_POINTS or v & (v - 1):
            raise ValueError(f"grid size must be a power of two >= {MIN_GRID_POINTS}, got {v}")
        return v

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_per_axis,) * self.d

    @property
    def size(self) -> int:
        return self.n_per_axis ** self.d

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_per_axis

    @property
    def quantization_slack(self) -> float:
        """Largest distance from a point to its nearest node."""
        return float(np.sqrt(self.d) / (2 * self.n_per_axis))

    def nodes(self) -> np.ndarray:
        """Node coordinates as rows (size, d), read-only."""
        return _grid_nodes(self.d, self.n_per_axis)

    def frequencies(self) -> np.ndarray:
        """Integer frequency vectors in FFT layout, shape (*shape, d), read-only."""
        return _grid_frequencies(self.d, self.n_per_axis)


def grid_nodes(grid: Grid) -> np.ndarray:
    """All N^d nodes of the grid in row-major order."""
    return grid.nodes()


class GridField(BaseModel):
    """Real values on the nodes of a grid, stored flat in row-major order."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator('values', mode='before')
    @classmethod
    def coerce_values(cls, v):
        array = np.array(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(array)):
            raise ValueError("field values must be finite")
        array.setflags(write=False)
        return array

    @model_validator(mode='after')
    def validate_size(self):
        if self.values.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {self.values.size}")
        return self

    @classmethod
    def from_array(cls, grid: Grid, array: np.ndarray) -> 'GridField':
        return cls(grid=grid, values=np.asarray(array, dtype=float).reshape(-1))

    @property
    def array(self) -> np.ndarray:
        """Values reshaped to the grid shape."""
        return self.values.reshape(self.grid.shape)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def _check_grid(self, other: 'GridField') -> None:
        if other.grid != self.grid:
            raise InvalidInputError(
                ERROR_MESSAGES['DIMENSION_MISMATCH'].format(self.grid.shape, other.grid.shape)
            )

    def __add__(self, other: 'GridField') -> 'GridField':
        self._check_grid(other)
        return GridField(grid=self.grid, values=self.values + other.values)

    def __sub__(self, other: 'GridField') -> 'GridField':
        self._check_grid(other)
        return GridField(grid=self.grid, values=self.values - other.values)

    def scaled(self, factor: float) -> 'GridField':
        return GridField(grid=self.grid, values=self.values * float(factor))
