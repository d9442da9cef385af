# src/lab/rng.py
"""Seed derivation for reproducible parallel Monte Carlo.

Every random stream is a Philox generator keyed by a SeedSequence built
from (master_seed, *path), so replicate r at sample size n always sees the
same numbers regardless of how replicates are scheduled.
"""

from typing import Tuple

import numpy as np

from core.exceptions import InvalidInputError

_SEED_LIMIT = 2 ** 64


def _entropy(master_seed: int, path: Tuple[int, ...]) -> list:
    values = [int(master_seed), *(int(p) for p in path)]
    if any(v < 0 or v >= _SEED_LIMIT for v in values):
        raise InvalidInputError("Seeds must be 64-bit unsigned integers", {'seed': values})
    return values


def seed_sequence(master_seed: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(_entropy(master_seed, path))


def make_generator(master_seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for the stream (master_seed, *path)."""
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, *path)))


def derived_seed(master_seed: int, *path: int) -> int:
    """Seed for the stream (master_seed, *path); stable across runs."""
    state = seed_sequence(master_seed, *path).generate_state(1, dtype=np.uint64)
    # 63 bits so the value fits a signed 64-bit CSV column
    return int(state[0]) & (2 ** 63 - 1)
