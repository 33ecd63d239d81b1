"""
Seeded random streams.

Every random draw in the project goes through ``stream(seed, index)`` so that a
result depends on (seed, index) only, never on scheduling or worker count.
"""

import numpy as np
from django.conf import settings


def default_seed() -> int:
    return int(getattr(settings, 'MULTISLICE_DEFAULT_SEED', 0))


def stream(seed: int, *index: int) -> np.random.Generator:
    """Independent generator for the given (seed, index...) pair."""
    seq = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.PCG64(seq))


def streams(seed: int, count: int, *prefix: int) -> list[np.random.Generator]:
    return [stream(seed, *prefix, i) for i in range(count)]


def child_seed(seed: int, *index: int) -> int:
    """Derive a 63-bit integer seed for handing to a nested experiment."""
    return int(stream(seed, *index).integers(0, 2**63 - 1))
