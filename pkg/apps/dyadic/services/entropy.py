"""
Shannon entropy of atomic measures on dyadic tilings.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from apps.common.exceptions import InvalidInputError

from .covering import cell_indices
from .sets import AtomicMeasure
from .shapes import ShapeVector, _as_fraction

PROBABILITY_TOLERANCE = 1e-9


def cell_masses(nu: AtomicMeasure, shape: ShapeVector) -> np.ndarray:
    """ν(P) for every cell P meeting the support, in lexicographic cell order."""
    if nu.d != shape.d or nu.k != shape.k:
        raise InvalidInputError('measure and shape live on different grids')
    _, inverse = np.unique(cell_indices(nu.points, shape), axis=0, return_inverse=True)
    return np.bincount(inverse.reshape(-1), weights=nu.weights)


def shannon_entropy(nu: AtomicMeasure, shape: ShapeVector) -> float:
    """
    H(ν, 𝒫) = −Σ ν(P) log ν(P), natural log.

    Raises:
        InvalidInputError: if ν is not a probability measure within 1e-9
    """
    if not nu.is_probability(PROBABILITY_TOLERANCE):
        raise InvalidInputError(f'entropy needs a probability measure, total mass is {nu.total_mass}')
    masses = cell_masses(nu, shape)
    return float(stats.entropy(masses))


@dataclass
class EntropyBounds:
    c: float
    entropy: float
    upper: float
    lower: float
    cells_for_c: int

    @property
    def holds(self) -> bool:
        return self.upper + 1e-12 >= self.entropy >= self.lower - 1e-12

    def to_dict(self) -> dict:
        return {
            'c': self.c,
            'entropy': self.entropy,
            'upper': self.upper,
            'lower': self.lower,
            'cells_for_c': self.cells_for_c,
            'holds': self.holds,
        }


def entropy_covering_bounds(nu: AtomicMeasure, shape: ShapeVector, c) -> EntropyBounds:
    """
    log 𝒩_𝒫(supp ν) ≥ H(ν,𝒫) ≥ (1−c)·inf{log 𝒩_𝒫(E) : ν(E) ≥ c}.

    The infimum is attained by the shortest prefix of cells sorted by
    decreasing mass whose total reaches c.
    """
    c_frac = _as_fraction(c)
    if not (0 < c_frac < 1):
        raise InvalidInputError(f'c must lie in (0, 1), got {c}')
    c = float(c_frac)
    masses = cell_masses(nu, shape)
    entropy = shannon_entropy(nu, shape)
    ordered = np.sort(masses)[::-1] / masses.sum()
    needed = int(np.searchsorted(np.cumsum(ordered), c - 1e-15) + 1)
    needed = min(needed, ordered.size)
    return EntropyBounds(
        c=c,
        entropy=entropy,
        upper=math.log(masses.size),
        lower=(1 - c) * math.log(needed),
        cells_for_c=needed,
    )
