"""
Finite point sets and atomic measures at a dyadic base resolution.

Points are integer cell indices of the finest grid 2^{-k}ℤ^d restricted to
the unit cube, so every covering number below is an exact integer count.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from apps.common.exceptions import EmptySetError, InvalidInputError

logger = logging.getLogger(__name__)


def _unique_rows(points: np.ndarray) -> np.ndarray:
    if points.shape[0] == 0:
        return points
    return np.unique(points, axis=0)


@dataclass(frozen=True, eq=False)
class DyadicSet:
    """Unique, lexicographically sorted integer points in [0, 2^k)^d."""
    d: int
    k: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, self.d)
        if pts.ndim != 2 or pts.shape[1] != self.d:
            raise InvalidInputError(f'points must have shape (N, {self.d}), got {pts.shape}')
        if pts.size and (pts.min() < 0 or pts.max() >= (1 << self.k)):
            raise InvalidInputError(f'points must lie in [0, 2^{self.k})^{self.d}')
        pts = _unique_rows(pts)
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    @classmethod
    def from_points(cls, points: Iterable, k: int, d: Optional[int] = None) -> 'DyadicSet':
        arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=np.int64)
        if d is None:
            if arr.ndim != 2:
                raise InvalidInputError('cannot infer dimension from an empty point list')
            d = arr.shape[1]
        return cls(d, k, arr.reshape(-1, d))

    @classmethod
    def from_unit_coordinates(cls, coords: np.ndarray, k: int) -> 'DyadicSet':
        """Discretize points of [0,1)^d to the 2^{-k} grid."""
        coords = np.asarray(coords, dtype=float)
        idx = np.floor(coords * (1 << k)).astype(np.int64)
        return cls(coords.shape[1], k, np.clip(idx, 0, (1 << k) - 1))

    @classmethod
    def full_grid(cls, d: int, k: int) -> 'DyadicSet':
        side = np.arange(1 << k, dtype=np.int64)
        mesh = np.stack(np.meshgrid(*([side] * d), indexing='ij'), axis=-1)
        return cls(d, k, mesh.reshape(-1, d))

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicSet):
            return NotImplemented
        return self.d == other.d and self.k == other.k and np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash((self.d, self.k, self.points.tobytes()))

    def require_nonempty(self):
        if len(self) == 0:
            raise EmptySetError('operation requires a nonempty set')

    def subset(self, mask: np.ndarray) -> 'DyadicSet':
        return DyadicSet(self.d, self.k, self.points[np.asarray(mask, dtype=bool)])

    def union(self, other: 'DyadicSet') -> 'DyadicSet':
        if (self.d, self.k) != (other.d, other.k):
            raise InvalidInputError('cannot unite sets on different grids')
        return DyadicSet(self.d, self.k, np.vstack([self.points, other.points]))

    def is_subset_of(self, other: 'DyadicSet') -> bool:
        if len(self) == 0:
            return True
        mine = {tuple(p) for p in self.points.tolist()}
        theirs = {tuple(p) for p in other.points.tolist()}
        return mine <= theirs

    def unit_coordinates(self, centered: bool = True) -> np.ndarray:
        """Points as floats in [0,1)^d (cell centres by default)."""
        offset = 0.5 if centered else 0.0
        return (self.points.astype(float) + offset) / (1 << self.k)

    def to_text(self) -> str:
        lines = [f'{self.d} {self.k}']
        lines.extend(' '.join(str(int(v)) for v in row) for row in self.points.tolist())
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'DyadicSet':
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines:
            raise InvalidInputError('empty DyadicSet document')
        try:
            d, k = (int(v) for v in lines[0].split())
            rows = [[int(v) for v in line.split()] for line in lines[1:]]
        except ValueError as e:
            raise InvalidInputError(f'malformed DyadicSet document: {e}') from e
        if any(len(row) != d for row in rows):
            raise InvalidInputError(f'every point must have {d} coordinates')
        return cls(d, k, np.array(rows, dtype=np.int64).reshape(-1, d))


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Positive weights on the points of a DyadicSet (aligned with ``support.points``)."""
    support: DyadicSet
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(self.support):
            raise InvalidInputError('weights must align with the support points')
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise InvalidInputError('weights must be finite and strictly positive')
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)

    @classmethod
    def from_atoms(cls, points: np.ndarray, weights: np.ndarray, k: int) -> 'AtomicMeasure':
        """Aggregate possibly repeated atoms; zero-weight atoms are dropped."""
        pts = np.asarray(points, dtype=np.int64)
        w = np.asarray(weights, dtype=float).reshape(-1)
        keep = w > 0
        pts, w = pts[keep], w[keep]
        if pts.shape[0] == 0:
            raise EmptySetError('measure has no positive atoms')
        uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
        summed = np.bincount(inverse.reshape(-1), weights=w, minlength=uniq.shape[0])
        return cls(DyadicSet(pts.shape[1], k, uniq), summed)

    @classmethod
    def uniform(cls, support: DyadicSet) -> 'AtomicMeasure':
        support.require_nonempty()
        return cls(support, np.full(len(support), 1.0 / len(support)))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def d(self) -> int:
        return self.support.d

    @property
    def k(self) -> int:
        return self.support.k

    @property
    def points(self) -> np.ndarray:
        return self.support.points

    def is_probability(self, tolerance: float = 1e-9) -> bool:
        return abs(self.total_mass - 1.0) <= tolerance

    def normalized(self) -> 'AtomicMeasure':
        return AtomicMeasure(self.support, self.weights / self.total_mass)

    def restrict(self, mask: np.ndarray) -> 'AtomicMeasure':
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise EmptySetError('restriction removes every atom')
        return AtomicMeasure(self.support.subset(mask), self.weights[mask])

    def to_dict(self) -> dict:
        return {
            'd': self.d,
            'k': self.k,
            'points': self.points.tolist(),
            'weights': self.weights.tolist(),
        }
