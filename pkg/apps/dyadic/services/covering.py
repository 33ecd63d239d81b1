"""
Covering numbers for dyadic rectangle tilings.

Provides:
- cell_index / cell_indices: the tile containing a point
- covering_number: 𝒩_δ^𝐫(A) with per-cell counts
- restricted_covering / max_restricted_covering: counts inside sup-norm boxes
- rough_refinement_factor: max number of 𝒫-cells met inside one 𝒬-cell
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from apps.common.exceptions import EmptySetError, InvalidInputError

from .sets import DyadicSet
from .shapes import ShapeVector

logger = logging.getLogger(__name__)


def _check_compatible(A: DyadicSet, shape: ShapeVector):
    if A.d != shape.d:
        raise InvalidInputError(f'dimension mismatch: set has d={A.d}, shape has d={shape.d}')
    if A.k != shape.k:
        raise InvalidInputError(f'resolution mismatch: set has k={A.k}, shape has k={shape.k}')


def cell_indices(points: np.ndarray, shape: ShapeVector) -> np.ndarray:
    """Vectorized cell_index; floor division, so negative indices are allowed."""
    return np.right_shift(np.asarray(points, dtype=np.int64), shape.coordinate_shifts())


def cell_index(p: Sequence[int], shape: ShapeVector) -> tuple[int, ...]:
    """
    Tile of 𝒟_δ^𝐫 containing the grid point ``p``.

    Raises:
        InvalidInputError: if ``p`` has the wrong dimension
    """
    p = np.asarray(p, dtype=np.int64).reshape(-1)
    if p.shape[0] != shape.d:
        raise InvalidInputError(f'point has {p.shape[0]} coordinates, shape expects {shape.d}')
    return tuple(int(v) for v in cell_indices(p[None, :], shape)[0])


def count_distinct_rows(rows: np.ndarray) -> int:
    if rows.shape[0] == 0:
        return 0
    return int(np.unique(rows, axis=0).shape[0])


def distinct_per_group(groups: np.ndarray, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    For rows ``(group, cell)``, count the distinct cells within each group.

    Returns:
        (unique groups sorted lexicographically, distinct-cell count per group)
    """
    g = groups.shape[1]
    pairs = np.unique(np.hstack([groups, cells]), axis=0)
    keys, counts = np.unique(pairs[:, :g], axis=0, return_counts=True)
    return keys, counts


@dataclass
class CoverReport:
    """𝒩_δ^𝐫(A) together with the number of points in each occupied cell."""
    count: int
    per_cell_counts: dict[tuple[int, ...], int]
    shape: ShapeVector
    cell_volume: Fraction = field(default=Fraction(1))

    def to_dict(self) -> dict:
        return {
            'shape': self.shape.to_dict(),
            'count': self.count,
            'cell_volume': f'{self.cell_volume.numerator}/{self.cell_volume.denominator}',
            'cells': [
                {'cell': list(cell), 'points': n}
                for cell, n in sorted(self.per_cell_counts.items())
            ],
        }


def covering_number(A: DyadicSet, shape: ShapeVector) -> CoverReport:
    """
    Exact covering number of A by the tiling 𝒟_δ^𝐫.

    Raises:
        EmptySetError: if A is empty
        InvalidInputError: if the shape is on another grid
    """
    _check_compatible(A, shape)
    A.require_nonempty()
    cells, counts = np.unique(cell_indices(A.points, shape), axis=0, return_counts=True)
    per_cell = {tuple(int(v) for v in c): int(n) for c, n in zip(cells.tolist(), counts.tolist())}
    return CoverReport(len(per_cell), per_cell, shape, shape.cell_volume())


def covering_count(points: np.ndarray, shape: ShapeVector) -> int:
    """Number of occupied cells only; accepts arbitrary (possibly negative) grid points."""
    return count_distinct_rows(cell_indices(points, shape))


def _radius_in_grid_units(radius, k: int) -> Fraction:
    radius = Fraction(radius) if not isinstance(radius, Fraction) else radius
    return radius * (1 << k)


def restricted_covering(A: DyadicSet, shape: ShapeVector, center: Sequence, radius) -> int:
    """
    𝒩_δ^𝐫(A ∩ B_ρ(x)), with B_ρ(x) the sup-norm box x + [-ρ/2, ρ/2)^d.

    Args:
        A: point set
        shape: tiling used for the count
        center: box centre in finest-grid units
        radius: ρ in unit-cube length, at least 2^{-k}

    Raises:
        InvalidInputError: if ρ is below the base resolution
    """
    _check_compatible(A, shape)
    side = _radius_in_grid_units(radius, A.k)
    if side < 1:
        raise InvalidInputError(f'radius {radius} is below the resolution 2^-{A.k}')
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.shape[0] != A.d:
        raise InvalidInputError('center has the wrong dimension')
    half = float(side) / 2
    lo = center - half
    hi = center + half
    pts = A.points
    inside = np.all((pts >= lo) & (pts < hi), axis=1)
    return covering_count(pts[inside], shape)


@dataclass
class RestrictedMaximum:
    count: int
    center: tuple[float, ...]
    radius: Fraction
    offsets_tried: int


def max_restricted_covering(A: DyadicSet, shape: ShapeVector, radius) -> RestrictedMaximum:
    """
    Largest restricted covering over aligned boxes of side ρ.

    Boxes are taken from the grid ρℤ^d and its translates by ρ/2 in each
    coordinate, so every box of side ρ/2 sits inside one of the boxes tried.
    """
    _check_compatible(A, shape)
    A.require_nonempty()
    side = _radius_in_grid_units(radius, A.k)
    if side < 1 or side.denominator != 1:
        raise InvalidInputError(f'radius {radius} must be a dyadic multiple of 2^-{A.k}')
    side = int(side)
    halves = [0] if side == 1 else [0, side // 2]
    cells = cell_indices(A.points, shape)
    best = (0, (0.0,) * A.d)
    tried = 0
    for mask in range(len(halves) ** A.d):
        offset = np.array(
            [halves[(mask // len(halves) ** i) % len(halves)] for i in range(A.d)], dtype=np.int64
        )
        blocks = np.floor_divide(A.points - offset, side)
        keys, counts = distinct_per_group(blocks, cells)
        i = int(np.argmax(counts))
        tried += 1
        if counts[i] > best[0]:
            centre = tuple(float(v) for v in keys[i] * side + offset + side / 2)
            best = (int(counts[i]), centre)
    return RestrictedMaximum(best[0], best[1], Fraction(radius), tried)


def rough_refinement_factor(P: ShapeVector, Q: ShapeVector, A: DyadicSet) -> int:
    """
    max over 𝒬-cells Q meeting A of ♯𝒫(A ∩ Q).

    Raises:
        EmptySetError: if A is empty
    """
    _check_compatible(A, P)
    _check_compatible(A, Q)
    if len(A) == 0:
        raise EmptySetError('rough refinement factor of an empty set')
    _, counts = distinct_per_group(cell_indices(A.points, Q), cell_indices(A.points, P))
    return int(counts.max())
