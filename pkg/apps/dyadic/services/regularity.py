"""
Regularity between nested tilings and the dyadic pigeonhole regularization.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from apps.common.exceptions import EmptySetError, InvalidInputError

from .covering import cell_indices, distinct_per_group
from .sets import DyadicSet
from .shapes import Filtration, ShapeVector

logger = logging.getLogger(__name__)


@dataclass
class PairRegularity:
    level: int
    regular: bool
    coarse_cells: int
    fine_cells: int
    min_count: int
    max_count: int
    offending_cell: Optional[tuple[int, ...]] = None

    def to_dict(self) -> dict:
        return {
            'level': self.level,
            'regular': self.regular,
            'coarse_cells': self.coarse_cells,
            'fine_cells': self.fine_cells,
            'min_count': self.min_count,
            'max_count': self.max_count,
            'offending_cell': list(self.offending_cell) if self.offending_cell else None,
        }


@dataclass
class RegularityReport:
    pairs: list[PairRegularity] = field(default_factory=list)

    @property
    def regular(self) -> bool:
        return all(p.regular for p in self.pairs)

    def first_failure(self) -> Optional[PairRegularity]:
        return next((p for p in self.pairs if not p.regular), None)

    def to_dict(self) -> dict:
        return {'regular': self.regular, 'pairs': [p.to_dict() for p in self.pairs]}


def _pair_counts(points: np.ndarray, coarse: ShapeVector, fine: ShapeVector):
    return distinct_per_group(cell_indices(points, coarse), cell_indices(points, fine))


def is_regular(A: DyadicSet, filtration: Filtration) -> RegularityReport:
    """
    Check 𝒩_𝒬(A ∩ P) = 𝒩_𝒬(A)/𝒩_𝒫(A) for every consecutive pair 𝒫 ≺ 𝒬.

    The offending cell, when present, is the lexicographically first 𝒫-cell
    whose count differs from the largest one.
    """
    report = RegularityReport()
    if len(A) == 0:
        return report
    for level, (coarse, fine) in enumerate(filtration.pairs(), start=1):
        keys, counts = _pair_counts(A.points, coarse, fine)
        lo, hi = int(counts.min()), int(counts.max())
        offending = None
        if lo != hi:
            idx = int(np.flatnonzero(counts != hi)[0])
            offending = tuple(int(v) for v in keys[idx])
        report.pairs.append(PairRegularity(
            level=level,
            regular=lo == hi,
            coarse_cells=int(keys.shape[0]),
            fine_cells=int(counts.sum()),
            min_count=lo,
            max_count=hi,
            offending_cell=offending,
        ))
    return report


@dataclass
class RegularizationStep:
    level: int
    refinement_log2: int
    chosen_class: int
    kept_coarse_cells: int
    trimmed_to: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RegularizationResult:
    subset: DyadicSet
    finest_before: int
    finest_after: int
    denominator: int
    steps: list[RegularizationStep] = field(default_factory=list)

    @property
    def bound_holds(self) -> bool:
        """𝒩_{𝒫_n}(A′)·Π 2(1 + log2 M_i) ≥ 𝒩_{𝒫_n}(A), exact."""
        return self.finest_after * self.denominator >= self.finest_before

    def to_dict(self) -> dict:
        return {
            'finest_before': self.finest_before,
            'finest_after': self.finest_after,
            'denominator': self.denominator,
            'bound_holds': self.bound_holds,
            'steps': [s.to_dict() for s in self.steps],
        }


def _regularize_pair(points: np.ndarray, coarse: ShapeVector, fine: ShapeVector, level: int):
    """Keep one dyadic class of coarse cells and trim each to the class minimum."""
    coarse_of = cell_indices(points, coarse)
    fine_of = cell_indices(points, fine)
    pairs = np.unique(np.hstack([coarse_of, fine_of]), axis=0)
    d = coarse_of.shape[1]
    coarse_keys, inverse, counts = np.unique(
        pairs[:, :d], axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    classes = np.floor(np.log2(counts)).astype(np.int64)

    best_class, best_retained = -1, -1
    for j in np.unique(classes).tolist():
        members = counts[classes == j]
        retained = int(members.min()) * int(members.size)
        if retained > best_retained:
            best_class, best_retained = j, retained
    chosen = classes == best_class
    keep_to = int(counts[chosen].min())

    # pairs are lexicographically sorted, so within a coarse cell the first
    # keep_to fine cells are the lexicographically smallest ones
    rank = np.arange(pairs.shape[0]) - np.concatenate([[0], np.cumsum(counts)[:-1]])[inverse]
    kept_pairs = pairs[chosen[inverse] & (rank < keep_to)]

    point_pairs = np.hstack([coarse_of, fine_of])
    kept_view = {tuple(row) for row in kept_pairs.tolist()}
    mask = np.fromiter((tuple(row) in kept_view for row in point_pairs.tolist()), dtype=bool, count=points.shape[0])
    step = RegularizationStep(
        level=level,
        refinement_log2=fine.log2_cells_per(coarse),
        chosen_class=int(best_class),
        kept_coarse_cells=int(chosen.sum()),
        trimmed_to=keep_to,
    )
    logger.debug(
        f'regularize level {level}: class {best_class} keeps {step.kept_coarse_cells} '
        f'of {coarse_keys.shape[0]} cells at {keep_to} fine cells each'
    )
    return mask, step


def regularize_report(A: DyadicSet, filtration: Filtration) -> RegularizationResult:
    """
    Regularize A along the filtration, finest pair first.

    Each step removes whole coarse cells outside the chosen class and whole
    fine cells beyond the class minimum, so regularity established at finer
    pairs is preserved and A′ is a union of finest cells of A.

    Raises:
        EmptySetError: if A is empty
        InvalidInputError: if the filtration is shorter than two levels
    """
    if len(A) == 0:
        raise EmptySetError('cannot regularize an empty set')
    if len(filtration) < 2:
        raise InvalidInputError('regularization needs a filtration of length at least 2')
    finest = filtration.levels[-1]
    before = int(np.unique(cell_indices(A.points, finest), axis=0).shape[0])

    points = A.points
    steps: list[RegularizationStep] = []
    denominator = 1
    for level in range(len(filtration) - 1, 0, -1):
        coarse, fine = filtration.levels[level - 1], filtration.levels[level]
        mask, step = _regularize_pair(points, coarse, fine, level)
        points = points[mask]
        steps.append(step)
        denominator *= 2 * (1 + step.refinement_log2)

    subset = DyadicSet(A.d, A.k, points)
    after = int(np.unique(cell_indices(subset.points, finest), axis=0).shape[0])
    return RegularizationResult(subset, before, after, denominator, list(reversed(steps)))


def regularize(A: DyadicSet, filtration: Filtration) -> DyadicSet:
    return regularize_report(A, filtration).subset
