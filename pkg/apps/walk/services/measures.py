"""
Step distributions on SL₂(ℝ) and empirical measures on X.

Provides:
- WalkMeasure: finitely supported μ with its inverse μ̌ and a Zariski-density flag
- EmpiricalMeasure: N equally weighted points of X with the provenance that regenerates them
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Optional, Sequence

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.modular_space.services import BallCounter, XPoint, points_from_batch, reduce_batch
from apps.sl2_core.services import Sl2Element
from apps.sl2_core.services.group import inverse_batch, renormalize_batch, rotation_batch

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12
_TRACE_TOLERANCE = 1e-9


def _commutator_trace(g: np.ndarray, h: np.ndarray) -> float:
    return float(np.trace(g @ h @ inverse_batch(g) @ inverse_batch(h)))


def zariski_dense_heuristic(atoms: np.ndarray) -> bool:
    """
    Trace tests for a non-virtually-solvable subgroup of SL₂(ℝ).

    Among the atoms and their pairwise products there must be a hyperbolic
    element (|tr| > 2) and a pair g, h with tr[g², h²] ≠ 2, i.e. no common
    fixed point or fixed pair on the projective line.
    """
    words = list(atoms) + [a @ b for a, b in product(atoms, repeat=2)]
    if not any(abs(np.trace(w)) > 2 + _TRACE_TOLERANCE for w in words):
        return False
    squares = [w @ w for w in words]
    for i, g in enumerate(squares):
        for h in squares[i + 1:]:
            if abs(_commutator_trace(g, h) - 2) > _TRACE_TOLERANCE:
                return True
    return False


@dataclass(frozen=True, eq=False)
class WalkMeasure:
    """
    μ = Σ p_i δ_{g_i}.

    ``exact`` flags atoms with integer entries; finite-orbit experiments need
    all of them.
    """
    atoms: np.ndarray
    weights: np.ndarray
    name: str = 'custom'
    exact: tuple[bool, ...] = field(default=())

    def __post_init__(self):
        atoms = renormalize_batch(np.asarray(self.atoms, dtype=float).reshape(-1, 2, 2))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] == 0:
            raise InvalidInputError('a walk measure needs at least one atom')
        if weights.shape[0] != atoms.shape[0]:
            raise InvalidInputError(f'{atoms.shape[0]} atoms but {weights.shape[0]} weights')
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise InvalidInputError('atom weights must be positive')
        if abs(weights.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise InvalidInputError(f'weights sum to {weights.sum()!r}, not 1')
        exact = tuple(bool(np.array_equal(a, np.round(a))) for a in atoms)
        object.__setattr__(self, 'atoms', atoms)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'exact', exact)

    @classmethod
    def from_elements(cls, elements: Sequence[Sl2Element], weights: Optional[Sequence[float]] = None,
                      name: str = 'custom') -> 'WalkMeasure':
        atoms = np.stack([g.matrix() for g in elements]) if elements else np.zeros((0, 2, 2))
        if weights is None:
            weights = np.full(len(elements), 1.0 / max(1, len(elements)))
        else:
            weights = np.asarray(weights, dtype=float)
            weights = weights / weights.sum()
        return cls(atoms, weights, name)

    @classmethod
    def standard_pair(cls, symmetric: bool = True) -> 'WalkMeasure':
        """Uniform on u = [[1,2],[0,1]], v = [[1,0],[2,1]] (and u⁻¹, v⁻¹ when symmetric)."""
        u = np.array([[1.0, 2.0], [0.0, 1.0]])
        v = np.array([[1.0, 0.0], [2.0, 1.0]])
        atoms = [u, v]
        if symmetric:
            atoms += [inverse_batch(u), inverse_batch(v)]
        return cls(np.stack(atoms), np.full(len(atoms), 1.0 / len(atoms)),
                   'standard-pair' if symmetric else 'standard-pair-positive')

    @classmethod
    def dirac(cls, g: Sl2Element) -> 'WalkMeasure':
        return cls(g.matrix()[None], np.ones(1), 'dirac')

    @classmethod
    def rotations(cls, angles: Sequence[float]) -> 'WalkMeasure':
        angles = np.asarray(angles, dtype=float)
        return cls(rotation_batch(angles), np.full(angles.size, 1.0 / angles.size), 'rotations')

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def integral(self) -> bool:
        return all(self.exact)

    @property
    def zariski_dense(self) -> bool:
        return zariski_dense_heuristic(self.atoms)

    @property
    def symmetric(self) -> bool:
        """μ̌ = μ up to atom order."""
        inverse = self.inverse()
        for atom, w in zip(inverse.atoms, inverse.weights):
            match = np.all(np.abs(self.atoms - atom) <= 1e-12, axis=(1, 2))
            if not np.any(match) or abs(float(self.weights[match].sum()) - w) > NORMALIZATION_TOLERANCE:
                return False
        return True

    def inverse(self) -> 'WalkMeasure':
        """μ̌, the image of μ under g ↦ g⁻¹."""
        return WalkMeasure(inverse_batch(self.atoms), self.weights.copy(), f'{self.name}-inverse')

    def sample_steps(self, rng: np.random.Generator, size) -> np.ndarray:
        """Atom indices of i.i.d. steps."""
        if self.size == 1:
            return np.zeros(size, dtype=np.int64)
        return rng.choice(self.size, size=size, p=self.weights)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'atoms': [Sl2Element.from_matrix(a).to_list() for a in self.atoms],
            'weights': self.weights.tolist(),
            'integral': self.integral,
            'zariski_dense': self.zariski_dense,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'WalkMeasure':
        """Accepts either explicit atoms or {'name': 'standard-pair' | 'standard-pair-positive'}."""
        name = data.get('name', 'custom')
        if 'atoms' not in data:
            if name == 'standard-pair':
                return cls.standard_pair()
            if name == 'standard-pair-positive':
                return cls.standard_pair(symmetric=False)
            raise InvalidInputError(f'unknown walk measure {name!r}')
        elements = [Sl2Element.from_dict(a) for a in data['atoms']]
        return cls.from_elements(elements, data.get('weights'), name)


@dataclass
class EmpiricalMeasure:
    """(1/N)Σ δ_{x_i} on X; ``provenance`` holds (μ, n, start, seed) or whatever produced it."""
    reps: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.reps = np.asarray(self.reps, dtype=float).reshape(-1, 2, 2)
        if self.reps.shape[0] < 1:
            raise InvalidInputError('an empirical measure needs at least one sample')
        self._counter: Optional[BallCounter] = None

    @classmethod
    def from_points(cls, points: Sequence[XPoint], provenance: Optional[dict] = None) -> 'EmpiricalMeasure':
        reps = np.stack([p.matrix() for p in points]) if points else np.zeros((0, 2, 2))
        return cls(reps, provenance or {'source': 'points'})

    @classmethod
    def from_matrices(cls, mats: np.ndarray, provenance: Optional[dict] = None) -> 'EmpiricalMeasure':
        return cls(reduce_batch(mats), provenance or {'source': 'matrices'})

    def __len__(self) -> int:
        return self.reps.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.full(len(self), 1.0 / len(self))

    def points(self) -> list[XPoint]:
        return points_from_batch(self.reps)

    def ball_counter(self) -> BallCounter:
        if self._counter is None:
            self._counter = BallCounter(self.reps, self.weights)
        return self._counter

    def subset(self, keep: np.ndarray, note: str) -> 'EmpiricalMeasure':
        return EmpiricalMeasure(self.reps[keep], {**self.provenance, 'subset': note})

    def distinct_count(self, digits: int = 8) -> int:
        return int(np.unique(np.round(self.reps, digits).reshape(len(self), 4), axis=0).shape[0])

    def to_dict(self) -> dict:
        return {
            'count': len(self),
            'provenance': self.provenance,
            'points': [Sl2Element.from_matrix(m).serialize() for m in self.reps],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'EmpiricalMeasure':
        points = [XPoint.from_dict(p) for p in data['points']]
        return cls.from_points(points, data.get('provenance'))
