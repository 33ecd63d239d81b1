"""
Anisotropic dyadic rectangle shapes.

Provides:
- ShapeVector: the datum (flag dims, exponents, base scale) of a tiling by
  translates of a rectangle with sides δ^{r_i}, δ = 2^{-k}
- Filtration: an increasing chain of shapes
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from apps.common.exceptions import InvalidInputError

logger = logging.getLogger(__name__)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(value).limit_denominator(1 << 20)


@dataclass(frozen=True)
class ShapeVector:
    """
    Rectangle shape 𝒟_δ^𝐫 over a coordinate flag.

    Block i of the flag spans the coordinates ``axes[o_i : o_i + dims[i]]``
    (o_i the running offset) and gets side length δ^{r_i}. In units of the
    finest grid 2^{-k}, that side is 2^{k(1 - r_i)}.
    """
    dims: tuple[int, ...]
    exponents: tuple[Fraction, ...]
    k: int
    axes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        dims = tuple(int(j) for j in self.dims)
        exponents = tuple(_as_fraction(r) for r in self.exponents)
        d = sum(dims)
        axes = tuple(int(a) for a in self.axes) if self.axes else tuple(range(d))
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'exponents', exponents)
        object.__setattr__(self, 'axes', axes)
        self._validate()

    def _validate(self):
        if len(self.dims) == 0 or len(self.dims) != len(self.exponents):
            raise InvalidInputError('dims and exponents must be nonempty and of equal length')
        if any(j < 1 for j in self.dims):
            raise InvalidInputError(f'flag dims must be positive, got {self.dims}')
        if self.d < 2:
            raise InvalidInputError(f'ambient dimension must be at least 2, got {self.d}')
        if self.k < 1:
            raise InvalidInputError(f'base scale k must be positive, got {self.k}')
        if sorted(self.axes) != list(range(self.d)):
            raise InvalidInputError(f'axes must permute range({self.d}), got {self.axes}')
        previous = Fraction(0)
        for r in self.exponents:
            if r < 0 or r > 1:
                raise InvalidInputError(f'exponents must lie in [0, 1], got {r}')
            if r < previous:
                raise InvalidInputError(f'exponents must be nondecreasing, got {self.exponents}')
            previous = r
            if (self.k * r).denominator != 1:
                raise InvalidInputError(
                    f'k={self.k} is not divisible by the denominator of exponent {r}'
                )

    @classmethod
    def from_coordinate_exponents(cls, exponents: Sequence, k: int) -> 'ShapeVector':
        """Build the flag presentation from one exponent per coordinate."""
        exps = [_as_fraction(r) for r in exponents]
        order = sorted(range(len(exps)), key=lambda i: (exps[i], i))
        dims: list[int] = []
        block_exps: list[Fraction] = []
        for i in order:
            if block_exps and block_exps[-1] == exps[i]:
                dims[-1] += 1
            else:
                dims.append(1)
                block_exps.append(exps[i])
        return cls(tuple(dims), tuple(block_exps), k, tuple(order))

    @classmethod
    def isotropic(cls, d: int, k: int, r=1) -> 'ShapeVector':
        return cls((d,), (_as_fraction(r),), k)

    @property
    def d(self) -> int:
        return sum(self.dims)

    @property
    def m(self) -> int:
        return len(self.dims) - 1

    @property
    def delta(self) -> Fraction:
        return Fraction(1, 2 ** self.k)

    def coordinate_exponents(self) -> tuple[Fraction, ...]:
        out: list[Fraction] = [Fraction(0)] * self.d
        offset = 0
        for j, r in zip(self.dims, self.exponents):
            for a in self.axes[offset:offset + j]:
                out[a] = r
            offset += j
        return tuple(out)

    def coordinate_shifts(self) -> np.ndarray:
        """log2 of the side length of each coordinate, in finest-grid units."""
        return np.array([int(self.k * (1 - r)) for r in self.coordinate_exponents()], dtype=np.int64)

    def side_lengths(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(1, 2 ** int(self.k * r)) for r in self.coordinate_exponents())

    def cell_volume(self) -> Fraction:
        """vol(R) = δ^{Σ r_i j_i}, exact."""
        total = sum((r * j for r, j in zip(self.exponents, self.dims)), Fraction(0))
        return Fraction(1, 2 ** int(self.k * total))

    def log2_cells_per(self, coarser: 'ShapeVector') -> int:
        """log2 of the number of self-cells inside one cell of ``coarser``."""
        self._check_same_grid(coarser)
        diff = coarser.coordinate_shifts() - self.coordinate_shifts()
        if np.any(diff < 0):
            raise InvalidInputError('shape does not refine the given coarser shape')
        return int(diff.sum())

    def precedes(self, other: 'ShapeVector') -> bool:
        """𝒫 ≺ 𝒬: ``other`` refines ``self``."""
        self._check_same_grid(other)
        return all(a <= b for a, b in zip(self.coordinate_exponents(), other.coordinate_exponents()))

    def refines(self, other: 'ShapeVector') -> bool:
        return other.precedes(self)

    def join(self, other: 'ShapeVector') -> 'ShapeVector':
        """𝒟^𝐫 ∨ 𝒟^𝐬 = 𝒟^{𝐫∨𝐬}: the common refinement."""
        self._check_same_grid(other)
        exps = [max(a, b) for a, b in zip(self.coordinate_exponents(), other.coordinate_exponents())]
        return ShapeVector.from_coordinate_exponents(exps, self.k)

    def meet(self, other: 'ShapeVector') -> 'ShapeVector':
        self._check_same_grid(other)
        exps = [min(a, b) for a, b in zip(self.coordinate_exponents(), other.coordinate_exponents())]
        return ShapeVector.from_coordinate_exponents(exps, self.k)

    def _check_same_grid(self, other: 'ShapeVector'):
        if other.d != self.d or other.k != self.k:
            raise InvalidInputError(
                f'shapes live on different grids: (d={self.d}, k={self.k}) vs (d={other.d}, k={other.k})'
            )

    def same_cells(self, other: 'ShapeVector') -> bool:
        return self.k == other.k and self.coordinate_exponents() == other.coordinate_exponents()

    def to_dict(self) -> dict:
        return {
            'dims': list(self.dims),
            'exponents': [f'{r.numerator}/{r.denominator}' for r in self.exponents],
            'k': self.k,
            'axes': list(self.axes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ShapeVector':
        return cls(
            dims=tuple(data['dims']),
            exponents=tuple(_as_fraction(r) for r in data['exponents']),
            k=int(data['k']),
            axes=tuple(data.get('axes') or ()),
        )

    def __str__(self) -> str:
        exps = ','.join(str(r) for r in self.exponents)
        return f'D[k={self.k}; dims={self.dims}; r=({exps}); axes={self.axes}]'


@dataclass(frozen=True)
class Filtration:
    """𝒫_1 ≺ ⋯ ≺ 𝒫_n over a common grid."""
    levels: tuple[ShapeVector, ...]

    def __post_init__(self):
        object.__setattr__(self, 'levels', tuple(self.levels))
        self.validate()

    def validate(self):
        if not self.levels:
            raise InvalidInputError('filtration needs at least one level')
        for coarse, fine in zip(self.levels, self.levels[1:]):
            if not coarse.precedes(fine):
                raise InvalidInputError(f'filtration is not increasing at {coarse} -> {fine}')

    @classmethod
    def isotropic(cls, d: int, k: int, exponents: Iterable) -> 'Filtration':
        return cls(tuple(ShapeVector.isotropic(d, k, r) for r in exponents))

    @classmethod
    def from_exponent_vectors(cls, vectors: Iterable[Sequence], k: int) -> 'Filtration':
        return cls(tuple(ShapeVector.from_coordinate_exponents(v, k) for v in vectors))

    def __len__(self) -> int:
        return len(self.levels)

    def pairs(self):
        return list(zip(self.levels, self.levels[1:]))

    @property
    def d(self) -> int:
        return self.levels[0].d

    @property
    def k(self) -> int:
        return self.levels[0].k
