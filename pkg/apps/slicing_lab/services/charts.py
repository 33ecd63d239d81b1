"""
Random chart families φ_θ : ℝ^d → ℝ^d.

Provides:
- Chart and its kinds: IsometryChart, AffineChart, Sl2Chart, FunctionChart,
  ProjectedChart (F = π∘φ for the linearization check)
- ChartFamily: a seeded sampler of charts distributed per σ on Θ
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from apps.common.exceptions import InvalidInputError
from apps.common.rng import stream
from apps.sl2_core.services import exp_batch
from apps.sl2_core.services.charts import VARIANTS, psi_inverse_batch
from apps.sl2_core.services.group import rotation_matrix

logger = logging.getLogger(__name__)

FINITE_DIFFERENCE_STEP = 1e-6


def numeric_jacobian(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                     step: float = FINITE_DIFFERENCE_STEP) -> np.ndarray:
    """Central differences; (N, d) points give (N, d_out, d)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[j] = step
        cols.append((func(x + e) - func(x - e)) / (2 * step))
    return np.stack(cols, axis=-1)


class Chart:
    """A differentiable map on a neighbourhood of the unit cube."""
    kind = 'chart'
    d: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def differential(self, x: np.ndarray) -> np.ndarray:
        return numeric_jacobian(self.apply, np.atleast_2d(x))

    def defined(self, x: np.ndarray) -> np.ndarray:
        return np.all(np.isfinite(self.apply(np.atleast_2d(x))), axis=1)

    def to_dict(self) -> dict:
        return {'kind': self.kind}


@dataclass
class IsometryChart(Chart):
    """x ↦ O(x − c) + c for an orthogonal O, c the cube centre by default."""
    rotation: np.ndarray
    center: Optional[np.ndarray] = None
    kind = 'isometry'

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.d = self.rotation.shape[0]
        if not np.allclose(self.rotation @ self.rotation.T, np.eye(self.d), atol=1e-9):
            raise InvalidInputError('isometry chart needs an orthogonal matrix')
        self.center = np.full(self.d, 0.5) if self.center is None else np.asarray(self.center, dtype=float)

    def apply(self, x):
        return (np.atleast_2d(x) - self.center) @ self.rotation.T + self.center

    def differential(self, x):
        n = np.atleast_2d(x).shape[0]
        return np.broadcast_to(self.rotation, (n, self.d, self.d)).copy()

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.rotation, compute_uv=False)

    def to_dict(self):
        return {'kind': self.kind, 'rotation': self.rotation.tolist()}


@dataclass
class AffineChart(Chart):
    """x ↦ Mx + b."""
    matrix: np.ndarray
    offset: Optional[np.ndarray] = None
    kind = 'affine'

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.d = self.matrix.shape[1]
        out = self.matrix.shape[0]
        self.offset = np.zeros(out) if self.offset is None else np.asarray(self.offset, dtype=float)

    def apply(self, x):
        return np.atleast_2d(x) @ self.matrix.T + self.offset

    def differential(self, x):
        n = np.atleast_2d(x).shape[0]
        return np.broadcast_to(self.matrix, (n,) + self.matrix.shape).copy()

    def to_dict(self):
        return {'kind': self.kind, 'matrix': self.matrix.tolist(), 'offset': self.offset.tolist()}


@dataclass
class Sl2Chart(Chart):
    """
    φ_θ read on Lie coordinates: x ↦ ψ⁻¹(θ⁻¹ exp(v)) with v = scale·(x − center).

    The 'conjugate' variant uses θ⁻¹ exp(v) θ. Points whose image has a
    nonpositive lower-right entry are outside the chart and map to NaN.
    """
    theta: float
    variant: str = 'statement'
    scale: float = 1.0
    center: float = 0.5
    kind = 'sl2'

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f'unknown chart variant {self.variant!r}')
        self.d = 3
        self._rot = rotation_matrix(float(self.theta))

    def lie_coordinates(self, x):
        return self.scale * (np.atleast_2d(x) - self.center)

    def apply_to_group(self, mats: np.ndarray) -> np.ndarray:
        h = self._rot.T @ np.asarray(mats, dtype=float)
        if self.variant == 'conjugate':
            h = h @ self._rot
        coords, _ = psi_inverse_batch(h)
        return coords

    def apply(self, x):
        return self.apply_to_group(exp_batch(self.lie_coordinates(x)))

    def to_dict(self):
        return {'kind': self.kind, 'theta': self.theta, 'variant': self.variant, 'scale': self.scale}


@dataclass
class FunctionChart(Chart):
    """An arbitrary vectorized map, with a numerical differential unless one is given."""
    func: Callable[[np.ndarray], np.ndarray]
    d: int
    name: str = 'function'
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kind = 'function'

    def apply(self, x):
        return np.asarray(self.func(np.atleast_2d(np.asarray(x, dtype=float))), dtype=float)

    def differential(self, x):
        if self.jacobian is not None:
            return np.asarray(self.jacobian(np.atleast_2d(x)), dtype=float)
        return super().differential(x)

    def to_dict(self):
        return {'kind': self.kind, 'name': self.name}


@dataclass
class ProjectedChart(Chart):
    """F = π∘φ keeping the listed output coordinates."""
    chart: Chart
    keep: tuple[int, ...]
    kind = 'projected'

    def __post_init__(self):
        self.keep = tuple(int(i) for i in self.keep)
        self.d = self.chart.d
        if not self.keep:
            raise InvalidInputError('projected chart must keep at least one coordinate')

    @property
    def out_dim(self) -> int:
        return len(self.keep)

    def apply(self, x):
        return self.chart.apply(x)[:, list(self.keep)]

    def differential(self, x):
        return self.chart.differential(x)[:, list(self.keep), :]

    def to_dict(self):
        return {'kind': self.kind, 'keep': list(self.keep), 'chart': self.chart.to_dict()}


def fold_chart(d: int = 2, axis: int = 0) -> FunctionChart:
    """x_axis ↦ |x_axis − 1/2|: folds the cube onto itself, so it is not injective."""
    def fold(x):
        y = np.array(x, dtype=float)
        y[:, axis] = np.abs(y[:, axis] - 0.5)
        return y
    return FunctionChart(fold, d, name=f'fold-axis-{axis}')


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 2:
        return rotation_matrix(float(rng.uniform(0.0, 2 * math.pi)))
    if d == 3:
        return Rotation.random(random_state=rng).as_matrix()
    raise InvalidInputError(f'random rotations are implemented for d in (2, 3), got {d}')


@dataclass
class ChartFamily:
    """Charts φ_θ with θ drawn from σ; draw i uses the stream (seed, 1, i)."""
    kind: str
    d: int
    sampler: Callable[[np.random.Generator], Chart]
    description: dict = field(default_factory=dict)

    def sample(self, count: int, seed: int) -> list[Chart]:
        if count < 1:
            raise InvalidInputError('need at least one chart')
        return [self.sampler(stream(seed, 1, i)) for i in range(count)]

    @classmethod
    def rotations(cls, d: int) -> 'ChartFamily':
        """σ = Haar measure on SO(d)."""
        return cls('isometry', d, lambda rng: IsometryChart(random_rotation(d, rng)),
                   {'kind': 'rotations', 'd': d})

    @classmethod
    def fixed(cls, chart: Chart) -> 'ChartFamily':
        """σ = a Dirac mass."""
        return cls(chart.kind, chart.d, lambda rng: chart, {'kind': 'fixed', 'chart': chart.to_dict()})

    @classmethod
    def rotation_dirac(cls, angle: float) -> 'ChartFamily':
        family = cls.fixed(IsometryChart(rotation_matrix(angle)))
        family.description = {'kind': 'rotation-dirac', 'angle': angle}
        return family

    @classmethod
    def sl2(cls, distribution: str = 'uniform', low: float = -math.pi, high: float = math.pi,
            theta: float = 0.0, variant: str = 'statement', scale: float = 1.0) -> 'ChartFamily':
        """σ on K = SO(2): uniform on [low, high) or a Dirac mass at theta."""
        if distribution == 'uniform':
            def sampler(rng):
                return Sl2Chart(float(rng.uniform(low, high)), variant, scale)
        elif distribution == 'dirac':
            def sampler(rng):
                return Sl2Chart(theta, variant, scale)
        else:
            raise InvalidInputError(f'unknown distribution {distribution!r}')
        return cls('sl2', 3, sampler, {
            'kind': 'sl2', 'distribution': distribution, 'low': low, 'high': high,
            'theta': theta, 'variant': variant, 'scale': scale,
        })

    @classmethod
    def affine(cls, matrices: Sequence, offsets: Optional[Sequence] = None) -> 'ChartFamily':
        """σ uniform on a finite list of affine maps."""
        mats = [np.asarray(m, dtype=float) for m in matrices]
        offs = [None] * len(mats) if offsets is None else [np.asarray(o, dtype=float) for o in offsets]
        if not mats:
            raise InvalidInputError('affine family needs at least one matrix')

        def sampler(rng):
            i = int(rng.integers(len(mats)))
            return AffineChart(mats[i], offs[i])
        return cls('affine', mats[0].shape[1], sampler, {
            'kind': 'affine', 'matrices': [m.tolist() for m in mats],
        })

    @classmethod
    def from_dict(cls, data: dict) -> 'ChartFamily':
        kind = data.get('kind', 'rotations')
        if kind == 'rotations':
            return cls.rotations(int(data.get('d', 2)))
        if kind == 'rotation-dirac':
            return cls.rotation_dirac(float(data.get('angle', 0.0)))
        if kind == 'sl2':
            return cls.sl2(
                distribution=data.get('distribution', 'uniform'),
                low=float(data.get('low', -math.pi)),
                high=float(data.get('high', math.pi)),
                theta=float(data.get('theta', 0.0)),
                variant=data.get('variant', 'statement'),
                scale=float(data.get('scale', 1.0)),
            )
        if kind == 'affine':
            return cls.affine(data['matrices'], data.get('offsets'))
        if kind == 'fold':
            return cls.fixed(fold_chart(int(data.get('d', 2)), int(data.get('axis', 0))))
        raise InvalidInputError(f'unknown chart family {kind!r}')

    def to_dict(self) -> dict:
        return dict(self.description)
