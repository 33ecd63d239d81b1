"""
SL₂(ℝ) value types.

Provides:
- Sl2Element: a 2×2 real matrix of determinant 1
- Sl2Vector: coordinates (r, s, t) of rE + sH + tF in 𝔰𝔩₂
- KAK: Cartan data θ·a^t·θ′ with a^t = exp((t/2)H)
- Array helpers for batches of shape (N, 2, 2)
"""

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from apps.common.exceptions import InvalidInputError

DET_TOLERANCE = 1e-10

E = np.array([[0.0, 1.0], [0.0, 0.0]])
H = np.array([[1.0, 0.0], [0.0, -1.0]])
F = np.array([[0.0, 0.0], [1.0, 0.0]])
IDENTITY = np.eye(2)


def renormalize_batch(mats: np.ndarray) -> np.ndarray:
    """Divide each matrix by sqrt(det) so determinants return to 1."""
    mats = np.asarray(mats, dtype=float)
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    return mats / np.sqrt(det)[..., None, None]


def inverse_batch(mats: np.ndarray) -> np.ndarray:
    """Inverse of determinant-one matrices: [[d, -b], [-c, a]]."""
    out = np.empty_like(mats)
    out[..., 0, 0] = mats[..., 1, 1]
    out[..., 1, 1] = mats[..., 0, 0]
    out[..., 0, 1] = -mats[..., 0, 1]
    out[..., 1, 0] = -mats[..., 1, 0]
    return out


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_batch(thetas: np.ndarray) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    c, s = np.cos(thetas), np.sin(thetas)
    return np.stack([np.stack([c, -s], axis=-1), np.stack([s, c], axis=-1)], axis=-2)


def a_t_matrix(t: float) -> np.ndarray:
    """a^t = exp((t/2)H), so Ad(a^t) = diag(e^t, 1, e^{-t})."""
    return np.diag([math.exp(t / 2), math.exp(-t / 2)])


@dataclass(frozen=True)
class Sl2Element:
    """Row-major 2×2 matrix [[a, b], [c, d]] with ad − bc = 1."""
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ('a', 'b', 'c', 'd'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidInputError(f'matrix entry {name} is not finite')
            object.__setattr__(self, name, value)
        if abs(self.det() - 1.0) > DET_TOLERANCE:
            raise InvalidInputError(f'determinant {self.det()!r} is not 1')

    @classmethod
    def from_matrix(cls, m, renormalize: bool = False) -> 'Sl2Element':
        m = np.asarray(m, dtype=float).reshape(2, 2)
        if renormalize:
            m = renormalize_batch(m)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> 'Sl2Element':
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, theta: float) -> 'Sl2Element':
        return cls.from_matrix(rotation_matrix(theta))

    @classmethod
    def diagonal(cls, lam: float) -> 'Sl2Element':
        return cls(lam, 0.0, 0.0, 1.0 / lam)

    @classmethod
    def a_t(cls, t: float) -> 'Sl2Element':
        return cls.from_matrix(a_t_matrix(t))

    @classmethod
    def upper(cls, r: float) -> 'Sl2Element':
        return cls(1.0, r, 0.0, 1.0)

    @classmethod
    def lower(cls, t: float) -> 'Sl2Element':
        return cls(1.0, 0.0, t, 1.0)

    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def inverse(self) -> 'Sl2Element':
        return Sl2Element(self.d, -self.b, -self.c, self.a)

    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: 'Sl2Element') -> 'Sl2Element':
        return Sl2Element.from_matrix(self.matrix() @ other.matrix(), renormalize=True)

    def norm(self) -> float:
        """Operator norm (largest singular value)."""
        return float(np.linalg.norm(self.matrix(), 2))

    def close_to(self, other: 'Sl2Element', tolerance: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.matrix() - other.matrix())) <= tolerance)

    def to_list(self) -> list[float]:
        return [self.a, self.b, self.c, self.d]

    def serialize(self) -> str:
        """Four row-major entries at 17 significant digits."""
        return ' '.join(format(v, '.17g') for v in self.to_list())

    @classmethod
    def parse(cls, text: str) -> 'Sl2Element':
        try:
            values = [float(v) for v in text.replace(',', ' ').split()]
        except ValueError as e:
            raise InvalidInputError(f'malformed matrix: {text!r}') from e
        if len(values) != 4:
            raise InvalidInputError(f'expected four entries, got {len(values)}')
        return cls(*values)

    def to_dict(self) -> dict:
        return {'a': self.a, 'b': self.b, 'c': self.c, 'd': self.d}

    @classmethod
    def from_dict(cls, data) -> 'Sl2Element':
        if isinstance(data, dict):
            return cls(data['a'], data['b'], data['c'], data['d'])
        if isinstance(data, str):
            return cls.parse(data)
        return cls.from_matrix(np.asarray(data, dtype=float).reshape(2, 2))


@dataclass(frozen=True)
class Sl2Vector:
    """rE + sH + tF; the basis (E, H, F) is declared orthonormal."""
    r: float
    s: float
    t: float

    @classmethod
    def from_array(cls, values: Iterable[float]) -> 'Sl2Vector':
        r, s, t = (float(v) for v in values)
        return cls(r, s, t)

    @classmethod
    def from_matrix(cls, X) -> 'Sl2Vector':
        X = np.asarray(X, dtype=float)
        return cls(X[0, 1], (X[0, 0] - X[1, 1]) / 2, X[1, 0])

    def to_array(self) -> np.ndarray:
        return np.array([self.r, self.s, self.t])

    def matrix(self) -> np.ndarray:
        return np.array([[self.s, self.r], [self.t, -self.s]])

    def norm(self) -> float:
        return math.sqrt(self.r ** 2 + self.s ** 2 + self.t ** 2)

    def __add__(self, other: 'Sl2Vector') -> 'Sl2Vector':
        return Sl2Vector(self.r + other.r, self.s + other.s, self.t + other.t)

    def __sub__(self, other: 'Sl2Vector') -> 'Sl2Vector':
        return Sl2Vector(self.r - other.r, self.s - other.s, self.t - other.t)

    def scale(self, factor: float) -> 'Sl2Vector':
        return Sl2Vector(self.r * factor, self.s * factor, self.t * factor)


def vectors_to_matrices(v: np.ndarray) -> np.ndarray:
    """(N, 3) coordinates to (N, 2, 2) traceless matrices."""
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape[:-1] + (2, 2))
    out[..., 0, 0] = v[..., 1]
    out[..., 0, 1] = v[..., 0]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 1] = -v[..., 1]
    return out


def matrices_to_vectors(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.stack([X[..., 0, 1], (X[..., 0, 0] - X[..., 1, 1]) / 2, X[..., 1, 0]], axis=-1)


@dataclass(frozen=True)
class KAK:
    """g = θ · a^t · θ′ with rotations θ, θ′ given by their angles and t ≥ 0."""
    theta: float
    t: float
    theta_prime: float

    def reconstruct(self) -> Sl2Element:
        m = rotation_matrix(self.theta) @ a_t_matrix(self.t) @ rotation_matrix(self.theta_prime)
        return Sl2Element.from_matrix(m, renormalize=True)

    def to_dict(self) -> dict:
        return {'theta': self.theta, 't': self.t, 'theta_prime': self.theta_prime}
