"""
Points of X = SL₂(ℝ)/SL₂(ℤ) as Gauss-reduced column bases.

Provides:
- XPoint: immutable point with its canonical representative
- reduce / reduce_batch: Lagrange–Gauss reduction plus a canonical choice
  among the reduced bases of the same lattice
- small_unimodular: the integer matrices with entries in {−1, 0, 1}
  relating reduced bases of one lattice
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from apps.sl2_core.services import Sl2Element
from apps.sl2_core.services.group import renormalize_batch

EQUALITY_TOLERANCE = 1e-9
_MAX_GAUSS_STEPS = 500
_KEY_DIGITS = 9


@lru_cache(maxsize=None)
def small_unimodular() -> np.ndarray:
    """All γ ∈ SL₂(ℤ) with entries in {−1, 0, 1}, identity first."""
    mats = [np.array(m, dtype=np.int64).reshape(2, 2) for m in product((-1, 0, 1), repeat=4)]
    mats = [m for m in mats if m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] == 1]
    mats.sort(key=lambda m: (not np.array_equal(m, np.eye(2, dtype=np.int64)), m.reshape(-1).tolist()))
    out = np.stack(mats)
    out.setflags(write=False)
    return out


def gauss_reduce_batch(mats: np.ndarray) -> np.ndarray:
    """
    Lagrange–Gauss reduction of the column bases of (N, 2, 2) matrices.

    Columns are only changed by integer unimodular operations, so each row
    keeps its coset. On exit |b₁| ≤ |b₂| and |⟨b₁, b₂⟩| ≤ |b₁|²/2.
    """
    out = np.array(mats, dtype=float, copy=True)
    active = np.ones(out.shape[0], dtype=bool)
    for _ in range(_MAX_GAUSS_STEPS):
        if not active.any():
            break
        b1 = out[active, :, 0]
        b2 = out[active, :, 1]
        n1 = np.einsum('ij,ij->i', b1, b1)
        mu = np.round(np.einsum('ij,ij->i', b1, b2) / n1)
        b2 = b2 - mu[:, None] * b1
        n2 = np.einsum('ij,ij->i', b2, b2)
        swap = n2 < n1 * (1 - 1e-15)
        # (b₁, b₂) ← (b₂, −b₁) keeps the determinant
        new_b1 = np.where(swap[:, None], b2, b1)
        new_b2 = np.where(swap[:, None], -b1, b2)
        idx = np.flatnonzero(active)
        out[idx, :, 0] = new_b1
        out[idx, :, 1] = new_b2
        still = swap | (mu != 0)
        active[idx[~still]] = False
    return out


def _angle_key(vectors: np.ndarray) -> np.ndarray:
    ang = np.arctan2(vectors[..., 1], vectors[..., 0]) % (2 * math.pi)
    ang = np.where(ang > 2 * math.pi - 10.0 ** -_KEY_DIGITS, 0.0, ang)
    return np.round(ang, _KEY_DIGITS)


def canonical_batch(reduced: np.ndarray) -> np.ndarray:
    """
    Pick one representative among the reduced bases B·γ, γ ∈ small_unimodular().

    Order: shortest first column, then smallest angle of the first column in
    [0, 2π), then largest ⟨b₁, b₂⟩.
    """
    gammas = small_unimodular().astype(float)
    cands = np.einsum('nij,gjk->ngik', reduced, gammas)
    b1, b2 = cands[..., :, 0], cands[..., :, 1]
    n1 = np.einsum('ngi,ngi->ng', b1, b1)
    n2 = np.einsum('ngi,ngi->ng', b2, b2)
    dot = np.einsum('ngi,ngi->ng', b1, b2)
    tol = 1e-9 * np.maximum(n1, 1.0)
    ok = (n1 <= n2 + tol) & (2 * np.abs(dot) <= n1 + tol)
    big = np.finfo(float).max
    k1 = np.where(ok, np.round(n1, _KEY_DIGITS), big)
    k2 = np.where(ok, _angle_key(b1), big)
    k3 = np.where(ok, -np.round(dot, _KEY_DIGITS), big)
    order = np.lexsort((np.broadcast_to(np.arange(gammas.shape[0]), k1.shape), k3, k2, k1), axis=-1)
    best = order[:, 0]
    return cands[np.arange(reduced.shape[0]), best]


def reduce_batch(mats: np.ndarray) -> np.ndarray:
    """Canonical representatives for (N, 2, 2) determinant-one matrices."""
    mats = np.asarray(mats, dtype=float)
    if mats.ndim == 2:
        mats = mats[None]
    if mats.shape[0] == 0:
        return mats.copy()
    return renormalize_batch(canonical_batch(gauss_reduce_batch(mats)))


def is_reduced_batch(mats: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    mats = np.asarray(mats, dtype=float)
    b1, b2 = mats[..., :, 0], mats[..., :, 1]
    n1 = np.einsum('...i,...i->...', b1, b1)
    n2 = np.einsum('...i,...i->...', b2, b2)
    dot = np.einsum('...i,...i->...', b1, b2)
    return (n1 <= n2 + tol) & (2 * np.abs(dot) <= n1 + tol)


@dataclass(frozen=True, eq=False)
class XPoint:
    """The coset gΛ, stored through its canonical reduced representative."""
    rep: Sl2Element

    @classmethod
    def from_element(cls, g: Sl2Element) -> 'XPoint':
        return reduce(g)

    @classmethod
    def base(cls) -> 'XPoint':
        """x₀ = Λ."""
        return cls(Sl2Element.identity())

    @classmethod
    def from_reduced(cls, m: np.ndarray) -> 'XPoint':
        return cls(Sl2Element.from_matrix(m, renormalize=True))

    def matrix(self) -> np.ndarray:
        return self.rep.matrix()

    def translate(self, g: Sl2Element) -> 'XPoint':
        """g·x for the left G-action."""
        return reduce(g @ self.rep)

    def shortest_vector(self) -> np.ndarray:
        return self.rep.matrix()[:, 0]

    def systole(self) -> float:
        """Length of the shortest nonzero vector of the lattice rep·ℤ²."""
        return float(np.linalg.norm(self.shortest_vector()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, XPoint):
            return NotImplemented
        return self.rep.close_to(other.rep, EQUALITY_TOLERANCE)

    def __hash__(self) -> int:
        return hash(tuple(round(v, 6) for v in self.rep.to_list()))

    def to_row(self) -> list[float]:
        return self.rep.to_list()

    def to_dict(self) -> dict:
        return {'rep': self.rep.serialize()}

    @classmethod
    def from_dict(cls, data) -> 'XPoint':
        rep = data['rep'] if isinstance(data, dict) else data
        return reduce(Sl2Element.from_dict(rep))


def reduce(g: Sl2Element) -> XPoint:
    """
    Canonical point of X for the coset gΛ.

    Idempotent, and g and g·γ give the same XPoint for every γ ∈ SL₂(ℤ).
    """
    return XPoint.from_reduced(reduce_batch(g.matrix()[None])[0])


def points_from_batch(mats: np.ndarray) -> list[XPoint]:
    return [XPoint.from_reduced(m) for m in reduce_batch(mats)]
