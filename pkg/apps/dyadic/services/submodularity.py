"""
Submodularity of covering numbers and its projection corollary.

Provides:
- submodular_split: the Markov-threshold construction of A′ with its certificate
- projection_submodularity: the same inequality for coordinate projections
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np
from scipy.linalg import orth

from apps.common.exceptions import InvalidInputError, UnsupportedError

from .covering import cell_indices, count_distinct_rows, distinct_per_group
from .sets import DyadicSet
from .shapes import ShapeVector, _as_fraction

logger = logging.getLogger(__name__)


@dataclass
class SubmodularityCertificate:
    """All counts entering 𝒩_𝒫(A)𝒩_𝒬(A) ≥ (c²/4)𝒩_ℛ(A)𝒩_𝒮(A′)."""
    c: Fraction
    n_p: int
    n_q: int
    n_r: int
    n_s: int
    n_r_prime: int
    n_s_prime: int
    kept_cells: int
    total_cells: int

    @property
    def holds(self) -> bool:
        return Fraction(self.n_p * self.n_q) >= self.c ** 2 / 4 * self.n_r * self.n_s_prime

    @property
    def naive_holds(self) -> bool:
        """The same inequality with A′ replaced by A."""
        return Fraction(self.n_p * self.n_q) >= self.c ** 2 / 4 * self.n_r * self.n_s

    @property
    def mass_kept(self) -> bool:
        return Fraction(self.n_r_prime) >= (1 - self.c) * self.n_r

    @property
    def naive_ratio(self) -> float:
        """𝒩_𝒫𝒩_𝒬 / (𝒩_ℛ𝒩_𝒮) on A itself."""
        return (self.n_p * self.n_q) / (self.n_r * self.n_s)

    def to_dict(self) -> dict:
        return {
            'c': f'{self.c.numerator}/{self.c.denominator}',
            'n_p': self.n_p,
            'n_q': self.n_q,
            'n_r': self.n_r,
            'n_s': self.n_s,
            'n_r_prime': self.n_r_prime,
            'n_s_prime': self.n_s_prime,
            'kept_cells': self.kept_cells,
            'total_cells': self.total_cells,
            'holds': self.holds,
            'naive_holds': self.naive_holds,
            'mass_kept': self.mass_kept,
        }


def _check_c(c) -> Fraction:
    c = _as_fraction(c)
    if not (0 < c < 1):
        raise InvalidInputError(f'c must lie in (0, 1), got {c}')
    return c


def _split_points(points: np.ndarray, P_cells, Q_cells, R_cells, S_cells, c: Fraction):
    n_p = count_distinct_rows(P_cells)
    n_q = count_distinct_rows(Q_cells)
    n_r = count_distinct_rows(R_cells)
    n_s = count_distinct_rows(S_cells)

    s_keys, per_p = distinct_per_group(S_cells, P_cells)
    _, per_q = distinct_per_group(S_cells, Q_cells)
    _, per_r = distinct_per_group(S_cells, R_cells)

    # keep C iff 𝒩_𝒫(A∩C) ≤ 2c⁻¹ η(C) 𝒩_𝒫(A) with η(C) = 𝒩_ℛ(A∩C)/𝒩_ℛ(A), same for 𝒬
    keep = [
        np_c * c.numerator * n_r <= 2 * c.denominator * nr_c * n_p
        and nq_c * c.numerator * n_r <= 2 * c.denominator * nr_c * n_q
        for np_c, nq_c, nr_c in zip(per_p.tolist(), per_q.tolist(), per_r.tolist())
    ]
    keep = np.array(keep, dtype=bool)
    kept_keys = {tuple(row) for row in s_keys[keep].tolist()}
    mask = np.fromiter(
        (tuple(row) in kept_keys for row in S_cells.tolist()), dtype=bool, count=points.shape[0]
    )
    certificate = SubmodularityCertificate(
        c=c,
        n_p=n_p,
        n_q=n_q,
        n_r=n_r,
        n_s=n_s,
        n_r_prime=count_distinct_rows(R_cells[mask]),
        n_s_prime=int(keep.sum()),
        kept_cells=int(keep.sum()),
        total_cells=int(keep.size),
    )
    return mask, certificate


def submodular_split(A: DyadicSet, P: ShapeVector, Q: ShapeVector, c) -> tuple[DyadicSet, SubmodularityCertificate]:
    """
    Split off A′ ⊆ A with 𝒩_ℛ(A′) ≥ (1−c)𝒩_ℛ(A) and the submodular inequality.

    ℛ = 𝒫 ∨ 𝒬 and 𝒮 = 𝒫 ∧ 𝒬. A′ is A restricted to the 𝒮-cells C whose 𝒫- and
    𝒬-counts stay within 2c⁻¹η(C) times the totals, η the ℛ-count share of C.

    Raises:
        InvalidInputError: if c is outside (0, 1) or the shapes are on other grids
    """
    c = _check_c(c)
    A.require_nonempty()
    R = P.join(Q)
    S = P.meet(Q)
    pts = A.points
    mask, cert = _split_points(
        pts, cell_indices(pts, P), cell_indices(pts, Q), cell_indices(pts, R), cell_indices(pts, S), c
    )
    logger.debug(
        f'submodular_split: kept {cert.kept_cells}/{cert.total_cells} S-cells, '
        f'holds={cert.holds} naive_holds={cert.naive_holds}'
    )
    return A.subset(mask), cert


Subspace = Union[Sequence[int], np.ndarray]


def coordinate_axes(subspace: Subspace, d: int) -> tuple[int, ...]:
    """
    Coordinate axes spanned by a subspace.

    Accepts either a tuple of axis indices or a basis matrix (rows span the
    subspace). A basis whose orthogonal projector is not a 0/1 diagonal
    matrix is not a coordinate subspace.

    Raises:
        UnsupportedError: for non-coordinate subspaces
    """
    arr = np.asarray(subspace)
    if arr.ndim <= 1 and (arr.size == 0 or np.issubdtype(arr.dtype, np.integer)):
        axes = tuple(sorted({int(a) for a in arr.reshape(-1).tolist()}))
        if any(a < 0 or a >= d for a in axes):
            raise InvalidInputError(f'axes {axes} out of range for d={d}')
        return axes
    basis = np.atleast_2d(np.asarray(arr, dtype=float))
    if basis.shape[1] != d:
        raise InvalidInputError(f'basis vectors must have {d} coordinates')
    q = orth(basis.T)
    projector = q @ q.T
    diag = np.diag(projector)
    if not np.allclose(projector, np.diag(np.round(diag)), atol=1e-9):
        raise UnsupportedError('only coordinate subspaces are supported')
    return tuple(int(i) for i in np.flatnonzero(np.round(diag) == 1))


def _projection_shape(axes: tuple[int, ...], d: int, k: int) -> ShapeVector:
    exps = [Fraction(1) if i in axes else Fraction(0) for i in range(d)]
    return ShapeVector.from_coordinate_exponents(exps, k)


@dataclass
class ProjectionCertificate:
    axes_v: tuple[int, ...]
    axes_w: tuple[int, ...]
    inner: SubmodularityCertificate

    @property
    def holds(self) -> bool:
        return self.inner.holds

    def to_dict(self) -> dict:
        out = self.inner.to_dict()
        out.update({
            'V': list(self.axes_v),
            'W': list(self.axes_w),
            'card_pi_v': self.inner.n_p,
            'card_pi_w': self.inner.n_q,
            'card_pi_sum': self.inner.n_r,
            'card_pi_cap_prime': self.inner.n_s_prime,
        })
        return out


def projection_submodularity(Z: DyadicSet, V: Subspace, W: Subspace, c) -> tuple[DyadicSet, ProjectionCertificate]:
    """
    ♯π_V(Z)♯π_W(Z) ≥ (c²/4)♯π_{V+W}(Z)♯π_{V∩W}(Z′) for coordinate V, W.

    A coordinate projection π_V is the tiling that is fine along V and a
    single cell across V^⊥, so the covering-number split applies verbatim
    with 𝒫 = π_V, 𝒬 = π_W, ℛ = π_{V+W}, 𝒮 = π_{V∩W}.

    Raises:
        UnsupportedError: if V or W is not a coordinate subspace
    """
    c = _check_c(c)
    Z.require_nonempty()
    axes_v = coordinate_axes(V, Z.d)
    axes_w = coordinate_axes(W, Z.d)
    P = _projection_shape(axes_v, Z.d, Z.k)
    Q = _projection_shape(axes_w, Z.d, Z.k)
    subset, cert = submodular_split(Z, P, Q, c)
    return subset, ProjectionCertificate(axes_v, axes_w, cert)
