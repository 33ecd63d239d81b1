"""
Rational points D_Q = {gΛ : g ∈ SL₂(ℚ), den(g) ≤ Q}.

den(g) is the least common denominator of the entries. Every such coset is
(M/d)Λ for an integer matrix M with det M = d² and d ≤ Q, and the coset
only depends on the lattice Mℤ², which has a unique column Hermite basis
[[a, 0], [b, c]] with ac = d² and 0 ≤ b < c. Cosets are reduced and
deduplicated in exact integer arithmetic.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np
from django.conf import settings
from scipy.spatial import cKDTree

from apps.common.exceptions import ResourceError
from apps.common.fitting import LineFit, loglog_fit

from .metric import dist_g_batch, pair_distances
from .points import XPoint, small_unimodular

logger = logging.getLogger(__name__)

# reduced reps whose shortest vector is shorter than this lie outside the catalog window
CATALOG_MIN_SYSTOLE = Fraction(1, 2)
_EXACT_PAIRS_LIMIT = 120
_NEIGHBOURS = 12

IntBasis = tuple[tuple[int, int], tuple[int, int]]


def _dot(u, v) -> int:
    return u[0] * v[0] + u[1] * v[1]


def _round_div(num: int, den: int) -> int:
    """Nearest integer to num/den (den > 0), halves rounded up."""
    return (2 * num + den) // (2 * den)


def gauss_reduce_exact(b1: tuple[int, int], b2: tuple[int, int]) -> IntBasis:
    """Lagrange–Gauss reduction of an integer column basis, keeping orientation."""
    while True:
        n1 = _dot(b1, b1)
        mu = _round_div(_dot(b1, b2), n1)
        b2 = (b2[0] - mu * b1[0], b2[1] - mu * b1[1])
        if _dot(b2, b2) < n1:
            b1, b2 = b2, (-b1[0], -b1[1])
        else:
            return b1, b2


def _angle_key(v: tuple[int, int]):
    x, y = v
    upper = y > 0 or (y == 0 and x > 0)
    return (0 if upper else 1, 0 if y == 0 else 1, Fraction(-x, y) if y else Fraction(0))


def canonical_exact(b1: tuple[int, int], b2: tuple[int, int]) -> IntBasis:
    """The same canonical choice as the floating-point reduction, decided exactly."""
    best = None
    best_key = None
    for gamma in small_unimodular().tolist():
        (p, q), (r, s) = gamma
        c1 = (b1[0] * p + b2[0] * r, b1[1] * p + b2[1] * r)
        c2 = (b1[0] * q + b2[0] * s, b1[1] * q + b2[1] * s)
        n1, n2, dot = _dot(c1, c1), _dot(c2, c2), _dot(c1, c2)
        if n1 > n2 or 2 * abs(dot) > n1:
            continue
        key = (n1, _angle_key(c1), -dot)
        if best_key is None or key < best_key:
            best, best_key = (c1, c2), key
    return best


def _hermite_lattices(d: int) -> Iterable[IntBasis]:
    n = d * d
    for a in range(1, n + 1):
        if n % a:
            continue
        c = n // a
        for b in range(c):
            yield (a, b), (0, c)


def _exact_entries(basis: IntBasis, d: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    (a, c), (b, dd) = basis
    return Fraction(a, d), Fraction(b, d), Fraction(c, d), Fraction(dd, d)


@dataclass
class RationalPointCatalog:
    """Distinct points of D_Q inside the catalog window, with exact representatives."""
    Q: int
    points: list[XPoint]
    exact: list[tuple[Fraction, Fraction, Fraction, Fraction]]
    min_separation: float
    closest_pair: Optional[tuple[int, int]] = field(default=None)

    def __len__(self) -> int:
        return len(self.points)

    def reps(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 2, 2))
        return np.stack([p.matrix() for p in self.points])

    def to_dict(self) -> dict:
        return {
            'Q': self.Q,
            'count': len(self.points),
            'min_separation': self.min_separation,
            'closest_pair': list(self.closest_pair) if self.closest_pair else None,
            'window_min_systole': f'{CATALOG_MIN_SYSTOLE.numerator}/{CATALOG_MIN_SYSTOLE.denominator}',
            'points': [[f'{v.numerator}/{v.denominator}' for v in entries] for entries in self.exact],
        }


def _q_max() -> int:
    return int(getattr(settings, 'MULTISLICE_RATIONAL_Q_MAX', 64))


def enumerate_cosets(Q: int) -> list[tuple[Fraction, Fraction, Fraction, Fraction]]:
    """Exact canonical representatives of D_Q inside the window, sorted."""
    seen: set[tuple[Fraction, ...]] = set()
    window = CATALOG_MIN_SYSTOLE ** 2
    for d in range(1, Q + 1):
        for b1, b2 in _hermite_lattices(d):
            r1, r2 = canonical_exact(*gauss_reduce_exact(b1, b2))
            if Fraction(_dot(r1, r1), d * d) < window:
                continue
            seen.add(_exact_entries((r1, r2), d))
    return sorted(seen)


def _min_separation(points: list[XPoint]) -> tuple[float, Optional[tuple[int, int]]]:
    n = len(points)
    if n < 2:
        return float('inf'), None
    reps = np.stack([p.matrix() for p in points])
    if n <= _EXACT_PAIRS_LIMIT:
        i_idx, j_idx = np.triu_indices(n, k=1)
        values, _ = pair_distances(reps[i_idx], reps[j_idx])
    else:
        # nearest alternative bases rep_j·γ in matrix entries, confirmed with the local distance
        gammas = small_unimodular().astype(float)
        alts = np.einsum('nij,gjk->ngik', reps, gammas).reshape(-1, 2, 2)
        owner = np.repeat(np.arange(n), gammas.shape[0])
        tree = cKDTree(alts.reshape(-1, 4))
        k = min(_NEIGHBOURS * gammas.shape[0], alts.shape[0])
        _, idx = tree.query(reps.reshape(-1, 4), k=k)
        i_idx = np.repeat(np.arange(n), k)
        j_alt = idx.reshape(-1)
        j_idx = owner[j_alt]
        keep = j_idx != i_idx
        i_idx, j_alt, j_idx = i_idx[keep], j_alt[keep], j_idx[keep]
        values, _ = dist_g_batch(reps[i_idx], alts[j_alt], local_only=True)
    best = int(np.argmin(values))
    if not np.isfinite(values[best]):
        return float('inf'), None
    pair = tuple(sorted((int(i_idx[best]), int(j_idx[best]))))
    return float(values[best]), pair


def rational_points(Q: int) -> RationalPointCatalog:
    """
    Catalog of D_Q within the window {systole ≥ 1/2}.

    Raises:
        ResourceError: if Q exceeds MULTISLICE_RATIONAL_Q_MAX
    """
    if Q < 1:
        raise ResourceError(f'Q must be a positive integer, got {Q}')
    if Q > _q_max():
        raise ResourceError(f'Q = {Q} exceeds the enumeration cap {_q_max()}')
    exact = enumerate_cosets(Q)
    points = [XPoint.from_reduced(np.array([[float(e[0]), float(e[1])], [float(e[2]), float(e[3])]])) for e in exact]
    separation, pair = _min_separation(points)
    logger.info(f'rational_points: Q={Q} count={len(points)} min_separation={separation:.6g}')
    return RationalPointCatalog(Q=Q, points=points, exact=exact, min_separation=separation, closest_pair=pair)


@dataclass
class SeparationProfile:
    qs: list[int]
    separations: list[float]
    counts: list[int]
    fit: LineFit

    @property
    def exponent(self) -> float:
        """M with min_separation ≈ Q^{−M}."""
        return -self.fit.slope

    def to_dict(self) -> dict:
        return {
            'Q': self.qs,
            'min_separation': self.separations,
            'count': self.counts,
            'fit': self.fit.to_dict(),
            'exponent': self.exponent,
        }


def separation_profile(qs: Iterable[int]) -> SeparationProfile:
    """log min_separation against log Q over the given denominator bounds."""
    qs = sorted(set(int(q) for q in qs))
    catalogs = [rational_points(q) for q in qs]
    seps = [c.min_separation for c in catalogs]
    fit = loglog_fit(qs, [s if np.isfinite(s) else np.nan for s in seps])
    logger.debug(f'separation_profile: slope={fit.slope:.4g} over Q={qs}')
    return SeparationProfile(qs=qs, separations=seps, counts=[len(c) for c in catalogs], fit=fit)
