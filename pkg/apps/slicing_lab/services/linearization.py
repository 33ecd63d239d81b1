"""
Entropy linearization across a ladder of scales.

H(ν, F⁻¹𝒟_δ) is compared with Σ_i Σ_{Q ∈ 𝒟_{ρ_i}} ν(Q)·H(ν^Q, π_Q⁻¹𝒟_{δ_i}),
where ν^Q is ν|_Q rescaled to the unit cube and π_Q the orthogonal
projection with kernel ker D_{x_Q}F.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, stats

from apps.common.exceptions import InvalidInputError
from apps.common.rng import stream
from apps.dyadic.services import AtomicMeasure

from .charts import Chart, ProjectedChart

logger = logging.getLogger(__name__)

SAMPLE_PAIRS = 2000


def scale_ladder(k: int, q: int) -> list[tuple[int, int]]:
    """(a_i, b_i) with δ_i = 2^{-a_i}, ρ_i = 2^{-b_i} and a_i = b_i = k/2^i."""
    if q < 1:
        raise InvalidInputError('ladder needs at least one level')
    if k % (1 << q):
        raise InvalidInputError(f'k={k} is not divisible by 2^{q}')
    return [(k >> i, k >> i) for i in range(1, q + 1)]


def validate_ladder(k: int, ladder: Sequence[tuple[int, int]]):
    """δ ≤ δ₁ρ₁ ≤ ρ₁ ≤ δ₂ρ₂ ≤ ⋯ ≤ ρ_q ≤ 1 in exponent form."""
    if not ladder:
        raise InvalidInputError('ladder needs at least one level')
    bound = k
    for a, b in ladder:
        if a < 0 or b < 0 or a + b > bound:
            raise InvalidInputError(f'ladder step (a={a}, b={b}) breaks the chain below {bound}')
        bound = b


def _entropy(labels: np.ndarray, weights: np.ndarray) -> float:
    _, inverse = np.unique(labels, axis=0, return_inverse=True)
    return float(stats.entropy(np.bincount(inverse.reshape(-1), weights=weights)))


def distortion_constant(F: Chart, x: np.ndarray, seed: int = 0) -> float:
    """L = max(1, σ_max, 1/σ_min, second-order constant) measured on the atoms."""
    D = F.differential(x)
    sv = np.linalg.svd(D, compute_uv=False)
    L = max(1.0, float(sv.max()), float(1 / sv.min()) if sv.min() > 0 else math.inf)
    n = x.shape[0]
    if n > 1:
        rng = stream(seed, 4)
        i = rng.integers(0, n, size=SAMPLE_PAIRS)
        j = rng.integers(0, n, size=SAMPLE_PAIRS)
        keep = i != j
        i, j = i[keep], j[keep]
        dx = x[j] - x[i]
        dy = F.apply(x[j]) - F.apply(x[i])
        defect = np.linalg.norm(dy - np.einsum('nab,nb->na', D[i], dx), axis=1) / np.linalg.norm(dx, axis=1) ** 2
        L = max(L, float(defect.max(initial=0.0)))
    return L


@dataclass
class LinearizationReport:
    lhs: float
    levels: list[float]
    ladder: list[tuple[int, int]]
    out_dim: int
    L: float
    o_term: float
    extra: dict = field(default_factory=dict)

    @property
    def rhs_sum(self) -> float:
        return float(sum(self.levels))

    @property
    def deficit(self) -> float:
        return self.rhs_sum - self.lhs

    @property
    def allowance(self) -> float:
        q = len(self.ladder)
        return 3 * self.out_dim * q * math.log(self.L) + self.o_term * q

    @property
    def holds(self) -> bool:
        return self.deficit <= self.allowance

    def to_dict(self) -> dict:
        return {
            'lhs': self.lhs,
            'levels': self.levels,
            'rhs_sum': self.rhs_sum,
            'deficit': self.deficit,
            'allowance': self.allowance,
            'ladder': [list(step) for step in self.ladder],
            'out_dim': self.out_dim,
            'L': self.L,
            'holds': self.holds,
            **self.extra,
        }


def linearization_gap(nu: AtomicMeasure, F: ProjectedChart, ladder: Optional[Sequence[tuple[int, int]]] = None,
                      q: int = 2, o_term: float = 10.0, L: Optional[float] = None, seed: int = 0) -> LinearizationReport:
    """
    Measure both sides of the linearization inequality.

    Args:
        nu: probability measure on the 2^{-k} grid
        F: π∘φ with 1 ≤ out_dim < d
        ladder: (a_i, b_i) exponents; defaults to scale_ladder(k, q)
        o_term: constant in the O(q) term
        L: distortion constant; measured when omitted

    Raises:
        InvalidInputError: invalid ladder or output dimension
    """
    k = nu.k
    ladder = list(ladder) if ladder is not None else scale_ladder(k, q)
    validate_ladder(k, ladder)
    if not 1 <= F.out_dim < nu.d:
        raise InvalidInputError(f'need 1 <= out_dim < d, got out_dim={F.out_dim}, d={nu.d}')
    nu = nu.normalized()
    x = nu.support.unit_coordinates()
    w = nu.weights
    if L is None:
        L = distortion_constant(F, x, seed)

    lhs = _entropy(np.floor(F.apply(x) * (1 << k)).astype(np.int64), w)
    levels = []
    for a, b in ladder:
        cells = np.right_shift(nu.points, k - b)
        _, first, inverse = np.unique(cells, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        D = F.differential(x[first])
        total = 0.0
        for q_id in range(first.size):
            members = inverse == q_id
            mass = float(w[members].sum())
            basis = linalg.orth(D[q_id].T)
            local = (x[members] - cells[first[q_id]] / (1 << b)) * (1 << b)
            labels = np.floor((local @ basis) * (1 << a)).astype(np.int64)
            total += mass * _entropy(labels, w[members] / mass)
        levels.append(total)
    report = LinearizationReport(lhs, levels, ladder, F.out_dim, float(L), o_term)
    logger.debug(f'linearization_gap: deficit {report.deficit:.4g} vs allowance {report.allowance:.4g}')
    return report
