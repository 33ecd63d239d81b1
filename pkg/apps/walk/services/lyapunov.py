"""
Top Lyapunov exponent λ_μ = lim n⁻¹ ∫ log‖Ad g‖ dμ^{*n}(g).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from apps.common.exceptions import InvalidInputError

from .convolution import log_expansions, random_products
from .measures import WalkMeasure

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


def _half_width(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(stats.norm.ppf(0.5 + CONFIDENCE / 2) * stats.sem(values))


@dataclass
class LyapunovEstimate:
    value: float
    n: int
    N: int
    half_width: float
    value_2n: float
    half_width_2n: float

    @property
    def agrees(self) -> bool:
        """λ̂(n) and λ̂(2n) within two combined half-widths."""
        return abs(self.value - self.value_2n) <= 2 * (self.half_width + self.half_width_2n) + 1e-12

    @property
    def lower(self) -> float:
        return max(0.0, self.value_2n - self.half_width_2n)

    def to_dict(self) -> dict:
        return {
            'lambda': self.value,
            'n': self.n,
            'N': self.N,
            'half_width': self.half_width,
            'lambda_2n': self.value_2n,
            'half_width_2n': self.half_width_2n,
            'agrees': self.agrees,
        }


def sample_rates(mu: WalkMeasure, n: int, N: int, seed: int = 0, threads: Optional[int] = None) -> np.ndarray:
    """(1/n) log‖Ad(g_n⋯g_1)‖ for N trajectories."""
    mats, scale = random_products(mu, n, N, seed, threads)
    return log_expansions(mats, scale) / n


def lyapunov_estimate(mu: WalkMeasure, n: int, N: int, seed: int = 0,
                      threads: Optional[int] = None) -> LyapunovEstimate:
    """
    Mean of (1/n) log‖Ad(g_n⋯g_1)‖ at n and at 2n.

    The 2n run uses its own streams. Half-widths are normal-approximation
    95% intervals from the sample variance.

    Raises:
        InvalidInputError: if n < 1 or N < 1
    """
    if n < 1 or N < 1:
        raise InvalidInputError(f'need n >= 1 and N >= 1, got n={n}, N={N}')
    first = sample_rates(mu, n, N, seed, threads)
    second = sample_rates(mu, 2 * n, N, seed + 1, threads)
    estimate = LyapunovEstimate(
        value=float(first.mean()),
        n=n,
        N=N,
        half_width=_half_width(first),
        value_2n=float(second.mean()),
        half_width_2n=_half_width(second),
    )
    logger.debug(f'lyapunov_estimate: {mu.name} λ̂({n})={estimate.value:.6g} λ̂({2 * n})={estimate.value_2n:.6g}')
    if not estimate.agrees:
        logger.warning(f'lyapunov_estimate: λ̂ has not settled between n={n} and n={2 * n}')
    return estimate
