"""
Robustness certificates for empirical measures on X.

ν is (α, ℬ_I, τ)-robust when ν = ν′ + ν″ with ν″(X) ≤ τ, ν′{inj < sup I} = 0
and ν′(B_ρ(x)) ≤ ρ^{3α} for every ρ ∈ I. On a sample the decomposition is
built by marking: every sample point inside an over-full ball centred at a
sample point, and every point with inj < ρ_max, goes to ν″.

Provides:
- robustness_certificate / RobustnessCertificate
- robust_dimension: largest α certified at one scale
- union_certificate, rescale_certificate, multiscale_count, single_to_multiscale
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.modular_space.services import injectivity_radius_batch
from apps.modular_space.services.metric import LOG_CHART_RADIUS

from .measures import EmpiricalMeasure

logger = logging.getLogger(__name__)

DIM_X = 3


def dyadic_radii(rho_min: float, rho_max: float) -> list[float]:
    """2^{-j} inside [rho_min, rho_max], largest first."""
    j_lo = math.ceil(-math.log2(rho_max) - 1e-12)
    j_hi = math.floor(-math.log2(rho_min) + 1e-12)
    return [2.0 ** -j for j in range(j_lo, j_hi + 1)]


def _validate_interval(nu: EmpiricalMeasure, alpha: float, interval: tuple[float, float]) -> list[float]:
    rho_min, rho_max = interval
    if not 0 < rho_min <= rho_max < LOG_CHART_RADIUS:
        raise InvalidInputError(f'need 0 < rho_min <= rho_max < {LOG_CHART_RADIUS}, got {interval}')
    if not 0 <= alpha <= 1:
        raise InvalidInputError(f'alpha must lie in [0, 1], got {alpha}')
    if len(nu) * rho_min ** (DIM_X * alpha) < 1:
        raise InvalidInputError(
            f'rho_min={rho_min:.3g} is below the sampling resolution of {len(nu)} points at alpha={alpha}'
        )
    radii = dyadic_radii(rho_min, rho_max)
    if not radii:
        raise InvalidInputError(f'no dyadic radius in {interval}')
    return radii


def ball_masses(nu: EmpiricalMeasure, radius: float) -> list[np.ndarray]:
    """Members of B_radius(x_i) for every sample point x_i."""
    counter = nu.ball_counter()
    return [counter.neighbours(rep, radius) for rep in nu.reps]


@dataclass
class RobustnessCertificate:
    alpha: float
    rho_min: float
    rho_max: float
    tau: float
    radii: list[float]
    removed_mass: float
    cusp_mass: float
    worst_center: Optional[list[float]]
    worst_radius: float
    worst_mass: float
    extra: dict = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.removed_mass <= self.tau + 1e-12

    @property
    def worst_ratio(self) -> float:
        """Largest ν(B_ρ(x))/ρ^{3α} before removal."""
        return self.worst_mass / self.worst_radius ** (DIM_X * self.alpha) if self.worst_radius else 0.0

    def to_dict(self) -> dict:
        return {
            'alpha': self.alpha,
            'interval': [self.rho_min, self.rho_max],
            'tau': self.tau,
            'radii': self.radii,
            'removed_mass': self.removed_mass,
            'cusp_mass': self.cusp_mass,
            'worst_ball': {'center': self.worst_center, 'radius': self.worst_radius, 'mass': self.worst_mass},
            'worst_ratio': self.worst_ratio,
            'passes': self.passes,
            **self.extra,
        }


def robustness_certificate(nu: EmpiricalMeasure, alpha: float, interval: tuple[float, float],
                           tau: float) -> RobustnessCertificate:
    """
    Certify ν as (α, ℬ_I, τ)-robust.

    Marking every over-full ball makes the certificate monotone: raising τ
    or lowering α never turns a pass into a failure.

    Args:
        nu: empirical measure
        alpha: dimension exponent in [0, 1]; balls must carry ≤ ρ^{3α}
        interval: (ρ_min, ρ_max) with ρ_max below the log-chart radius
        tau: mass allowed in the removed part

    Raises:
        InvalidInputError: if the interval is malformed or below the sampling resolution
    """
    radii = _validate_interval(nu, alpha, interval)
    w = nu.weights
    inj = injectivity_radius_batch(nu.reps)
    flagged = inj < interval[1]
    cusp_mass = float(w[flagged].sum())
    worst = (None, 0.0, 0.0, -1.0)
    for rho in radii:
        bound = rho ** (DIM_X * alpha)
        for i, members in enumerate(ball_masses(nu, rho)):
            mass = float(w[members].sum())
            ratio = mass / bound
            if ratio > worst[3]:
                worst = (nu.reps[i].reshape(-1).tolist(), rho, mass, ratio)
            if mass > bound:
                flagged[members] = True
    removed = float(w[flagged].sum())
    cert = RobustnessCertificate(
        alpha=alpha,
        rho_min=interval[0],
        rho_max=interval[1],
        tau=tau,
        radii=radii,
        removed_mass=removed,
        cusp_mass=cusp_mass,
        worst_center=worst[0],
        worst_radius=worst[1],
        worst_mass=worst[2],
    )
    logger.debug(f'robustness_certificate: alpha={alpha} removed={removed:.4g} tau={tau} passes={cert.passes}')
    return cert


def robust_dimension(nu: EmpiricalMeasure, rho: float, tau: float) -> float:
    """
    Largest α ∈ [0, 1] with ν (α, ℬ_ρ, τ)-robust; 0.0 when even α = 0 fails.

    For a threshold t the marked set is the cusp part plus every ball of
    mass > t. It grows as t drops through the distinct ball masses, so the
    smallest admissible t is found by one descending scan.
    """
    if not 0 < rho < LOG_CHART_RADIUS:
        raise InvalidInputError(f'need 0 < rho < {LOG_CHART_RADIUS}, got {rho}')
    w = nu.weights
    flagged = injectivity_radius_batch(nu.reps) < rho
    if float(w[flagged].sum()) > tau + 1e-12:
        return 0.0
    balls = ball_masses(nu, rho)
    masses = np.array([w[m].sum() for m in balls])
    levels = np.unique(masses)[::-1]
    threshold = 0.0
    for level in levels:
        candidate = flagged.copy()
        for i in np.flatnonzero(masses == level):
            candidate[balls[i]] = True
        if float(w[candidate].sum()) > tau + 1e-12:
            threshold = float(level)
            break
        flagged = candidate
    if threshold <= 0:
        return 1.0
    # need ρ^{3α} ≥ threshold
    return float(min(1.0, max(0.0, math.log(threshold) / (DIM_X * math.log(rho)))))


def union_certificate(certs: Sequence[RobustnessCertificate]) -> dict:
    """(α_j, ℬ_{I_j}, τ_j)-robust for all j gives (min α_j, ℬ_{∪I_j}, Σ τ_j)."""
    if not certs:
        raise InvalidInputError('need at least one certificate')
    return {
        'alpha': min(c.alpha for c in certs),
        'intervals': [[c.rho_min, c.rho_max] for c in certs],
        'tau': float(sum(c.tau for c in certs)),
        'passes': all(c.passes for c in certs),
    }


def rescale_certificate(alpha: float, rho: float, tau: float, r: float) -> dict:
    """(α, ℬ_ρ, τ) gives (αr, ℬ_{[ρ^{1/r}, ρ]}, τ) for r ∈ (0, 1)."""
    if not 0 < r < 1:
        raise InvalidInputError(f'rescaling needs r in (0, 1), got {r}')
    return {'alpha': alpha * r, 'interval': [rho ** (1 / r), rho], 'tau': tau}


def multiscale_count(s: float, epsilon: float) -> int:
    """⌈log s / log(1−ε)⌉ single-scale certificates cover [δ, δ^s]."""
    if not (0 < s < 1 and 0 < epsilon < 1):
        raise InvalidInputError(f'need s, epsilon in (0, 1), got s={s}, epsilon={epsilon}')
    return math.ceil(math.log(s) / math.log(1 - epsilon) - 1e-12)


def single_to_multiscale(alpha: float, delta: float, s: float, epsilon: float, tau: float) -> dict:
    """Robust at every ρ ∈ [δ, δ^s] with τ gives (α−ε, ℬ_{[δ,δ^s]}, ⌈log s/log(1−ε)⌉τ)."""
    count = multiscale_count(s, epsilon)
    return {'alpha': alpha - epsilon, 'interval': [delta, delta ** s], 'tau': count * tau, 'count': count}
