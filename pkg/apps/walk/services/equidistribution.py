"""
Equidistribution of μ^{*n}*δ_x towards the Haar measure m_X.

Provides:
- equidistribution_experiment: 𝒲_β lower bounds along n, against a Haar
  sample or a long-run sample of the walk itself, with a Monte-Carlo floor
- effective_time_bound: n ≥ A log R + A·max(|log dist(x, W_R^A)|, dist(x, x₀))
- diophantine_generic: dist(x, W_R) ≥ R^{−D}/D over a grid of R

At desk scale the rational-point catalog D_R stands in for the finite-orbit
set W_{μ,R}.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from django.conf import settings

from apps.common.exceptions import InvalidInputError
from apps.common.fitting import LineFit, line_fit
from apps.common.rng import child_seed, stream
from apps.modular_space.services import XPoint, distance_to_base, distance_to_set, haar_sample_batch, rational_points

from .convolution import convolve_sample, propagate
from .measures import EmpiricalMeasure, WalkMeasure
from .wasserstein import DEFAULT_DICTIONARY_SIZE, wasserstein_estimate

logger = logging.getLogger(__name__)

REFERENCES = ('haar', 'self')
DECAY_RATIO = 0.5
FLOOR_FACTOR = 3.0
_REFERENCE_STREAM = 31
_FLOOR_STREAM = 32


def haar_measure(N: int, seed: int, index: int = _REFERENCE_STREAM) -> EmpiricalMeasure:
    reps = haar_sample_batch(stream(seed, index), N)
    return EmpiricalMeasure(reps, {'source': 'haar', 'N': N, 'seed': seed, 'stream': index})


@dataclass
class DecayCurve:
    rows: list[dict]
    floor: float
    reference: str
    fit: LineFit
    extra: dict = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [row['estimate'] for row in self.rows]

    @property
    def decays(self) -> bool:
        return self.values[-1] < DECAY_RATIO * self.values[0]

    @property
    def reaches_floor(self) -> bool:
        return self.values[-1] <= FLOOR_FACTOR * self.floor

    @property
    def onset(self) -> Optional[int]:
        """First n whose estimate has halved relative to n = 0."""
        for row in self.rows:
            if row['estimate'] <= DECAY_RATIO * self.values[0]:
                return row['n']
        return None

    @property
    def rate(self) -> float:
        return -self.fit.slope

    def csv_rows(self) -> list[list]:
        return [[row['n'], row['estimate'], self.floor] for row in self.rows]

    def to_dict(self) -> dict:
        return {
            'reference': self.reference,
            'floor': self.floor,
            'final': self.values[-1],
            'decays': self.decays,
            'reaches_floor': self.reaches_floor,
            'onset': self.onset,
            'rate': self.rate,
            'fit': self.fit.to_dict(),
            **self.extra,
        }


def equidistribution_experiment(mu: WalkMeasure, x: XPoint, horizon: int, N: int, beta: float = 1.0,
                                reference: str = 'haar', step: Optional[int] = None,
                                dictionary_size: int = DEFAULT_DICTIONARY_SIZE, seed: int = 0,
                                threads: Optional[int] = None) -> DecayCurve:
    """
    𝒲_β estimates between μ^{*n}*δ_x and the reference for n = 0, step, …, horizon.

    The floor is the estimate between two independent Haar samples of the
    same size. The exponential rate is fitted on the excess over the floor.

    Raises:
        InvalidInputError: unknown reference or nonpositive horizon
    """
    if reference not in REFERENCES:
        raise InvalidInputError(f'unknown reference {reference!r}; expected one of {REFERENCES}')
    if horizon < 1:
        raise InvalidInputError(f'horizon must be positive, got {horizon}')
    step = step or max(1, horizon // 10)
    if reference == 'haar':
        ref = haar_measure(N, seed)
    else:
        ref = convolve_sample(mu, 2 * horizon, x, N, child_seed(seed, 1), threads)
    floor = wasserstein_estimate(haar_measure(N, seed, _FLOOR_STREAM), haar_measure(N, seed),
                                 beta, dictionary_size, seed).value

    rows = []
    sample = convolve_sample(mu, 0, x, N, seed)
    n = 0
    while True:
        estimate = wasserstein_estimate(sample, ref, beta, dictionary_size, seed + n)
        rows.append({'n': n, 'estimate': estimate.value})
        if n + step > horizon:
            break
        sample = propagate(mu, sample, step, child_seed(seed, 2, n), threads)
        n += step

    excess = [(row['n'], row['estimate'] - floor) for row in rows if row['estimate'] > floor]
    fit = line_fit([e[0] for e in excess], [math.log(e[1]) for e in excess])
    curve = DecayCurve(rows, floor, reference, fit, extra={'mu': mu.name, 'N': N, 'beta': beta, 'step': step})
    logger.info(f'equidistribution_experiment: final={curve.values[-1]:.4g} floor={floor:.4g} decays={curve.decays}')
    return curve


@dataclass
class EffectiveTimeBound:
    R: float
    A: float
    Q: int
    distance_to_orbits: float
    distance_to_base: float
    n_min: float

    def to_dict(self) -> dict:
        return {
            'R': self.R,
            'A': self.A,
            'Q': self.Q,
            'distance_to_orbits': self.distance_to_orbits,
            'distance_to_base': self.distance_to_base,
            'n_min': self.n_min,
        }


def effective_time_bound(x: XPoint, R: float, A: float = 1.0) -> EffectiveTimeBound:
    """
    A log R + A·max(|log dist(x, D_Q)|, dist(x, x₀)) with Q = min(⌊R^A⌋, the catalog cap).
    """
    if R < 1 or A <= 0:
        raise InvalidInputError(f'need R >= 1 and A > 0, got R={R}, A={A}')
    Q = max(1, min(int(R ** A), int(getattr(settings, 'MULTISLICE_RATIONAL_Q_MAX', 64))))
    catalog = rational_points(Q)
    d_orbits = distance_to_set(x, catalog.points)
    d_base = distance_to_base(x)
    log_term = abs(math.log(d_orbits)) if d_orbits > 0 else math.inf
    n_min = A * math.log(R) + A * max(log_term, d_base)
    return EffectiveTimeBound(R, A, Q, d_orbits, d_base, n_min)


@dataclass
class DiophantineReport:
    D: float
    rows: list[dict]

    @property
    def generic(self) -> bool:
        return all(row['holds'] for row in self.rows)

    def to_dict(self) -> dict:
        return {'D': self.D, 'rows': self.rows, 'generic': self.generic}


def diophantine_generic(x: XPoint, radii: Sequence[int], D: float) -> DiophantineReport:
    """dist(x, D_R) ≥ R^{−D}/D for every R of the grid."""
    if D <= 0:
        raise InvalidInputError(f'D must be positive, got {D}')
    rows = []
    for R in radii:
        catalog = rational_points(int(R))
        distance = distance_to_set(x, catalog.points) if len(catalog) else math.inf
        bound = R ** -D / D
        rows.append({'R': int(R), 'distance': distance, 'bound': bound, 'holds': bool(distance >= bound)})
    return DiophantineReport(D, rows)
