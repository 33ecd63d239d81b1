"""
Drift functions and recurrence.

u₀ = 1/inj measures height in the cusp, u_Q = 1/dist(·, D_Q) closeness to
the rational points of denominator ≤ Q, and ω_C^s(x, y) = dist(x, y)^{−s} +
C·u₀^s(x) closeness of two coupled walkers. Each should contract on average
under P_μ up to an additive constant.

Provides:
- drift_report: E[f^s] along n with a fitted contraction factor
- recurrence_tail: tail masses of dist(·, x₀) after n steps
- cusp_point: the point diag(σ, 1/σ)Λ with a prescribed injectivity radius
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from apps.common.exceptions import InvalidInputError
from apps.common.fitting import LineFit, line_fit
from apps.common.rng import child_seed, stream
from apps.modular_space.services import (
    RationalPointCatalog,
    XPoint,
    distances_to,
    injectivity_radius,
    injectivity_radius_batch,
    pair_distances,
    reduce_batch,
)
from apps.sl2_core.services import Sl2Element

from .convolution import convolve_sample, propagate
from .measures import EmpiricalMeasure, WalkMeasure

logger = logging.getLogger(__name__)

DRIFT_KINDS = ('u0', 'uQ', 'omega')
ADDITIVE_CONSTANT = 2.0
CONTRACTION_MARGIN = 1.5
_COUPLED_STREAM = 14


def cusp_point(inj: float) -> XPoint:
    """
    diag(σ, 1/σ)Λ with injectivity radius ``inj``.

    Raises:
        InvalidInputError: if inj is not in (0, 0.1]
    """
    if not 0 < inj <= 0.1:
        raise InvalidInputError(f'cusp points need 0 < inj <= 0.1, got {inj}')

    def gap(log_sigma: float) -> float:
        return injectivity_radius(XPoint.from_element(Sl2Element.diagonal(math.exp(log_sigma)))) - inj

    log_sigma = optimize.brentq(gap, math.log(1e-7), math.log(0.9), xtol=1e-12)
    return XPoint.from_element(Sl2Element.diagonal(math.exp(log_sigma)))


def u0(reps: np.ndarray) -> np.ndarray:
    return 1.0 / injectivity_radius_batch(reps)


def u_q(reps: np.ndarray, catalog: RationalPointCatalog) -> np.ndarray:
    best = np.full(reps.shape[0], np.inf)
    for point in catalog.points:
        d, _ = distances_to(point, reps)
        np.minimum(best, d, out=best)
    return 1.0 / np.maximum(best, np.finfo(float).tiny)


def omega(xs: np.ndarray, ys: np.ndarray, s: float, C: float) -> np.ndarray:
    d, _ = pair_distances(xs, ys)
    return np.maximum(d, np.finfo(float).tiny) ** -s + C * u0(xs) ** s


@dataclass
class DriftReport:
    kind: str
    s: float
    C: float
    rows: list[dict]
    rate: float
    constant: float
    amplitude: float
    regime: str
    fit_method: str
    extra: dict = field(default_factory=dict)

    @property
    def values(self) -> list[float]:
        return [row['mean'] for row in self.rows]

    @property
    def passes(self) -> bool:
        """Contraction below 1 in the cusp regime; bounded by v₀ + 2 otherwise."""
        if self.regime == 'contraction':
            return self.rate < 1
        return max(self.values) <= self.values[0] + ADDITIVE_CONSTANT

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            's': self.s,
            'C': self.C,
            'rate': self.rate,
            'constant': self.constant,
            'amplitude': self.amplitude,
            'regime': self.regime,
            'fit_method': self.fit_method,
            'passes': self.passes,
            **self.extra,
        }


def fit_contraction(values: Sequence[float]) -> tuple[float, float, float, str]:
    """
    Fit v_n ≈ A·r^n + B.

    Returns:
        (r, B, A, method); the log-linear slope replaces curve_fit when it fails
    """
    v = np.asarray(values, dtype=float)
    n = np.arange(v.size, dtype=float)
    try:
        (A, r, B), _ = optimize.curve_fit(
            lambda t, A, r, B: A * r ** t + B,
            n, v,
            p0=(max(v[0] - v[-1], 1e-6), 0.9, max(v[-1], 0.0) * 0.5),
            bounds=([0.0, 0.0, 0.0], [np.inf, 2.0, np.inf]),
            maxfev=20000,
        )
        return float(r), float(B), float(A), 'curve_fit'
    except (RuntimeError, ValueError) as e:
        logger.warning(f'fit_contraction: curve fit failed ({e}); using the log-linear slope')
        fit: LineFit = line_fit(n, np.log(np.maximum(v, np.finfo(float).tiny)))
        return float(math.exp(fit.slope)), 0.0, float(v[0]), 'loglinear'


def _coupled(mu: WalkMeasure, xs: np.ndarray, ys: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    g = mu.atoms[mu.sample_steps(rng, xs.shape[0])]
    return reduce_batch(g @ xs), reduce_batch(g @ ys)


def drift_report(mu: WalkMeasure, kind: str, start: XPoint | tuple[XPoint, XPoint], n_max: int, N: int,
                 s: float = 0.1, C: float = 1.0, catalog: Optional[RationalPointCatalog] = None,
                 seed: int = 0) -> DriftReport:
    """
    E[f^s(g·x)] for g ~ μ^{*n}, n = 0..n_max, and the fitted contraction.

    Args:
        kind: 'u0', 'uQ' or 'omega'; omega takes a pair (x, y) moved by the same steps
        s: exponent in (0, 1]
        C: weight of u₀^s inside ω
        catalog: D_Q for kind 'uQ'

    Raises:
        InvalidInputError: unknown kind, bad parameters, or no catalog for 'uQ'
    """
    if kind not in DRIFT_KINDS:
        raise InvalidInputError(f'unknown drift kind {kind!r}; expected one of {DRIFT_KINDS}')
    if not 0 < s <= 1 or C < 0:
        raise InvalidInputError(f'need s in (0, 1] and C >= 0, got s={s}, C={C}')
    if n_max < 1 or N < 1:
        raise InvalidInputError(f'need n_max >= 1 and N >= 1, got n_max={n_max}, N={N}')
    if kind == 'uQ' and (catalog is None or len(catalog) == 0):
        raise InvalidInputError('drift kind uQ needs a nonempty rational-point catalog')

    if kind == 'omega':
        if not isinstance(start, tuple):
            raise InvalidInputError('drift kind omega needs a pair of start points')
        xs = np.broadcast_to(start[0].matrix(), (N, 2, 2)).copy()
        ys = np.broadcast_to(start[1].matrix(), (N, 2, 2)).copy()
        rng = stream(seed, _COUPLED_STREAM)
    else:
        if isinstance(start, tuple):
            raise InvalidInputError(f'drift kind {kind} takes a single start point')
        nu = convolve_sample(mu, 0, start, N, seed)

    def evaluate() -> np.ndarray:
        if kind == 'u0':
            return u0(nu.reps) ** s
        if kind == 'uQ':
            return u_q(nu.reps, catalog) ** s
        return omega(xs, ys, s, C)

    rows = []
    for n in range(n_max + 1):
        if n:
            if kind == 'omega':
                xs, ys = _coupled(mu, xs, ys, rng)
            else:
                nu = propagate(mu, nu, 1, child_seed(seed, n))
        values = evaluate()
        mean = float(values.mean())
        rows.append({'n': n, 'mean': mean, 'ratio': mean / rows[0]['mean'] if rows else 1.0})

    means = [row['mean'] for row in rows]
    r, B, A, method = fit_contraction(means)
    regime = 'contraction' if means[0] > CONTRACTION_MARGIN * min(means) else 'additive'
    report = DriftReport(kind, s, C, rows, r, B, A, regime, method,
                         extra={'N': N, 'n_max': n_max, 'catalog_Q': catalog.Q if catalog else None})
    logger.info(f'drift_report: {kind} rate={r:.4g} regime={regime} passes={report.passes}')
    return report


@dataclass
class TailReport:
    n: int
    N: int
    radii: list[float]
    masses: list[float]
    fit: LineFit
    start_distance: float

    @property
    def rate(self) -> float:
        """ŝ₀ with tail ≈ e^{−ŝ₀R}."""
        return -self.fit.slope

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'N': self.N,
            'radii': self.radii,
            'masses': self.masses,
            'rate': self.rate,
            'fit': self.fit.to_dict(),
            'start_distance': self.start_distance,
            'n_covers_start': self.n >= self.start_distance,
        }


def recurrence_tail(mu: WalkMeasure, x: XPoint, n: int, N: int, radii: Sequence[float],
                    seed: int = 0) -> TailReport:
    """(μ^{*n}*δ_x){dist(·, x₀) ≥ R} over the R grid with a fitted exponential rate."""
    sample = convolve_sample(mu, n, x, N, seed)
    base = XPoint.base()
    d, _ = distances_to(base, sample.reps)
    start_distance = float(distances_to(base, x.matrix()[None])[0][0])
    radii = [float(R) for R in radii]
    masses = [float(np.mean(d >= R)) for R in radii]
    keep = [i for i, m in enumerate(masses) if m > 0]
    fit = line_fit([radii[i] for i in keep], [math.log(masses[i]) for i in keep])
    report = TailReport(n, N, radii, masses, fit, start_distance)
    logger.debug(f'recurrence_tail: n={n} rate={report.rate:.4g}')
    return report


def empirical_u0_mass(nu: EmpiricalMeasure, r: float) -> float:
    """ν{inj ≤ r}."""
    return float(np.mean(injectivity_radius_batch(nu.reps) <= r))
