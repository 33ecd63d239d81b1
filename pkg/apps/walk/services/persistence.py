"""
Persistence of small dimension under the walk.

Both sides of
    (μ^{*n}*ν){inj ≤ r} ≪ r^s(e^{−sλn}ρ^{−1} + 1) + ν{inj ≤ ρ}
and of its ball analogue
    sup_x (μ^{*n}*ν)(B_r(x))² ≪ r^s(e^{−sλn}ρ^{−1} + 1) + sup_x ν(B_ρ(x)) + ν{inj ≤ ρ}
are measured on samples, with the implied constant replaced by a slack factor.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from apps.common.exceptions import InvalidInputError
from apps.common.rng import child_seed
from apps.modular_space.services.metric import LOG_CHART_RADIUS

from .convolution import propagate
from .drift import DriftReport, cusp_point, drift_report, empirical_u0_mass
from .lyapunov import lyapunov_estimate
from .measures import EmpiricalMeasure, WalkMeasure

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 10.0
LYAPUNOV_STEPS = 20
LYAPUNOV_SAMPLES = 2000
DRIFT_EXPONENT_GRID = (1.0, 0.5, 0.25, 0.125, 0.0625)
DRIFT_START_INJ = 1e-3
DRIFT_STEPS = 8
DRIFT_SAMPLES = 500


def max_ball_mass(nu: EmpiricalMeasure, radius: float) -> float:
    """sup over sample-point centers of ν(B_radius(x))."""
    counter = nu.ball_counter()
    return float(max(counter.mass(rep, radius) for rep in nu.reps))


@dataclass
class PersistenceReport:
    n: int
    rho: float
    r: float
    s: float
    lam: float
    slack: float
    cusp_lhs: float
    cusp_rhs: float
    ball_lhs: float
    ball_rhs: float
    s_fit: Optional[dict] = None

    @property
    def cusp_passes(self) -> bool:
        return self.cusp_lhs <= self.slack * self.cusp_rhs

    @property
    def ball_passes(self) -> bool:
        return self.ball_lhs <= self.slack * self.ball_rhs

    @property
    def passes(self) -> bool:
        return self.cusp_passes and self.ball_passes

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'rho': self.rho,
            'r': self.r,
            's': self.s,
            'lambda': self.lam,
            'slack': self.slack,
            'cusp_lhs': self.cusp_lhs,
            'cusp_rhs': self.cusp_rhs,
            'ball_lhs': self.ball_lhs,
            'ball_rhs': self.ball_rhs,
            'cusp_passes': self.cusp_passes,
            'ball_passes': self.ball_passes,
            'passes': self.passes,
            's_fit': self.s_fit,
        }


def fit_drift_exponent(mu: WalkMeasure, seed: int = 0, grid: Sequence[float] = DRIFT_EXPONENT_GRID,
                       n_max: int = DRIFT_STEPS, N: int = DRIFT_SAMPLES) -> tuple[float, DriftReport]:
    """
    Largest s on the grid whose u₀^s drift from a cusp start contracts.

    Falls back to the smallest grid value, with a warning, when none does.
    """
    start = cusp_point(DRIFT_START_INJ)
    report = None
    for s in sorted(grid, reverse=True):
        report = drift_report(mu, 'u0', start, n_max, N, s=s, seed=seed)
        if report.regime == 'contraction' and report.passes:
            return s, report
    logger.warning(f'fit_drift_exponent: no s in {sorted(grid)} contracts for {mu.name}; using {report.s}')
    return report.s, report


def persistence_check(mu: WalkMeasure, nu: EmpiricalMeasure, n: int, rho: float, r: float, s: Optional[float] = None,
                      lam: Optional[float] = None, slack: float = DEFAULT_SLACK, seed: int = 0) -> PersistenceReport:
    """
    Measure both persistence inequalities for μ^{*n}*ν.

    Args:
        s: drift exponent; fitted with fit_drift_exponent when omitted
        lam: Lyapunov exponent; measured with lyapunov_estimate when omitted

    Raises:
        InvalidInputError: if ρ or r is not in (0, 1/2)
    """
    if not (0 < rho < LOG_CHART_RADIUS and 0 < r < LOG_CHART_RADIUS):
        raise InvalidInputError(f'need rho, r in (0, {LOG_CHART_RADIUS}), got rho={rho}, r={r}')
    if n < 0:
        raise InvalidInputError(f'walk length must be nonnegative, got n={n}')
    s_fit = None
    if s is None:
        s, drift = fit_drift_exponent(mu, child_seed(seed, 3))
        s_fit = {'grid': list(DRIFT_EXPONENT_GRID), 'rate': drift.rate, 'fit_method': drift.fit_method}
    elif not 0 < s <= 1:
        raise InvalidInputError(f'need s in (0, 1], got s={s}')
    if lam is None:
        lam = lyapunov_estimate(mu, LYAPUNOV_STEPS, LYAPUNOV_SAMPLES, child_seed(seed, 1)).lower
    moved = propagate(mu, nu, n, child_seed(seed, 2)) if n else nu
    drift_term = r ** s * (math.exp(-s * lam * n) / rho + 1)
    cusp_tail = empirical_u0_mass(nu, rho)
    report = PersistenceReport(
        n=n,
        rho=rho,
        r=r,
        s=s,
        lam=float(lam),
        slack=slack,
        cusp_lhs=empirical_u0_mass(moved, r),
        cusp_rhs=drift_term + cusp_tail,
        ball_lhs=max_ball_mass(moved, r) ** 2,
        ball_rhs=drift_term + max_ball_mass(nu, rho) + cusp_tail,
        s_fit=s_fit,
    )
    logger.debug(f'persistence_check: n={n} cusp {report.cusp_lhs:.3g}/{report.cusp_rhs:.3g} '
                 f'ball {report.ball_lhs:.3g}/{report.ball_rhs:.3g}')
    return report
