"""
The two sets showing that the hypotheses cannot be dropped.

In the plane, A₁⊔A₂ fails regularity and has 𝒩_δ^𝐫(φ_θA) ≃ δ^{-1/2} for
every rotation, far below the critical product. In ℝ³, the plane plus an
axis fails 𝒩_𝒫𝒩_𝒬 ≳ 𝒩_ℛ𝒩_𝒮 on the whole set, so submodularity needs the
subset A′.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from apps.common.fitting import loglog_fit
from apps.dyadic.services import Filtration, ShapeVector, is_regular, submodular_split

from .charts import ChartFamily
from .experiments import critical_product, nonlinear_covering
from .test_sets import plane_and_axis, two_scale_counterexample

logger = logging.getLogger(__name__)

SLOPE_TOLERANCE = 0.1
RATIO_WINDOW = 16.0


@dataclass
class CounterexampleReport:
    planar: list[dict] = field(default_factory=list)
    slopes: list[float] = field(default_factory=list)
    spatial: list[dict] = field(default_factory=list)

    @property
    def planar_holds(self) -> bool:
        if not self.planar:
            return True
        irregular = all(not row['regular'] for row in self.planar)
        below = all(row['min_gap'] > 0 for row in self.planar)
        slopes = all(abs(s - 0.5) <= SLOPE_TOLERANCE for s in self.slopes)
        return irregular and below and slopes

    @property
    def spatial_holds(self) -> bool:
        return all(row['holds'] for row in self.spatial)

    @property
    def passes(self) -> bool:
        return self.planar_holds and self.spatial_holds

    def to_dict(self) -> dict:
        return {
            'planar': self.planar,
            'slope_min': min(self.slopes, default=float('nan')),
            'slope_max': max(self.slopes, default=float('nan')),
            'spatial': self.spatial,
            'planar_holds': self.planar_holds,
            'spatial_holds': self.spatial_holds,
            'passes': self.passes,
        }


def _planar(ks: Sequence[int], thetas: int, seed: int, report: CounterexampleReport):
    charts = ChartFamily.rotations(2).sample(thetas, seed)
    counts = np.zeros((len(ks), thetas))
    for row, k in enumerate(ks):
        A = two_scale_counterexample(k)
        shape = ShapeVector((1, 1), (Fraction(1, 2), Fraction(1)), k)
        regular = is_regular(A, Filtration.isotropic(2, k, (Fraction(1, 2), Fraction(1)))).regular
        counts[row] = [nonlinear_covering(A, chart, shape).count for chart in charts]
        product = critical_product(A, shape)
        gaps = (math.log(product) - np.log(counts[row])) / (k * math.log(2))
        report.planar.append({
            'k': k,
            'points': len(A),
            'regular': regular,
            'product': product,
            'min_count': int(counts[row].min()),
            'max_count': int(counts[row].max()),
            'spread': float(counts[row].max() / counts[row].min()),
            'min_gap': float(gaps.min()),
            'median_gap': float(np.median(gaps)),
        })
    inverse_deltas = [2.0 ** k for k in ks]
    report.slopes = [loglog_fit(inverse_deltas, counts[:, j]).slope for j in range(thetas)]


def _spatial(radii: Sequence[int], report: CounterexampleReport):
    c = Fraction(1, 2)
    for R in radii:
        A = plane_and_axis(R)
        k = A.k
        P = ShapeVector.from_coordinate_exponents([Fraction(1, k), 1, 1], k)
        Q = ShapeVector.from_coordinate_exponents([1, Fraction(1, k), 1], k)
        _, cert = submodular_split(A, P, Q, c)
        ratios = {
            'p_over_r': cert.n_p / R,
            'q_over_r': cert.n_q / R,
            'r_over_r2': cert.n_r / R ** 2,
            's_over_r': cert.n_s / R,
        }
        in_window = all(1 / RATIO_WINDOW <= v <= RATIO_WINDOW for v in ratios.values())
        report.spatial.append({
            'R': R,
            **cert.to_dict(),
            **ratios,
            'orders_hold': in_window,
            'holds': in_window and cert.holds,
        })


def counterexample_suite(ks: Sequence[int] = (8, 10, 12), thetas: int = 64, seed: int = 0,
                         radii: Sequence[int] = (16, 128)) -> CounterexampleReport:
    """
    Build both counterexamples and measure the claimed failures.

    The planar gap is log(product/𝒩)/log(1/δ); positivity at the tested
    scales is checked, the limiting value 1/5 is not.
    """
    report = CounterexampleReport()
    _planar(ks, thetas, seed, report)
    _spatial(radii, report)
    logger.info(f'counterexample_suite: planar={report.planar_holds} spatial={report.spatial_holds}')
    return report
