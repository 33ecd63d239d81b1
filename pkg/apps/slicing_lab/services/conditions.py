"""
Hypothesis checks for the slicing experiments.

Provides:
- chart_distortion_check: bi-Lipschitz and second-order bounds of a chart on A
- noncon_condition_check: σ{θ : dang((D_xφ_θ)^{-1}V_i, W) ≤ ρ} ≤ δ^{-ε}ρ^κ
- single_scale_check: the single-scale non-concentration of A
- measure_frostman_check / circle_concentration_check: Frostman bounds for
  measures on ℝ^d and on K = SO(2)
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from apps.common.exceptions import InvalidInputError, UnsupportedError
from apps.common.rng import stream
from apps.dyadic.services import DyadicSet, ShapeVector, covering_number, max_concentration, max_restricted_covering

from .charts import Chart, ChartFamily
from .reports import dyadic_scales

logger = logging.getLogger(__name__)

_PAIR_CHUNK = 1 << 18

PointsLike = Union[DyadicSet, np.ndarray]


def _coordinates(A: PointsLike) -> np.ndarray:
    if isinstance(A, DyadicSet):
        return A.unit_coordinates()
    return np.atleast_2d(np.asarray(A, dtype=float))


def _resolve_delta(A: PointsLike, delta: Optional[float]) -> float:
    if delta is not None:
        return float(delta)
    if isinstance(A, DyadicSet):
        return 2.0 ** (-A.k)
    raise InvalidInputError('delta is required for raw coordinate input')


def _pairs(n: int, max_pairs: int, seed: int):
    """All i<j pairs when n ≤ max_pairs, else about as many random distinct pairs."""
    if n <= max_pairs:
        i, j = np.triu_indices(n, 1)
        return i, j, True
    rng = stream(seed, 2)
    count = max_pairs * (max_pairs - 1) // 2
    i = rng.integers(0, n, size=count)
    j = rng.integers(0, n - 1, size=count)
    j = np.where(j >= i, j + 1, j)
    return i, j, False


@dataclass
class DistortionReport:
    epsilon: float
    delta: float
    pairs: int
    exhaustive: bool
    min_ratio: float
    max_ratio: float
    max_defect: float
    witnesses: dict = field(default_factory=dict)

    @property
    def lower(self) -> float:
        return self.delta ** self.epsilon

    @property
    def upper(self) -> float:
        return self.delta ** (-self.epsilon)

    @property
    def passes(self) -> bool:
        values = (self.min_ratio, self.max_ratio, self.max_defect)
        if not all(math.isfinite(v) for v in values):
            return False
        return self.min_ratio >= self.lower and self.max_ratio <= self.upper and self.max_defect <= self.upper

    @property
    def required_epsilon(self) -> float:
        """Smallest ε for which the measured ratios pass."""
        if self.pairs == 0:
            return 0.0
        if not (self.min_ratio > 0 and math.isfinite(self.max_ratio) and math.isfinite(self.max_defect)):
            return math.inf
        worst = max(-math.log(self.min_ratio), math.log(self.max_ratio), math.log(max(self.max_defect, 1e-300)), 0.0)
        return worst / math.log(1 / self.delta)

    def to_dict(self) -> dict:
        return {
            'epsilon': self.epsilon,
            'delta': self.delta,
            'pairs': self.pairs,
            'exhaustive': self.exhaustive,
            'min_ratio': self.min_ratio,
            'max_ratio': self.max_ratio,
            'max_defect': self.max_defect,
            'required_epsilon': self.required_epsilon,
            'passes': self.passes,
            'witnesses': self.witnesses,
        }


def chart_distortion_check(chart: Chart, A: PointsLike, epsilon: float, delta: Optional[float] = None,
                           max_pairs: int = 2000, seed: int = 0) -> DistortionReport:
    """
    Check δ^ε‖x−y‖ ≤ ‖φ(x)−φ(y)‖ ≤ δ^{-ε}‖x−y‖ and
    ‖φ(x)−φ(y)−D_xφ(x−y)‖ ≤ δ^{-ε}‖x−y‖² on pairs of A.

    Every pair is tested when |A| ≤ max_pairs, otherwise a seeded sample of
    the same size. Witness pairs are reported for the worst values.
    """
    x = _coordinates(A)
    delta = _resolve_delta(A, delta)
    n = x.shape[0]
    y = chart.apply(x)
    D = chart.differential(x)
    i_all, j_all, exhaustive = _pairs(n, max_pairs, seed)

    best = {'min_ratio': (math.inf, None), 'max_ratio': (0.0, None), 'max_defect': (0.0, None)}
    for start in range(0, i_all.size, _PAIR_CHUNK):
        i = i_all[start:start + _PAIR_CHUNK]
        j = j_all[start:start + _PAIR_CHUNK]
        dx = x[i] - x[j]
        dy = y[i] - y[j]
        nx = np.linalg.norm(dx, axis=1)
        ratio = np.linalg.norm(dy, axis=1) / nx
        defect = np.linalg.norm(dy - np.einsum('nab,nb->na', D[i], dx), axis=1) / nx ** 2
        ratio = np.where(np.isfinite(ratio), ratio, np.inf)
        defect = np.where(np.isfinite(defect), defect, np.inf)
        lo, hi, bad = int(np.argmin(ratio)), int(np.argmax(ratio)), int(np.argmax(defect))
        if ratio[lo] < best['min_ratio'][0]:
            best['min_ratio'] = (float(ratio[lo]), (int(i[lo]), int(j[lo])))
        if ratio[hi] > best['max_ratio'][0]:
            best['max_ratio'] = (float(ratio[hi]), (int(i[hi]), int(j[hi])))
        if defect[bad] > best['max_defect'][0]:
            best['max_defect'] = (float(defect[bad]), (int(i[bad]), int(j[bad])))

    witnesses = {
        name: {'pair': list(pair), 'points': [x[pair[0]].tolist(), x[pair[1]].tolist()], 'value': value}
        for name, (value, pair) in best.items() if pair is not None
    }
    report = DistortionReport(
        epsilon=epsilon,
        delta=delta,
        pairs=int(i_all.size),
        exhaustive=exhaustive,
        min_ratio=best['min_ratio'][0] if i_all.size else 1.0,
        max_ratio=best['max_ratio'][0] if i_all.size else 1.0,
        max_defect=best['max_defect'][0],
        witnesses=witnesses,
    )
    if not report.passes:
        logger.debug(f'chart_distortion_check failed: {report.to_dict()}')
    return report


def flag_subspaces(shape: ShapeVector) -> list[np.ndarray]:
    """Basis rows of V_1 ⊊ ⋯ ⊊ V_m, V_i spanned by the first i blocks of the shape."""
    out = []
    offset = 0
    for dim in shape.dims[:-1]:
        offset += dim
        basis = np.zeros((offset, shape.d))
        basis[np.arange(offset), list(shape.axes[:offset])] = 1.0
        out.append(basis)
    return out


def _pullback_vectors(D: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """
    One unit vector per chart describing U_θ = (D_xφ_θ)^{-1}V: its direction
    when V is a line, its normal when V is a hyperplane.
    """
    t, d, _ = D.shape
    dim = basis.shape[0]
    if dim == 1:
        vecs = np.linalg.solve(D, np.broadcast_to(basis[0], (t, d))[..., None])[..., 0]
    elif dim == d - 1:
        _, _, vt = np.linalg.svd(basis)
        normal = vt[-1]
        vecs = np.einsum('tba,b->ta', D, normal)
    else:
        raise UnsupportedError(f'flag level of dimension {dim} in d={d} is not supported (d ≤ 3 only)')
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)


@dataclass
class NonconReport:
    kappa: float
    epsilon: float
    delta: float
    levels: list[dict]
    worst_ratio: float

    @property
    def slack(self) -> float:
        return self.delta ** (-self.epsilon)

    @property
    def passes(self) -> bool:
        return self.worst_ratio <= self.slack

    def to_dict(self) -> dict:
        return {
            'kappa': self.kappa,
            'epsilon': self.epsilon,
            'delta': self.delta,
            'worst_ratio': self.worst_ratio,
            'slack': self.slack,
            'passes': self.passes,
            'levels': self.levels,
        }


def noncon_condition_check(charts: Union[ChartFamily, Sequence[Chart]], A: PointsLike, flag: ShapeVector,
                           kappa: float, epsilon: float, delta: Optional[float] = None, budget: int = 128,
                           points: int = 4, trials: int = 256, seed: int = 0) -> NonconReport:
    """
    Worst measured ratio σ{θ : dang((D_xφ_θ)^{-1}V_i, W) ≤ ρ} / ρ^κ.

    The sup over W is a grid plus local search (dyadic.max_concentration);
    the flag comes from the shape, ρ runs over the dyadic scales of
    [δ, δ^ε] and x over a few seeded points of A.

    Raises:
        InvalidInputError: if budget < 1
    """
    if budget < 1:
        raise InvalidInputError('budget must be at least 1')
    if isinstance(charts, ChartFamily):
        charts = charts.sample(trials, seed)
    x_all = _coordinates(A)
    delta = _resolve_delta(A, delta)
    k = max(1, round(-math.log2(delta)))
    rhos = dyadic_scales(k, epsilon)
    rng = stream(seed, 3)
    picks = rng.choice(x_all.shape[0], size=min(points, x_all.shape[0]), replace=False)

    levels: list[dict] = []
    worst = 0.0
    for level, basis in enumerate(flag_subspaces(flag), start=1):
        for p in picks:
            x = x_all[p][None, :]
            D = np.concatenate([chart.differential(x) for chart in charts], axis=0)
            vectors = _pullback_vectors(D, basis)
            conc = max_concentration(vectors, rhos, budget=budget, kappa=kappa, seed=seed)
            worst = max(worst, conc.worst_ratio)
            levels.append({'level': level, 'point': x[0].tolist(), **conc.to_dict()})
    report = NonconReport(kappa, epsilon, delta, levels, worst)
    logger.debug(f'noncon_condition_check: worst ratio {worst:.4g} (slack {report.slack:.4g})')
    return report


@dataclass
class SingleScaleReport:
    kappa: float
    pairs: list[dict]

    @property
    def passes(self) -> bool:
        return any(p['holds'] for p in self.pairs)

    def failing_pairs(self) -> list[tuple[str, str]]:
        return [(p['r_j'], p['r_j1']) for p in self.pairs if not p['holds']]

    def to_dict(self) -> dict:
        return {'kappa': self.kappa, 'passes': self.passes, 'pairs': self.pairs}


def _fraction_str(r: Fraction) -> str:
    return f'{r.numerator}/{r.denominator}'


def single_scale_check(A: DyadicSet, shape: ShapeVector, kappa: float) -> SingleScaleReport:
    """
    For each consecutive pair (r_j, r_{j+1}), with
    ρ = δ^{r_{j+1}} 𝒩_{δ^{r_{j+1}}}(A)^{1/d} 𝒩_{δ^{r_j}}(A)^{-1/d}, test
    max_x 𝒩_{δ^{r_{j+1}}}(A ∩ B_ρ(x)) ≤ δ^κ 𝒩_{δ^{r_{j+1}}}(A) / 𝒩_{δ^{r_j}}(A).

    ρ is rounded down to a power of two no finer than the base grid.
    """
    A.require_nonempty()
    d, k = A.d, A.k
    delta = 2.0 ** (-k)
    pairs = []
    for r_j, r_j1 in zip(shape.exponents, shape.exponents[1:]):
        coarse = covering_number(A, ShapeVector.isotropic(d, k, r_j)).count
        fine_shape = ShapeVector.isotropic(d, k, r_j1)
        fine = covering_number(A, fine_shape).count
        rho = delta ** float(r_j1) * (fine / coarse) ** (1.0 / d)
        j = min(k, max(0, math.ceil(-math.log2(rho) - 1e-12)))
        radius = Fraction(1, 2 ** j)
        lhs = max_restricted_covering(A, fine_shape, radius).count
        rhs = delta ** kappa * fine / coarse
        pairs.append({
            'r_j': _fraction_str(r_j),
            'r_j1': _fraction_str(r_j1),
            'rho': rho,
            'rho_used': float(radius),
            'lhs': lhs,
            'rhs': rhs,
            'holds': lhs <= rhs,
        })
    return SingleScaleReport(kappa, pairs)


@dataclass
class FrostmanReport:
    """sup_x ν(B_ρ(x)) against slack·ρ^{exponent}, B_ρ the sup-norm box of side ρ."""
    exponent: float
    slack: float
    rhos: list[float]
    max_mass: list[float]

    @property
    def ratios(self) -> list[float]:
        return [m / (self.slack * r ** self.exponent) for m, r in zip(self.max_mass, self.rhos)]

    @property
    def worst_ratio(self) -> float:
        return max(self.ratios, default=0.0)

    @property
    def passes(self) -> bool:
        return self.worst_ratio <= 1.0

    def to_dict(self) -> dict:
        return {
            'exponent': self.exponent,
            'slack': self.slack,
            'rhos': self.rhos,
            'max_mass': self.max_mass,
            'worst_ratio': self.worst_ratio,
            'passes': self.passes,
        }


def max_box_mass(points: np.ndarray, weights: np.ndarray, rho: float) -> float:
    """
    Largest ν-mass of a box of side ρ from the ρ-grid and its half-shifts.

    Every box of side ρ/2 lies in one of these boxes.
    """
    d = points.shape[1]
    best = 0.0
    for mask in range(2 ** d):
        offset = np.array([(rho / 2) * ((mask >> i) & 1) for i in range(d)])
        cells = np.floor((points - offset) / rho).astype(np.int64)
        _, inverse = np.unique(cells, axis=0, return_inverse=True)
        best = max(best, float(np.bincount(inverse.reshape(-1), weights=weights).max()))
    return best


def measure_frostman_check(points: np.ndarray, weights: np.ndarray, exponent: float,
                           rhos: Sequence[float], slack: float = 1.0) -> FrostmanReport:
    """sup_x ν(B_ρ(x)) ≤ slack·ρ^{exponent} for every ρ in rhos."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    masses = [max_box_mass(points, weights, float(r)) for r in rhos]
    return FrostmanReport(float(exponent), float(slack), [float(r) for r in rhos], masses)


def circle_concentration_check(thetas: np.ndarray, kappa: float, rhos: Sequence[float],
                               weights: Optional[np.ndarray] = None, slack: float = 1.0) -> FrostmanReport:
    """sup_θ σ(B_ρ(θ)) ≤ slack·ρ^κ on the circle of angles, B_ρ(θ) the arc of half-width ρ."""
    angles = np.mod(np.asarray(thetas, dtype=float), 2 * math.pi)
    order = np.argsort(angles)
    angles = angles[order]
    w = np.full(angles.size, 1.0 / angles.size) if weights is None else np.asarray(weights, dtype=float)[order]
    doubled = np.concatenate([angles, angles + 2 * math.pi])
    cumulative = np.concatenate([[0.0], np.cumsum(np.concatenate([w, w]))])
    masses = []
    for rho in rhos:
        ends = np.searchsorted(doubled, angles + 2 * rho, side='right')
        starts = np.arange(angles.size)
        window = cumulative[np.minimum(ends, starts + angles.size)] - cumulative[starts]
        masses.append(float(min(1.0, window.max())))
    return FrostmanReport(float(kappa), float(slack), [float(r) for r in rhos], masses)
