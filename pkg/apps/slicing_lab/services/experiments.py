"""
Slicing experiments: push A (or ν) through sampled charts and measure the
exceptional set of θ.

Provides:
- nonlinear_covering: 𝒩_δ^𝐫(φA) with its decomposition over 𝒟_{δ^{r₁}}
- subcritical_experiment / supercritical_experiment: the adversarial A′ test
- slicing_measure_experiment: the A_θ construction for Frostman measures
- sl2_slicing_experiment: the same on a ball of SL₂(ℝ) through φ_θ
- image_covering_check: 𝒩_ρ(φA) against 𝒩_ρ(A) for a bi-Lipschitz chart
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from apps.common.exceptions import DomainError, InvalidInputError, PreconditionViolated
from apps.common.parallel import parallel_map
from apps.dyadic.services import (
    AtomicMeasure,
    DyadicSet,
    Filtration,
    ShapeVector,
    cell_indices,
    covering_count,
    covering_number,
    is_regular,
)
from apps.dyadic.services.covering import distinct_per_group
from apps.sl2_core.services import log_batch, phi_theta_batch

from .charts import Chart, ChartFamily, Sl2Chart
from .conditions import (
    chart_distortion_check,
    circle_concentration_check,
    measure_frostman_check,
    noncon_condition_check,
    single_scale_check,
)
from .reports import ExperimentParams, SlicingReport, dyadic_scales

logger = logging.getLogger(__name__)

SL2_SHAPE_EXPONENTS = (Fraction(0), Fraction(1, 2), Fraction(1))


def image_grid_points(coords: np.ndarray, k: int) -> np.ndarray:
    """floor(y·2^k) for chart images y; negative indices are kept."""
    return np.floor(np.asarray(coords, dtype=float) * (1 << k)).astype(np.int64)


def _chart_image(A: DyadicSet, chart: Chart) -> np.ndarray:
    if chart.d != A.d:
        raise InvalidInputError(f'chart acts on d={chart.d}, set has d={A.d}')
    image = chart.apply(A.unit_coordinates())
    bad = ~np.all(np.isfinite(image), axis=1)
    if bad.any():
        first = A.points[int(np.flatnonzero(bad)[0])].tolist()
        raise DomainError(f'chart is undefined at {int(bad.sum())} points of A, first at {first}')
    return image_grid_points(image, A.k)


@dataclass
class NonlinearCover:
    """𝒩_δ^𝐫(φA) and the terms 𝒩_δ^𝐫(φ(A ∩ Q)) for Q ∈ 𝒟_{δ^{r₁}}."""
    count: int
    parts: dict[tuple[int, ...], int]
    shape: ShapeVector

    @property
    def sum_of_parts(self) -> int:
        return int(sum(self.parts.values()))

    @property
    def max_part(self) -> int:
        return int(max(self.parts.values(), default=0))

    def to_dict(self) -> dict:
        return {
            'count': self.count,
            'sum_of_parts': self.sum_of_parts,
            'max_part': self.max_part,
            'parts': len(self.parts),
            'shape': self.shape.to_dict(),
        }


def nonlinear_covering(A: DyadicSet, chart: Chart, shape: ShapeVector) -> NonlinearCover:
    """
    Covering number of φ(A) by the tiles of the shape.

    Points are taken at their cell centres, mapped, and re-discretized to
    the 2^{-k} grid before counting.

    Raises:
        DomainError: if the chart is undefined at a point of A
        EmptySetError: if A is empty
    """
    A.require_nonempty()
    image = _chart_image(A, chart)
    cells = cell_indices(image, shape)
    coarse = cell_indices(A.points, ShapeVector.isotropic(A.d, A.k, shape.exponents[0]))
    keys, counts = distinct_per_group(coarse, cells)
    parts = {tuple(int(v) for v in key): int(n) for key, n in zip(keys.tolist(), counts.tolist())}
    return NonlinearCover(covering_count(image, shape), parts, shape)


def adversarial_count(image_cells: np.ndarray, fine_cells: np.ndarray, keep_fraction: float) -> int:
    """
    Fewest image cells whose preimages still meet keep_fraction of the fine cells.

    Image cells are taken fullest first (by distinct fine cells), so this is
    𝒩_δ^𝐫(φA′) for the greedy A′ with 𝒩_fine(A′) ≥ keep_fraction·𝒩_fine(A).
    """
    _, image_id = np.unique(image_cells, axis=0, return_inverse=True)
    _, fine_id = np.unique(fine_cells, axis=0, return_inverse=True)
    image_id, fine_id = image_id.reshape(-1), fine_id.reshape(-1)
    pairs = np.unique(np.stack([image_id, fine_id], axis=1), axis=0)
    fullness = np.bincount(pairs[:, 0], minlength=int(image_id.max()) + 1)
    order = np.argsort(-fullness, kind='stable')
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    # a fine cell is covered once the first image cell holding it is kept
    first = np.full(int(fine_id.max()) + 1, order.size, dtype=np.int64)
    np.minimum.at(first, pairs[:, 1], rank[pairs[:, 0]])
    covered = np.cumsum(np.bincount(first, minlength=order.size + 1))[:order.size]
    need = keep_fraction * first.size
    return int(np.searchsorted(covered, need - 1e-9) + 1)


def _regularity_exempt(shape: ShapeVector) -> bool:
    last = shape.exponents[-1]
    return all(r == 0 or r == last for r in shape.exponents)


def _check_regular(A: DyadicSet, shape: ShapeVector):
    if _regularity_exempt(shape):
        return
    exponents = sorted(set(shape.exponents))
    report = is_regular(A, Filtration.isotropic(A.d, A.k, exponents))
    if not report.regular:
        failure = report.first_failure()
        raise PreconditionViolated(
            f'A is not regular between the scales of level {failure.level}',
            condition='regularity',
            details=report.to_dict(),
        )


def _check_distortion(charts: list[Chart], A: DyadicSet, params: ExperimentParams):
    for index, chart in enumerate(charts):
        report = chart_distortion_check(chart, A, params.epsilon, max_pairs=params.pair_budget, seed=params.seed)
        if not report.passes:
            raise PreconditionViolated(
                f'chart {index} fails the distortion bounds (needs epsilon >= {report.required_epsilon:.4g})',
                condition='distortion',
                details={'theta_index': index, **report.to_dict()},
            )


def critical_product(A: DyadicSet, shape: ShapeVector) -> float:
    """Π 𝒩_{δ^{r_i}}(A)^{j_i/d}."""
    log_total = 0.0
    for dim, r in zip(shape.dims, shape.exponents):
        count = covering_number(A, ShapeVector.isotropic(A.d, A.k, r)).count
        log_total += dim / A.d * math.log(count)
    return math.exp(log_total)


def _adversarial_run(name: str, A: DyadicSet, charts: list[Chart], shape: ShapeVector,
                     params: ExperimentParams, target: float, product: float,
                     threads: Optional[int]) -> SlicingReport:
    delta = 2.0 ** (-A.k)
    keep = delta ** params.epsilon
    fine_cells = cell_indices(A.points, ShapeVector.isotropic(A.d, A.k, shape.exponents[-1]))

    def measure(chart: Chart) -> dict:
        image_cells = cell_indices(_chart_image(A, chart), shape)
        return {
            'image_covering': covering_count(image_cells, ShapeVector.isotropic(A.d, A.k, 1)),
            'adversarial': adversarial_count(image_cells, fine_cells, keep),
        }

    rows = parallel_map(measure, charts, threads)
    values = [float(row['adversarial']) for row in rows]
    gaps = [(math.log(v) - math.log(product)) / math.log(1 / delta) for v in values]
    for row, gap in zip(rows, gaps):
        row['gap'] = gap
    report = SlicingReport(
        experiment=name,
        delta=delta,
        target=target,
        values=values,
        exceptional=[v < target for v in values],
        allowed_fraction=params.allowed(delta),
        rows=rows,
        extra={
            'product': product,
            'keep_fraction': keep,
            'median_gap': float(np.median(gaps)),
            'min_gap': float(np.min(gaps)),
            'shape': shape.to_dict(),
            'params': params.to_dict(),
        },
    )
    logger.info(f'{name}: exceptional fraction {report.exceptional_fraction:.4f} over {report.trials} charts')
    return report


def _sample(charts, params: ExperimentParams) -> list[Chart]:
    if isinstance(charts, ChartFamily):
        return charts.sample(params.trials, params.seed)
    return list(charts)


def subcritical_experiment(A: DyadicSet, charts, shape: ShapeVector, params: ExperimentParams,
                           threads: Optional[int] = None) -> SlicingReport:
    """
    Fraction of θ with 𝒩_δ^𝐫(φ_θA′) < δ^{Cε|log ε|} Π 𝒩_{δ^{r_i}}(A)^{j_i/d}.

    A′ is the greedy adversarial subset (fullest image cells kept until
    δ^ε of the fine cells are covered), so the reported fraction is a lower
    bound for the worst A′.

    Raises:
        PreconditionViolated: regularity or distortion fails
    """
    if shape.d != A.d or shape.k != A.k:
        raise InvalidInputError('shape and set live on different grids')
    A.require_nonempty()
    _check_regular(A, shape)
    sampled = _sample(charts, params)
    _check_distortion(sampled, A, params)
    delta = 2.0 ** (-A.k)
    product = critical_product(A, shape)
    eps = params.epsilon
    target = delta ** (params.loss_constant * eps * abs(math.log(eps))) * product
    return _adversarial_run('subcritical', A, sampled, shape, params, target, product, threads)


def supercritical_experiment(A: DyadicSet, charts, shape: ShapeVector, params: ExperimentParams,
                             threads: Optional[int] = None) -> SlicingReport:
    """
    Fraction of θ with 𝒩_δ^𝐫(φ_θA′) < δ^{-ε} Π 𝒩_{δ^{r_i}}(A)^{j_i/d}.

    Raises:
        PreconditionViolated: single-scale non-concentration, regularity,
            distortion or the non-concentration of the charts fails
    """
    if shape.d != A.d or shape.k != A.k:
        raise InvalidInputError('shape and set live on different grids')
    A.require_nonempty()
    single = single_scale_check(A, shape, params.kappa)
    if not single.passes:
        pairs = ', '.join(f'({a}, {b})' for a, b in single.failing_pairs())
        raise PreconditionViolated(
            f'single-scale non-concentration fails at every scale pair: {pairs}',
            condition='single-scale',
            details=single.to_dict(),
        )
    _check_regular(A, shape)
    sampled = _sample(charts, params)
    _check_distortion(sampled, A, params)
    noncon = noncon_condition_check(sampled, A, shape, params.kappa, params.epsilon,
                                    budget=params.w_search_budget, seed=params.seed)
    if not noncon.passes:
        raise PreconditionViolated(
            f'charts concentrate near a subspace (ratio {noncon.worst_ratio:.4g})',
            condition='non-concentration',
            details=noncon.to_dict(),
        )
    delta = 2.0 ** (-A.k)
    product = critical_product(A, shape)
    target = delta ** (-params.epsilon) * product
    report = _adversarial_run('supercritical', A, sampled, shape, params, target, product, threads)
    report.extra['single_scale'] = single.to_dict()
    return report


@dataclass
class FiberCut:
    """A_θ for one chart: mass cut from over-full rectangles and what remains."""
    removed_mass: float
    max_fiber: float
    bad_cells: int
    outside_mass: float = 0.0
    epsilon_measured: float = math.inf
    kept: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            'removed_mass': self.removed_mass,
            'max_fiber': self.max_fiber,
            'bad_cells': self.bad_cells,
            'outside_mass': self.outside_mass,
            'epsilon_measured': self.epsilon_measured,
        }


def _shifted_cells(grid: np.ndarray, shape: ShapeVector):
    """Cell ids of the shape tiling and of its translates by half a side per coordinate."""
    shifts = shape.coordinate_shifts()
    movable = [i for i, s in enumerate(shifts) if s > 0]
    for mask in range(2 ** len(movable)):
        offset = np.zeros(shape.d, dtype=np.int64)
        for bit, i in enumerate(movable):
            if (mask >> bit) & 1:
                offset[i] = 1 << (int(shifts[i]) - 1)
        _, inverse = np.unique(np.right_shift(grid - offset, shifts), axis=0, return_inverse=True)
        yield inverse.reshape(-1)


def fiber_cut(grid: np.ndarray, weights: np.ndarray, shape: ShapeVector, alpha: float, epsilon: float) -> FiberCut:
    """
    Remove the atoms lying in a rectangle of mass > vol(R)^{α+2ε}.

    Rectangles come from the shape grid and its half-shifts, so every
    translate x + R/2 sits in one of them.
    """
    vol = float(shape.cell_volume())
    threshold = vol ** (alpha + 2 * epsilon)
    kept = np.ones(grid.shape[0], dtype=bool)
    bad_cells = 0
    groupings = list(_shifted_cells(grid, shape))
    for inverse in groupings:
        masses = np.bincount(inverse, weights=weights)
        bad = masses > threshold
        bad_cells += int(bad.sum())
        kept &= ~bad[inverse]
    removed = float(weights[~kept].sum())
    max_fiber = 0.0
    for inverse in groupings:
        masses = np.bincount(inverse, weights=np.where(kept, weights, 0.0))
        max_fiber = max(max_fiber, float(masses.max(initial=0.0)))
    delta = 2.0 ** (-shape.k)
    eps_removed = math.log(removed) / math.log(delta) if removed > 0 else math.inf
    eps_fiber = math.log(max_fiber) / math.log(vol) - alpha if 0 < max_fiber and vol < 1 else math.inf
    return FiberCut(removed, max_fiber, bad_cells, epsilon_measured=min(eps_removed, eps_fiber), kept=kept)


def _require_frostman(points: np.ndarray, weights: np.ndarray, exponent: float, k: int, epsilon: float):
    delta = 2.0 ** (-k)
    report = measure_frostman_check(points, weights, exponent, [2.0 ** (-j) for j in range(k + 1)],
                                    slack=delta ** (-epsilon))
    if not report.passes:
        raise PreconditionViolated(
            f'measure is not Frostman with exponent {exponent:.4g} (worst ratio {report.worst_ratio:.4g})',
            condition='frostman',
            details=report.to_dict(),
        )
    return report


def _measure_report(name: str, cuts: list[FiberCut], delta: float, shape: ShapeVector,
                    params: ExperimentParams, frostman: dict, extra: Optional[dict] = None) -> SlicingReport:
    allowed_removal = delta ** params.epsilon
    values = [cut.removed_mass for cut in cuts]
    epsilons = [cut.epsilon_measured for cut in cuts]
    report = SlicingReport(
        experiment=name,
        delta=delta,
        target=allowed_removal,
        values=values,
        exceptional=[v > allowed_removal for v in values],
        allowed_fraction=params.allowed(delta),
        lower_is_exceptional=False,
        rows=[cut.to_dict() for cut in cuts],
        extra={
            'fiber_bound': float(shape.cell_volume()) ** (params.alpha + params.epsilon),
            'max_fiber': max(cut.max_fiber for cut in cuts),
            'epsilon_measured': float(np.min(epsilons)),
            'frostman': frostman,
            'shape': shape.to_dict(),
            'params': params.to_dict(),
            **(extra or {}),
        },
    )
    logger.info(f'{name}: exceptional fraction {report.exceptional_fraction:.4f} over {report.trials} charts')
    return report


def slicing_measure_experiment(nu: AtomicMeasure, charts, shape: ShapeVector, params: ExperimentParams,
                               threads: Optional[int] = None) -> SlicingReport:
    """
    For each θ build A_θ by cutting over-full image rectangles and report
    ν(ℝ^d ∖ A_θ); θ is exceptional when that exceeds δ^ε.

    Raises:
        PreconditionViolated: ν fails ν(B_ρ(x)) ≤ δ^{-ε}ρ^{αd}
        DomainError: a chart is undefined on the support
    """
    if shape.d != nu.d or shape.k != nu.k:
        raise InvalidInputError('shape and measure live on different grids')
    nu = nu.normalized()
    coords = nu.support.unit_coordinates()
    frostman = _require_frostman(coords, nu.weights, params.alpha * nu.d, nu.k, params.epsilon)
    sampled = _sample(charts, params)

    def cut(chart: Chart) -> FiberCut:
        grid = _chart_image(nu.support, chart)
        return fiber_cut(grid, nu.weights, shape, params.alpha, params.epsilon)

    cuts = parallel_map(cut, sampled, threads)
    return _measure_report('slicing-measure', cuts, 2.0 ** (-nu.k), shape, params, frostman.to_dict())


def sl2_shape(k: int) -> ShapeVector:
    """R = [0,1]E + [0,δ^{1/2}]H + [0,δ]F on the flag ℝE ⊂ ℝE⊕ℝH ⊂ 𝔤."""
    return ShapeVector((1, 1, 1), SL2_SHAPE_EXPONENTS, k)


def sl2_slicing_experiment(mats: np.ndarray, params: ExperimentParams, k: int = 4,
                           weights: Optional[np.ndarray] = None, charts: Optional[ChartFamily] = None,
                           chart_radius: float = math.inf, threads: Optional[int] = None) -> SlicingReport:
    """
    Multislicing on SL₂(ℝ): each g is read through φ_θ and cut with the
    shape (0, 1/2, 1).

    Atoms with no φ_θ-preimage inside chart_radius are reported as
    outside mass and excluded from the cut.

    Args:
        mats: (N, 2, 2) group elements in B₁
        params: exponents and sampling knobs
        k: δ = 2^{-k}, must be even
        weights: atom masses (uniform when omitted)
        charts: an 'sl2' chart family (uniform on K when omitted)
        chart_radius: largest admissible ‖φ_θ(g)‖

    Raises:
        DomainError: an atom is outside B₁
        PreconditionViolated: σ concentrates, or ν is not Frostman
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim != 3 or mats.shape[1:] != (2, 2) or mats.shape[0] == 0:
        raise InvalidInputError('expected a nonempty (N, 2, 2) array of group elements')
    shape = sl2_shape(k)
    w = np.full(mats.shape[0], 1.0 / mats.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    logs, valid = log_batch(mats)
    norms = np.linalg.norm(np.where(valid[:, None], logs, 0.0), axis=1)
    if not valid.all() or np.any(norms > 1 + 1e-9):
        raise DomainError(f'{int((~valid | (norms > 1 + 1e-9)).sum())} atoms lie outside the unit ball of the group')

    family = charts or ChartFamily.sl2()
    sampled = family.sample(params.trials, params.seed)
    if not all(isinstance(c, Sl2Chart) for c in sampled):
        raise InvalidInputError('sl2 slicing needs an sl2 chart family')
    delta = 2.0 ** (-k)
    thetas = np.array([c.theta for c in sampled])
    sigma = circle_concentration_check(thetas, params.kappa, dyadic_scales(k, params.epsilon),
                                       slack=delta ** (-params.epsilon))
    if not sigma.passes:
        raise PreconditionViolated(
            f'σ concentrates on K (worst ratio {sigma.worst_ratio:.4g})',
            condition='sigma-noncon',
            details=sigma.to_dict(),
        )
    frostman = _require_frostman(logs, w, 3 * params.alpha, k, params.epsilon)

    def cut(chart: Sl2Chart) -> FiberCut:
        coords, inside = phi_theta_batch(np.full(mats.shape[0], chart.theta), mats, chart.variant, chart_radius)
        outside = float(w[~inside].sum())
        if not inside.any():
            return FiberCut(0.0, 0.0, 0, outside_mass=outside)
        result = fiber_cut(image_grid_points(coords[inside], k), w[inside], shape, params.alpha, params.epsilon)
        result.outside_mass = outside
        return result

    cuts = parallel_map(cut, sampled, threads)
    return _measure_report('sl2-slicing', cuts, delta, shape, params, frostman.to_dict(), {
        'sigma': sigma.to_dict(),
        'mean_outside_mass': float(np.mean([c.outside_mass for c in cuts])),
    })


@dataclass
class ImageCoveringReport:
    rho: float
    domain_count: int
    image_count: int
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.image_count <= self.upper

    def to_dict(self) -> dict:
        return {
            'rho': self.rho,
            'domain_count': self.domain_count,
            'image_count': self.image_count,
            'lower': self.lower,
            'upper': self.upper,
            'holds': self.holds,
        }


def image_covering_check(A: DyadicSet, chart: Chart, r, epsilon: float) -> ImageCoveringReport:
    """
    4^{-d}δ^{dε}𝒩_ρ(A) ≤ 𝒩_ρ(φA) ≤ 4^dδ^{-dε}𝒩_ρ(A) at ρ = δ^r.
    """
    shape = ShapeVector.isotropic(A.d, A.k, r)
    domain = covering_number(A, shape).count
    image = covering_count(_chart_image(A, chart), shape)
    delta = 2.0 ** (-A.k)
    factor = 4.0 ** A.d * delta ** (-A.d * epsilon)
    return ImageCoveringReport(float(delta ** float(shape.exponents[0])), domain, image, domain / factor, domain * factor)
