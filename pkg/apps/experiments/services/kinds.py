"""
Runners for every experiment kind.

Each runner takes validated params, the run seed and the worker cap, and
returns an ExperimentResult whose rows become results.csv. Cells are scalars
so the CSV never needs quoting.
"""

import logging
import math
from fractions import Fraction
from typing import Any, Iterable, Optional

import numpy as np

from apps.arith.services import as_algebraic, denominator, mahler, mahler_composition_check
from apps.common.parallel import parallel_map
from apps.common.rng import child_seed, stream
from apps.dyadic.services import (
    AtomicMeasure,
    DyadicSet,
    Filtration,
    ShapeVector,
    covering_number,
    entropy_covering_bounds,
    projection_submodularity,
    regularize_report,
    submodular_split,
)
from apps.modular_space.services import rational_points, separation_profile
from apps.sl2_core.services import Sl2Element, straightening_check
from apps.sl2_core.services.straightening import DEFAULT_FACTOR
from apps.slicing_lab.services import (
    ProjectedChart,
    SlicingReport,
    counterexample_suite,
    linearization_gap,
    sl2_slicing_experiment,
    slicing_measure_experiment,
    subcritical_experiment,
    supercritical_experiment,
)
from apps.slicing_lab.services.test_sets import lie_ball_sample
from apps.walk.services import (
    bootstrap_chain,
    bootstrap_experiment,
    discrepancy_regression,
    drift_report,
    equidistribution_experiment,
    finite_orbit_discrepancy,
    haar_measure,
    lyapunov_estimate,
    persistence_check,
    recurrence_tail,
    robust_dimension,
    robustness_certificate,
    theta_noncon_report,
    wasserstein_estimate,
)
from apps.walk.services.robustness import dyadic_radii

from .. import serializers as schemas
from .builders import (
    BUILD_STREAM,
    build_charts,
    build_input,
    build_params,
    build_set,
    build_shape,
    build_start,
    build_walk,
    finite_or_inf,
    shift_point,
)
from .registry import ExperimentResult, register

logger = logging.getLogger(__name__)

QUARTERS = tuple(Fraction(j, 4) for j in range(5))
MAHLER_TOLERANCE = 1e-9


def cell(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return ' '.join(str(cell(v)) for v in value)
    if isinstance(value, Fraction):
        return f'{value.numerator}/{value.denominator}'
    return value


def table(records: Iterable[dict], columns: Optional[list[str]] = None) -> tuple[list[str], list[list]]:
    """Rows of dicts as (header, rows); columns default to first-seen key order."""
    records = list(records)
    if columns is None:
        columns = []
        for record in records:
            columns.extend(key for key in record if key not in columns)
    return columns, [[cell(record.get(key)) for key in columns] for record in records]


def _slicing_result(report: SlicingReport) -> ExperimentResult:
    header, rows = table(report.csv_rows())
    if not header:
        header = ['theta_index', 'covering', 'target', 'exceptional_flag']
    return ExperimentResult(header, rows, report.to_dict(), report.passes)


# dyadic


def _random_set(rng: np.random.Generator, d: int, k: int, n: int) -> DyadicSet:
    # half the trials draw from a random corner block
    top = k if rng.random() < 0.5 else int(rng.integers(1, k + 1))
    return DyadicSet(d, k, rng.integers(0, 1 << top, size=(n, d)))


def _coordinate_subset(rng: np.random.Generator, d: int) -> tuple[int, ...]:
    mask = rng.integers(0, 2, size=d).astype(bool)
    if not mask.any():
        mask[int(rng.integers(d))] = True
    return tuple(int(i) for i in np.flatnonzero(mask))


def _transfer_holds(A: DyadicSet, rng: np.random.Generator) -> bool:
    """𝒩_𝒫(A′)·𝒩_𝒬(A) ≥ 𝒩_𝒬(A′)·𝒩_𝒫(A) for a random A′ ⊆ A, A regular between 𝒫 and 𝒬."""
    if len(A) == 0:
        return True
    sub = A.subset(rng.random(len(A)) < 0.4)
    if len(sub) == 0:
        return True
    P = ShapeVector.isotropic(A.d, A.k, Fraction(1, 2))
    Q = ShapeVector.isotropic(A.d, A.k, 1)
    lhs = covering_number(sub, P).count * covering_number(A, Q).count
    return lhs >= covering_number(sub, Q).count * covering_number(A, P).count


@register('combinatorics_suite', schemas.CombinatoricsSuiteSerializer,
          'Regularization bound, regular-subset transfer, submodularity, projection submodularity and '
          'the entropy sandwich on seeded random dyadic sets')
def run_combinatorics_suite(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    cs = [Fraction(c) for c in params['cs']]

    def trial(i: int) -> list:
        rng = stream(seed, 0, i)
        d = int(rng.choice(params['dims']))
        k = int(rng.choice(params['ks']))
        A = _random_set(rng, d, k, int(rng.integers(1, params['max_points'] + 1)))
        regularized = regularize_report(A, Filtration.isotropic(d, k, QUARTERS))
        regular = regularized.bound_holds
        transfer = _transfer_holds(regularized.subset, rng)
        P = ShapeVector.from_coordinate_exponents([QUARTERS[j] for j in rng.integers(0, 5, size=d)], k)
        Q = ShapeVector.from_coordinate_exponents([QUARTERS[j] for j in rng.integers(0, 5, size=d)], k)
        c = cs[int(rng.integers(len(cs)))]
        _, split = submodular_split(A, P, Q, c)
        _, projection = projection_submodularity(A, _coordinate_subset(rng, d), _coordinate_subset(rng, d), c)
        weights = rng.uniform(0.1, 1.0, size=len(A))
        nu = AtomicMeasure(A, weights / weights.sum())
        entropy = all(entropy_covering_bounds(nu, P, c_).holds for c_ in cs)
        return [i, d, k, len(A), regular, transfer, split.holds, split.mass_kept, projection.holds, entropy]

    rows = parallel_map(trial, range(params['trials']), threads)
    header = ['trial', 'd', 'k', 'points', 'regularization', 'transfer', 'submodularity', 'mass_kept',
              'projection', 'entropy']
    failures = {name: sum(1 for row in rows if not row[j]) for j, name in enumerate(header) if j >= 4}
    return ExperimentResult(header, rows, {'trials': len(rows), 'failures': failures},
                            passed=not any(failures.values()))


@register('covering_number', schemas.CoveringSerializer, 'Covering numbers of one set under several shapes')
def run_covering_number(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    A = build_set(params['set'], seed)
    rows = []
    for i, options in enumerate(params['shapes']):
        shape = build_shape(options, A.k)
        report = covering_number(A, shape)
        rows.append([i, cell(list(shape.dims)), cell(list(shape.exponents)), report.count,
                     cell(report.cell_volume)])
    return ExperimentResult(['shape_index', 'dims', 'exponents', 'covering', 'cell_volume'], rows,
                            {'points': len(A), 'd': A.d, 'k': A.k}, passed=True)


# slicing_lab


@register('subcritical_experiment', schemas.SubcriticalSerializer,
          'Exceptional-θ fraction below the subcritical covering target')
def run_subcritical(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    A = build_set(params['set'], seed)
    report = subcritical_experiment(A, build_charts(params['charts']), build_shape(params['shape'], A.k),
                                    build_params(params, seed), threads)
    return _slicing_result(report)


@register('supercritical_experiment', schemas.SupercriticalSerializer,
          'Exceptional-θ fraction below the supercritical covering target')
def run_supercritical(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    A = build_set(params['set'], seed)
    report = supercritical_experiment(A, build_charts(params['charts']), build_shape(params['shape'], A.k),
                                      build_params(params, seed), threads)
    return _slicing_result(report)


@register('slicing_measure_experiment', schemas.SlicingMeasureSerializer,
          'Mass removed by cutting over-full image rectangles of the uniform measure on a set')
def run_slicing_measure(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    A = build_set(params['set'], seed)
    report = slicing_measure_experiment(AtomicMeasure.uniform(A), build_charts(params['charts']),
                                        build_shape(params['shape'], A.k), build_params(params, seed), threads)
    return _slicing_result(report)


@register('sl2_slicing_experiment', schemas.Sl2SlicingSerializer,
          'Multislicing of a measure on the unit ball of SL2 with the shape (0, 1/2, 1)')
def run_sl2_slicing(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mats = lie_ball_sample(stream(seed, BUILD_STREAM, 5), params['samples'], params['radius'])
    report = sl2_slicing_experiment(mats, build_params(params, seed), k=params['k'],
                                    charts=build_charts(params['charts']),
                                    chart_radius=finite_or_inf(params['chart_radius']), threads=threads)
    return _slicing_result(report)


@register('counterexample_suite', schemas.CounterexampleSuiteSerializer,
          'The planar two-scale and spatial plane-plus-axis counterexamples')
def run_counterexample_suite(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    report = counterexample_suite(params['ks'], params['thetas'], seed, params['radii'])
    header, rows = table(report.planar)
    return ExperimentResult(header, rows, report.to_dict(), report.passes, extra_tables={
        'slopes': (['theta_index', 'slope'], [[i, s] for i, s in enumerate(report.slopes)]),
        'spatial': table(report.spatial),
    })


@register('linearization_gap', schemas.LinearizationSerializer,
          'Both sides of the entropy linearization inequality along a scale ladder')
def run_linearization_gap(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    A = build_set(params['set'], seed)
    chart = build_charts(params['charts']).sample(1, seed)[0]
    report = linearization_gap(AtomicMeasure.uniform(A), ProjectedChart(chart, tuple(params['keep'])),
                               q=params['q'], o_term=params['o_term'], seed=seed)
    rows = [[i, a, b, level] for i, ((a, b), level) in enumerate(zip(report.ladder, report.levels))]
    return ExperimentResult(['level', 'a', 'b', 'entropy'], rows, report.to_dict(), report.holds)


# sl2_core


@register('straightening_check', schemas.StraighteningSerializer,
          'Ad(a^t)-rescaled rectangle preimages stay inside a bounded box')
def run_straightening_check(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    h = Sl2Element.from_dict(params['h']) if params.get('h') else None
    factor = params['factor'] if params['factor'] is not None else DEFAULT_FACTOR
    report = straightening_check(params['t'], params['rho'], h, params['n_samples'], factor, seed)
    header, rows = table([report.to_dict()], ['t', 'rho', 'factor', 'samples', 'accepted', 'max_ratio', 'passes'])
    return ExperimentResult(header, rows, report.to_dict(), report.passes)


# walk


@register('lyapunov_estimate', schemas.LyapunovSerializer, 'Top Lyapunov exponent of the adjoint walk at n and 2n')
def run_lyapunov(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    estimate = lyapunov_estimate(mu, params['n'], params['N'], seed, threads)
    rows = [
        [estimate.n, estimate.value, estimate.half_width],
        [2 * estimate.n, estimate.value_2n, estimate.half_width_2n],
    ]
    return ExperimentResult(['steps', 'estimate', 'half_width'], rows,
                            {'mu': mu.to_dict(), **estimate.to_dict()}, estimate.agrees)


@register('drift_report', schemas.DriftSerializer, 'Contraction of the u0, uQ or omega drift functions')
def run_drift(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    x = build_start(params.get('start'), seed)
    kind = params['drift']
    if kind == 'omega':
        start = (x, shift_point(x, params['partner_offset']))
    else:
        start = x
    catalog = rational_points(params['Q']) if kind == 'uQ' else None
    report = drift_report(mu, kind, start, params['n_max'], params['N'], params['s'], params['C'], catalog, seed)
    header, rows = table(report.rows, ['n', 'mean', 'ratio'])
    return ExperimentResult(header, rows, report.to_dict(), report.passes)


@register('recurrence_tail', schemas.RecurrenceSerializer, 'Exponential tail of the distance to the base point')
def run_recurrence(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    tail = recurrence_tail(mu, build_start(params.get('start'), seed), params['n'], params['N'], params['radii'], seed)
    rows = [[R, m] for R, m in zip(tail.radii, tail.masses)]
    decays = tail.fit.points < 2 or tail.rate > 0
    return ExperimentResult(['R', 'mass'], rows, tail.to_dict(), decays)


@register('theta_noncon_report', schemas.ThetaNonconSerializer,
          'Non-concentration of the Cartan angles of random products near subspaces')
def run_theta_noncon(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    report = theta_noncon_report(mu, params['n'], params['N'], params['rhos'], params['budget'], seed, threads)
    rows = [[rho, a, b] for rho, a, b in zip(report.rhos, report.line['max_mass'], report.plane['max_mass'])]
    return ExperimentResult(['rho', 'line_mass', 'plane_mass'], rows, report.to_dict(), report.passes)


@register('wasserstein_estimate', schemas.WassersteinSerializer,
          'Tent-dictionary lower bound for the Wasserstein distance of two samples')
def run_wasserstein(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    first = build_input(params['first'], child_seed(seed, 1))
    second = build_input(params['second'], child_seed(seed, 2))
    estimate = wasserstein_estimate(first, second, params['beta'], params['dictionary_size'], seed)
    rows = [[params['beta'], estimate.dictionary_size, estimate.value, estimate.best_width]]
    return ExperimentResult(['beta', 'dictionary_size', 'estimate', 'best_width'], rows, estimate.to_dict(), True)


@register('equidistribution_experiment', schemas.EquidistributionSerializer,
          'Decay of the Wasserstein lower bound between the walk and the reference measure')
def run_equidistribution(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    curve = equidistribution_experiment(mu, build_start(params.get('start'), seed), params['horizon'], params['N'],
                                        params['beta'], params['reference'], params['step'],
                                        params['dictionary_size'], seed, threads)
    return ExperimentResult(['n', 'estimate', 'floor'], curve.csv_rows(), curve.to_dict(), curve.decays)


BOOTSTRAP_COLUMNS = ['step', 'delta', 'alpha', 'tau', 'steps', 'alpha_before', 'alpha_after', 'gain',
                     'output_certified', 'stopped']


@register('bootstrap_experiment', schemas.BootstrapSerializer,
          'Dimension increment of a robust measure under the walk, singly or chained')
def run_bootstrap(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    nu0 = build_input(params.get('input'), seed, mu)
    if params['chain']:
        records = bootstrap_chain(mu, nu0, params['delta'], params['kappa'], params['epsilon'], params['chain'],
                                  params['tau'], seed, threads)
        header, rows = table(records, BOOTSTRAP_COLUMNS)
        completed = all('stopped' not in r for r in records)
        return ExperimentResult(header, rows, {'chain': records, 'completed': completed}, completed)
    report = bootstrap_experiment(mu, nu0, params['delta'], params['epsilon'], params['alpha'], params['tau'],
                                  params['kappa'], seed=seed, threads=threads)
    header, rows = table([{'step': 0, **report.to_dict()}], BOOTSTRAP_COLUMNS)
    return ExperimentResult(header, rows, report.to_dict(), report.output_certified is not False)


@register('finite_orbit_discrepancy', schemas.FiniteOrbitSerializer,
          'Discrepancy of finite orbits against Haar measure as the orbit grows')
def run_finite_orbits(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    haar = haar_measure(params['haar_samples'], seed)
    reports = parallel_map(
        lambda q: finite_orbit_discrepancy(mu, q, params['dictionary_size'], params['haar_samples'], seed, haar),
        params['qs'], threads,
    )
    fit = discrepancy_regression(reports)
    header, rows = table([r.to_dict() for r in reports], ['q', 'R', 'discrepancy', 'dictionary_size'])
    decreasing = len(reports) < 2 or fit.slope < 0
    return ExperimentResult(header, rows, {'orbits': [r.to_dict() for r in reports], 'fit': fit.to_dict()}, decreasing)


@register('persistence_check', schemas.PersistenceSerializer,
          'Cusp and ball persistence inequalities after n steps')
def run_persistence(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    mu = build_walk(params['mu'])
    nu = build_input(params.get('input'), seed, mu)
    report = persistence_check(mu, nu, params['n'], params['rho'], params['r'], params['s'], params['lam'],
                               params['slack'], seed)
    record = report.to_dict()
    record['s_fitted'] = record.pop('s_fit') is not None
    header, rows = table([record])
    return ExperimentResult(header, rows, report.to_dict(), report.passes)


@register('robustness_certificate', schemas.RobustnessSerializer,
          'Robustness certificate of an empirical measure and its robust dimension per scale')
def run_robustness(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    nu = build_input(params.get('input'), seed)
    interval = (params['rho_min'], params['rho_max'])
    cert = robustness_certificate(nu, params['alpha'], interval, params['tau'])
    rows = [[rho, robust_dimension(nu, rho, params['tau'])] for rho in dyadic_radii(*interval)]
    return ExperimentResult(['rho', 'robust_dimension'], rows, cert.to_dict(), cert.passes)


# arith


@register('mahler_suite', schemas.MahlerSerializer,
          'Mahler measures, denominators and the composition bound')
def run_mahler(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    rows = []
    for text in params['numbers']:
        alpha = as_algebraic(text)
        m, den = mahler(alpha), denominator(alpha)
        inverse = math.nan if alpha.minpoly == (1, 0) else mahler(alpha.inverse())
        symmetric = math.isnan(inverse) or abs(inverse - m) <= MAHLER_TOLERANCE * max(1.0, m)
        rows.append([text, m, den, inverse, den <= m * (1 + MAHLER_TOLERANCE), symmetric])
    cases = []
    for case in params.get('cases', []):
        report = mahler_composition_check(case['polynomial'], case['alphas'])
        cases.append([case['polynomial'], cell(case['alphas']), report.lhs, report.rhs, report.passes])
    passed = all(row[4] and row[5] for row in rows) and all(row[4] for row in cases)
    return ExperimentResult(
        ['number', 'mahler', 'denominator', 'mahler_inverse', 'denominator_bounded', 'inverse_symmetric'], rows,
        {'numbers': len(rows), 'cases': len(cases)}, passed,
        extra_tables={'composition': (['polynomial', 'alphas', 'lhs', 'rhs', 'passes'], cases)},
    )


# modular_space


@register('rational_separation', schemas.SeparationSerializer,
          'Minimal separation of rational points against the denominator bound')
def run_separation(params: dict, seed: int, threads: Optional[int]) -> ExperimentResult:
    profile = separation_profile(params['qs'])
    rows = [[q, n, s] for q, n, s in zip(profile.qs, profile.counts, profile.separations)]
    return ExperimentResult(['Q', 'count', 'min_separation'], rows, profile.to_dict(),
                            all(s > 0 for s in profile.separations))
