"""
Tests for the modular space: reduction, metric, injectivity radius, Haar sampling, rational points.
"""

import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy import stats

from apps.common.exceptions import InvalidInputError, MassDeficitError, ResourceError
from apps.common.fitting import line_fit, loglog_fit
from apps.common.rng import stream
from apps.sl2_core.services import Sl2Element, adjoint, exp_vec

from .services import (
    BallCounter,
    XPoint,
    compact_sample,
    compact_sample_batch,
    dist_x,
    distance_to_base,
    distances_to,
    haar_sample,
    haar_sample_batch,
    injectivity_radius,
    injectivity_radius_batch,
    is_reduced_batch,
    lattice_search_self_check,
    rational_points,
    reduce,
    reduce_batch,
    separation_profile,
)


def random_unimodular(rng: np.random.Generator, bound: int = 50) -> Sl2Element:
    """A random element of SL₂(ℤ) with entries up to bound."""
    while True:
        a, b = rng.integers(-bound, bound + 1, size=2)
        if math.gcd(int(a), int(b)) != 1:
            continue
        # solve a·d − b·c = 1 and shift along the solution line to stay within bound
        g, x, y = _egcd(int(a), int(b))
        d, c = x, -y
        m = np.array([[a, b], [c, d]], dtype=float)
        if np.max(np.abs(m)) <= bound:
            return Sl2Element.from_matrix(m)


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _egcd(b, a % b)
    return g, y, x - (a // b) * y


def near_base(rng: np.random.Generator, scale: float = 0.3) -> XPoint:
    return reduce(exp_vec(rng.normal(0, scale, 3)))


def random_element(rng: np.random.Generator) -> Sl2Element:
    m = rng.standard_normal((2, 2))
    if np.linalg.det(m) < 0:
        m[:, 0] *= -1
    return Sl2Element.from_matrix(m, renormalize=True)


class ReduceTests(SimpleTestCase):
    """Tests for canonical representatives."""

    def test_identity_and_integer_matrices(self):
        """I and every integer unimodular matrix reduce to x₀."""
        x0 = XPoint.base()
        self.assertEqual(reduce(Sl2Element.identity()), x0)
        for m in ([[0, -1], [1, 0]], [[2, 1], [1, 1]], [[1, 5], [0, 1]], [[-1, 0], [0, -1]]):
            self.assertEqual(reduce(Sl2Element.from_matrix(m)), x0, f'{m} did not reduce to x0')

    def test_column_operation_example(self):
        """[[1, 0.6], [0, 1]] reduces to a rep with |b| ≤ 1/2."""
        x = reduce(Sl2Element.upper(0.6))
        self.assertLessEqual(abs(x.rep.b), 0.5)
        self.assertTrue(x.rep.close_to(Sl2Element.upper(-0.4), 1e-12))

    def test_lambda_invariance(self):
        """g and g·λ give the same point for 1000 random λ with entries ≤ 50."""
        rng = np.random.default_rng(5)
        for i in range(1000):
            g = random_element(rng)
            lam = random_unimodular(rng)
            self.assertEqual(reduce(g), reduce(g @ lam), f'case {i}')

    def test_idempotent(self):
        """Reducing a reduced representative changes nothing."""
        rng = np.random.default_rng(6)
        for _ in range(200):
            x = reduce(random_element(rng))
            self.assertEqual(reduce(x.rep), x)
            self.assertTrue(is_reduced_batch(x.matrix()))


class MetricTests(SimpleTestCase):
    """Tests for dist_X."""

    def test_zero_on_diagonal(self):
        """dist_X(x, x) = 0."""
        x = reduce(random_element(np.random.default_rng(1)))
        self.assertEqual(dist_x(x, x), 0.0)

    def test_small_unipotent_displacement(self):
        """dist_X(exp(vE)·x₀, x₀) = |v| for |v| ≤ 0.1."""
        x0 = XPoint.base()
        for v in (-0.1, -0.03, 0.02, 0.1):
            x = reduce(exp_vec((v, 0, 0)))
            self.assertAlmostEqual(dist_x(x, x0), abs(v), places=12)

    def test_symmetric(self):
        """dist_X is symmetric."""
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = reduce(random_element(rng))
            y = reduce(exp_vec(rng.normal(0, 0.05, 3)) @ x.rep)
            self.assertAlmostEqual(dist_x(x, y), dist_x(y, x), places=10)

    def test_triangle_inequality(self):
        """d(x, z) ≤ d(x, y) + d(y, z) on separated small displacements."""
        base = reduce(Sl2Element.diagonal(1.3) @ Sl2Element.rotation(0.4))
        pts = [base.translate(exp_vec(v)) for v in ((0.05, 0, 0), (0, 0.04, 0), (0, 0, -0.06), (0.03, -0.03, 0.02))]
        pts.append(base)
        for x in pts:
            for y in pts:
                for z in pts:
                    self.assertLessEqual(dist_x(x, z), dist_x(x, y) + dist_x(y, z) + 1e-6)

    def test_left_translation_lipschitz(self):
        """dist_X(g·x, g·y) ≤ ‖Ad(g)‖·dist_X(x, y) at small scale."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = reduce(random_element(rng))
            y = x.translate(exp_vec(rng.normal(0, 0.02, 3)))
            g = exp_vec(rng.normal(0, 0.3, 3))
            bound = np.linalg.norm(adjoint(g), 2) * dist_x(x, y)
            self.assertLessEqual(dist_x(x.translate(g), y.translate(g)), bound + 1e-9)

    def test_distance_grows_into_cusp(self):
        """dist(diag(T, 1/T)·x₀, x₀) increases with T."""
        ds = [distance_to_base(reduce(Sl2Element.diagonal(T))) for T in (2.0, 4.0, 8.0, 16.0)]
        self.assertEqual(ds, sorted(ds))

    def test_zero_on_repeated_sample_points(self):
        """Stacked copies of one rep are at distance exactly 0."""
        x = reduce(random_element(np.random.default_rng(9)))
        values, coarse = distances_to(x, np.stack([x.matrix()] * 3))
        self.assertEqual(values.tolist(), [0.0, 0.0, 0.0])
        self.assertFalse(coarse.any())

    @override_settings(MULTISLICE_LATTICE_SEARCH_CAP=6)
    def test_degraded_paths_warn(self):
        """A capped lattice search and the chained coarse bound log at WARNING."""
        deep = reduce(Sl2Element.diagonal(16.0))
        with self.assertLogs('apps.modular_space.services.metric', level='WARNING') as logs:
            distance_to_base(deep)
        output = '\n'.join(logs.output)
        self.assertIn('capped at 6', output)
        self.assertIn('chained bound', output)


class InjectivityRadiusTests(SimpleTestCase):
    """Tests for the injectivity radius."""

    def test_base_point(self):
        """inj(x₀) = ‖E‖/2 = 1/2, attained by unipotent λ."""
        self.assertAlmostEqual(injectivity_radius(XPoint.base()), 0.5, delta=1e-6)

    def test_cusp_decay(self):
        """inj(diag(T, 1/T)·x₀) = T⁻²/2 and decreases in T."""
        values = [injectivity_radius(reduce(Sl2Element.diagonal(T))) for T in (2.0, 4.0, 10.0)]
        self.assertAlmostEqual(values[-1], 0.005, delta=1e-9)
        self.assertEqual(values, sorted(values, reverse=True))

    def test_comparison_along_ray(self):
        """|log inj| and dist(x, x₀) grow together along a cusp ray."""
        Ts = np.geomspace(2, 50, 8)
        xs = [reduce(Sl2Element.diagonal(T)) for T in Ts]
        log_inj = np.abs(np.log(injectivity_radius_batch(np.stack([x.matrix() for x in xs]))))
        dist = np.array([distance_to_base(x) for x in xs])
        fit = line_fit(dist, log_inj)
        self.assertGreater(fit.slope, 0.5)
        self.assertLess(fit.slope, 4.0)
        self.assertGreater(fit.rvalue, 0.99)

    def test_doubling_search_bound(self):
        """Doubling the λ-enumeration bound changes nothing on sample points."""
        rng = np.random.default_rng(4)
        pts = [near_base(rng) for _ in range(10)]
        self.assertTrue(lattice_search_self_check(pts))

    def test_batch_matches_single(self):
        """The batched injectivity radius agrees with the scalar one."""
        rng = np.random.default_rng(8)
        pts = [near_base(rng) for _ in range(5)]
        batch = injectivity_radius_batch(np.stack([p.matrix() for p in pts]))
        for p, value in zip(pts, batch):
            self.assertAlmostEqual(injectivity_radius(p), value, places=12)


class HaarSampleTests(SimpleTestCase):
    """Tests for the Haar sampler."""

    def test_single_point(self):
        """One draw is a reduced XPoint."""
        x = haar_sample(stream(1, 0))
        self.assertIsInstance(x, XPoint)
        self.assertTrue(is_reduced_batch(x.matrix()))

    def test_small_cutoff_rejected(self):
        """A cutoff losing more than 1e-6 of the mass raises."""
        with self.assertRaises(MassDeficitError) as ctx:
            haar_sample(stream(1, 0), height_cutoff=1000.0)
        self.assertGreater(ctx.exception.deficit, 1e-6)

    def test_compact_sample_accepts_low_cutoff(self):
        """Conditioning on height ≤ Y keeps systole² ≥ 1/Y and skips the mass check."""
        reps = compact_sample_batch(stream(1, 1), 5000, height_cutoff=2.0)
        self.assertTrue(np.all(is_reduced_batch(reps)))
        systole2 = np.sum(reps[:, :, 0] ** 2, axis=1)
        self.assertGreaterEqual(systole2.min(), 0.5 - 1e-9)
        x = compact_sample(stream(1, 2), 3.0)
        self.assertIsInstance(x, XPoint)
        self.assertGreaterEqual(x.systole() ** 2, 1 / 3.0 - 1e-9)

    def test_compact_sample_rejects_cutoff_below_one(self):
        with self.assertRaises(InvalidInputError):
            compact_sample(stream(1, 0), 0.9)

    def test_cusp_mass_decay(self):
        """The mass of {inj ≤ r} decays like a positive power of r."""
        reps = haar_sample_batch(stream(2, 0), 20000)
        inj = injectivity_radius_batch(reps)
        rs = np.array([0.01, 0.02, 0.05, 0.1])
        mass = np.array([(inj <= r).mean() for r in rs])
        fit = loglog_fit(rs, mass)
        self.assertGreater(fit.slope, 0.5)
        self.assertLess(fit.slope, 1.5)

    def test_systole_matches_height_law(self):
        """P(systole² < s) = 3s/π for s ≤ 1."""
        reps = haar_sample_batch(stream(3, 0), 50000)
        systole2 = np.sum(reps[:, :, 0] ** 2, axis=1)
        for s in (0.1, 0.5):
            self.assertAlmostEqual((systole2 < s).mean(), 3 * s / math.pi, delta=0.01)

    def test_invariance_under_rotation(self):
        """A fixed rotation pushes the sample forward to the same law (KS p > 0.01)."""
        reps = haar_sample_batch(stream(4, 0), 20000)
        moved = reduce_batch(Sl2Element.rotation(0.9).matrix() @ reps)
        fresh = haar_sample_batch(stream(4, 1), 20000)

        def observable(m):
            return np.abs(m[:, 0, 0]) + 0.5 * m[:, 1, 1] ** 2

        self.assertGreater(stats.ks_2samp(observable(moved), observable(fresh)).pvalue, 0.01)

    def test_ball_counter_matches_brute_force(self):
        """cKDTree-backed ball masses agree with direct distances."""
        reps = haar_sample_batch(stream(5, 0), 3000)
        counter = BallCounter(reps)
        center = XPoint.from_reduced(reps[0])
        direct, _ = distances_to(center, reps)
        for r in (0.05, 0.2):
            self.assertAlmostEqual(counter.mass(center, r), (direct <= r).mean(), places=12)


class RationalPointTests(SimpleTestCase):
    """Tests for the rational point catalog."""

    def test_q_one(self):
        """D_1 is exactly {x₀}."""
        catalog = rational_points(1)
        self.assertEqual(catalog.points, [XPoint.base()])
        self.assertEqual(catalog.exact, [(Fraction(1), Fraction(0), Fraction(0), Fraction(1))])

    def test_q_two(self):
        """D_2 contains the diag(2, 1/2)-coset and is separated."""
        catalog = rational_points(2)
        self.assertGreater(len(catalog), 1)
        self.assertIn(reduce(Sl2Element.diagonal(2.0)), catalog.points)
        self.assertGreater(catalog.min_separation, 0.0)
        for entries in catalog.exact:
            self.assertTrue(all(e.denominator <= 2 for e in entries))
            a, b, c, d = entries
            self.assertEqual(a * d - b * c, 1)

    def test_points_distinct(self):
        """Catalog points are pairwise at positive distance."""
        catalog = rational_points(3)
        for i, x in enumerate(catalog.points):
            for y in catalog.points[i + 1:]:
                self.assertGreater(dist_x(x, y), 0.0)

    def test_json_rationals(self):
        """Exact entries serialize as p/q strings."""
        payload = rational_points(2).to_dict()
        self.assertIn('1/2', {e for row in payload['points'] for e in row})

    @override_settings(MULTISLICE_RATIONAL_Q_MAX=8)
    def test_cap(self):
        """Q above the configured cap is a resource error."""
        with self.assertRaises(ResourceError):
            rational_points(9)

    def test_polynomial_separation(self):
        """log min_separation against log Q has a bounded negative slope."""
        profile = separation_profile([2, 3, 4, 6, 8])
        self.assertTrue(all(s > 0 for s in profile.separations))
        self.assertLess(profile.fit.slope, 0.0)
        self.assertGreater(profile.fit.slope, -8.0)
