"""
Tests for chart families, hypothesis checks and the slicing experiments.
"""

import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase, override_settings

from apps.common.exceptions import DomainError, InvalidInputError, PreconditionViolated
from apps.common.rng import stream
from apps.dyadic.services import AtomicMeasure, DyadicSet, ShapeVector, covering_number
from apps.sl2_core.services import exp_batch

from .services import (
    AffineChart,
    ChartFamily,
    ExperimentParams,
    FunctionChart,
    IsometryChart,
    ProjectedChart,
    Sl2Chart,
    SlicingReport,
    chart_distortion_check,
    circle_concentration_check,
    counterexample_suite,
    dyadic_scales,
    fold_chart,
    image_covering_check,
    linearization_gap,
    measure_frostman_check,
    noncon_condition_check,
    nonlinear_covering,
    scale_ladder,
    single_scale_check,
    sl2_slicing_experiment,
    slicing_measure_experiment,
    subcritical_experiment,
    supercritical_experiment,
)
from .services.experiments import adversarial_count
from .services.test_sets import (
    cantor_product,
    fiber_line,
    full_grid,
    lie_ball_sample,
    middle_half_cantor,
    two_scale_counterexample,
    uniform_measure,
)

LINE_FLAG = ((1, 1), (0, 1))


def line_shape(k: int) -> ShapeVector:
    return ShapeVector(LINE_FLAG[0], LINE_FLAG[1], k)


class TestSetTests(SimpleTestCase):
    """Builders of Cantor sets and counterexamples."""

    def test_cantor_size_and_digits(self):
        idx = middle_half_cantor(8)
        self.assertEqual(idx.size, 16)
        self.assertEqual(idx[:4].tolist(), [0, 3, 12, 15])

    def test_odd_k_rejected(self):
        with self.assertRaises(InvalidInputError):
            middle_half_cantor(7)

    def test_cantor_product_count(self):
        self.assertEqual(len(cantor_product(2, 8)), 256)
        self.assertEqual(len(cantor_product(3, 8)), 4096)


class ChartTests(SimpleTestCase):
    """Chart kinds and their differentials."""

    def test_isometry_singular_values(self):
        rng = stream(0, 9)
        for d in (2, 3):
            chart = ChartFamily.rotations(d).sampler(rng)
            np.testing.assert_allclose(chart.singular_values(), np.ones(d), atol=1e-12)

    def test_non_orthogonal_rejected(self):
        with self.assertRaises(InvalidInputError):
            IsometryChart(np.array([[2.0, 0.0], [0.0, 1.0]]))

    def test_numeric_differential_of_affine_map(self):
        M = np.array([[1.0, 2.0], [0.5, -1.0]])
        chart = FunctionChart(lambda x: x @ M.T, 2)
        x = np.array([[0.1, 0.2], [0.7, 0.4]])
        np.testing.assert_allclose(chart.differential(x), AffineChart(M).differential(x), atol=1e-6)

    def test_sampling_is_reproducible(self):
        family = ChartFamily.rotations(2)
        a = [c.rotation for c in family.sample(5, 11)]
        b = [c.rotation for c in family.sample(5, 11)]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_family_from_dict(self):
        family = ChartFamily.from_dict({'kind': 'sl2', 'distribution': 'dirac', 'theta': 0.2})
        charts = family.sample(3, 0)
        self.assertTrue(all(isinstance(c, Sl2Chart) and c.theta == 0.2 for c in charts))
        with self.assertRaises(InvalidInputError):
            ChartFamily.from_dict({'kind': 'moebius'})


class ParamsTests(SimpleTestCase):
    """Experiment parameter validation and report helpers."""

    def test_exponent_window(self):
        with self.assertRaises(InvalidInputError):
            ExperimentParams(kappa=0.3, alpha=0.2)
        with self.assertRaises(InvalidInputError):
            ExperimentParams(alpha=0.95, kappa=0.1)
        with self.assertRaises(InvalidInputError):
            ExperimentParams(epsilon=0.6)

    def test_round_trip_dict(self):
        params = ExperimentParams(kappa=0.2, alpha=0.5, epsilon=0.1, trials=8, seed=3)
        self.assertEqual(ExperimentParams.from_dict(params.to_dict()), params)

    def test_dyadic_scales(self):
        self.assertEqual(dyadic_scales(12, 0.25), [2.0 ** -j for j in range(3, 13)])

    def test_exceptional_fraction_monotone_in_threshold(self):
        report = SlicingReport('t', 0.01, 5.0, [1, 4, 6, 9, 12], [True, True, False, False, False], 0.5)
        fractions = [report.fraction_beyond(t) for t in (0, 2, 5, 7, 10, 20)]
        self.assertEqual(fractions, sorted(fractions))
        self.assertAlmostEqual(report.exceptional_fraction, 0.4)


class NonlinearCoveringTests(SimpleTestCase):
    """Covering numbers of chart images."""

    def test_identity_matches_covering_number(self):
        rng = np.random.default_rng(1)
        A = DyadicSet(2, 6, rng.integers(0, 64, size=(300, 2)))
        for r in ((0, 1), (Fraction(1, 2), 1), (Fraction(1, 3), Fraction(2, 3))):
            shape = ShapeVector((1, 1), r, 6)
            cover = nonlinear_covering(A, IsometryChart(np.eye(2)), shape)
            self.assertEqual(cover.count, covering_number(A, shape).count)

    def test_quarter_turn_swaps_axes(self):
        k = 6
        A = fiber_line(k)
        shape = line_shape(k)
        self.assertEqual(covering_number(A, shape).count, 1)
        turned = nonlinear_covering(A, ChartFamily.rotation_dirac(math.pi / 2).sampler(None), shape)
        self.assertEqual(turned.count, 1 << k)
        swapped = ShapeVector.from_coordinate_exponents([1, 0], k)
        self.assertEqual(turned.count, covering_number(A, swapped).count)

    def test_total_dominates_each_part(self):
        A = cantor_product(2, 8)
        shape = ShapeVector((1, 1), (Fraction(1, 2), 1), 8)
        for chart in ChartFamily.rotations(2).sample(8, 4):
            cover = nonlinear_covering(A, chart, shape)
            self.assertGreaterEqual(cover.count, cover.max_part)
            self.assertGreaterEqual(cover.sum_of_parts, cover.count)

    def test_undefined_chart(self):
        chart = FunctionChart(lambda x: np.where(x > 0.5, np.nan, x), 2, name='half')
        with self.assertRaises(DomainError):
            nonlinear_covering(full_grid(2, 4), chart, line_shape(4))

    def test_image_covering_within_bounds(self):
        A = cantor_product(2, 8)
        for chart in ChartFamily.rotations(2).sample(6, 2):
            self.assertTrue(image_covering_check(A, chart, Fraction(1, 2), 0.05).holds)

    def test_adversarial_count_keeps_fullest_cells(self):
        image = np.array([[0], [0], [0], [1], [2]])
        fine = np.array([[0], [1], [2], [3], [4]])
        self.assertEqual(adversarial_count(image, fine, 0.6), 1)
        self.assertEqual(adversarial_count(image, fine, 0.8), 2)
        self.assertEqual(adversarial_count(image, fine, 1.0), 3)


class DistortionTests(SimpleTestCase):
    """Bi-Lipschitz and second-order checks."""

    def test_isometry_is_exact(self):
        chart = ChartFamily.rotations(2).sampler(stream(0, 1))
        report = chart_distortion_check(chart, full_grid(2, 4), 0.05)
        self.assertTrue(report.exhaustive)
        self.assertAlmostEqual(report.min_ratio, 1.0, places=9)
        self.assertAlmostEqual(report.max_ratio, 1.0, places=9)
        self.assertLess(report.max_defect, 1e-9)
        self.assertTrue(report.passes)

    def test_fold_fails_with_witness(self):
        report = chart_distortion_check(fold_chart(), full_grid(2, 4), 0.1)
        self.assertFalse(report.passes)
        self.assertAlmostEqual(report.min_ratio, 0.0, places=12)
        i, j = report.witnesses['min_ratio']['pair']
        self.assertNotEqual(i, j)

    def test_sl2_chart_bounded(self):
        chart = Sl2Chart(0.3)
        A = full_grid(3, 3)
        report = chart_distortion_check(chart, A, 0.05)
        self.assertTrue(math.isfinite(report.required_epsilon))
        self.assertTrue(chart_distortion_check(chart, A, report.required_epsilon + 0.01).passes)

    def test_large_sets_are_sampled(self):
        report = chart_distortion_check(IsometryChart(np.eye(2)), full_grid(2, 6), 0.1, max_pairs=100)
        self.assertFalse(report.exhaustive)
        self.assertEqual(report.pairs, 100 * 99 // 2)


class ConditionTests(SimpleTestCase):
    """Non-concentration and Frostman checks."""

    def test_uniform_rotations_pass(self):
        report = noncon_condition_check(ChartFamily.rotations(2), cantor_product(2, 8), line_shape(8),
                                        kappa=0.5, epsilon=0.1, trials=128, points=2)
        self.assertTrue(report.passes)

    def test_dirac_rotation_fails(self):
        report = noncon_condition_check(ChartFamily.rotation_dirac(0.3), cantor_product(2, 8), line_shape(8),
                                        kappa=0.5, epsilon=0.1, trials=16, points=1)
        self.assertFalse(report.passes)

    def test_single_scale(self):
        self.assertFalse(single_scale_check(full_grid(2, 6), line_shape(6), 0.1).passes)
        report = single_scale_check(cantor_product(2, 8), line_shape(8), 0.1)
        self.assertTrue(report.passes)
        self.assertEqual(report.pairs[0]['lhs'], 16)

    def test_frostman(self):
        rhos = [2.0 ** -j for j in range(7)]
        grid = full_grid(2, 6).unit_coordinates()
        uniform = np.full(grid.shape[0], 1 / grid.shape[0])
        self.assertTrue(measure_frostman_check(grid, uniform, 1.0, rhos).passes)
        dirac = measure_frostman_check(np.array([[0.3, 0.3]]), np.array([1.0]), 1.0, rhos)
        self.assertFalse(dirac.passes)

    def test_circle(self):
        rhos = [2.0 ** -j for j in range(1, 9)]
        spread = np.linspace(0, 2 * math.pi, 256, endpoint=False)
        self.assertTrue(circle_concentration_check(spread, 0.5, rhos).passes)
        self.assertFalse(circle_concentration_check(np.full(16, 0.4), 0.5, rhos).passes)


class SubcriticalTests(SimpleTestCase):
    """Adversarial covering below the critical product."""

    def test_full_grid_has_no_exceptions(self):
        params = ExperimentParams(epsilon=0.1, trials=16, pair_budget=300)
        report = subcritical_experiment(full_grid(2, 6), ChartFamily.rotations(2), line_shape(6), params)
        self.assertEqual(report.exceptional_fraction, 0.0)
        self.assertTrue(report.passes)

    def test_irregular_set_refused(self):
        k = 8
        shape = ShapeVector((1, 1), (Fraction(1, 2), 1), k)
        with self.assertRaises(PreconditionViolated) as ctx:
            subcritical_experiment(two_scale_counterexample(k), ChartFamily.rotations(2), shape, ExperimentParams())
        self.assertEqual(ctx.exception.condition, 'regularity')

    def test_fold_refused(self):
        params = ExperimentParams(trials=2)
        with self.assertRaises(PreconditionViolated) as ctx:
            subcritical_experiment(full_grid(2, 4), ChartFamily.fixed(fold_chart()), line_shape(4), params)
        self.assertEqual(ctx.exception.condition, 'distortion')
        self.assertEqual(ctx.exception.details['theta_index'], 0)

    def test_cantor_product(self):
        params = ExperimentParams(epsilon=0.1, trials=32, pair_budget=200)
        report = subcritical_experiment(cantor_product(2, 12), ChartFamily.rotations(2), line_shape(12), params)
        self.assertLessEqual(report.exceptional_fraction, 0.05)

    @override_settings(MULTISLICE_THREADS=4)
    def test_deterministic_across_threads(self):
        params = ExperimentParams(epsilon=0.1, trials=8, pair_budget=100, seed=5)
        A = cantor_product(2, 8)
        first = subcritical_experiment(A, ChartFamily.rotations(2), line_shape(8), params)
        second = subcritical_experiment(A, ChartFamily.rotations(2), line_shape(8), params, threads=1)
        self.assertEqual(first.to_dict(), second.to_dict())
        self.assertEqual(first.csv_rows(), second.csv_rows())


class SupercriticalTests(SimpleTestCase):
    """Adversarial covering above the critical product."""

    def test_full_grid_refused(self):
        with self.assertRaises(PreconditionViolated) as ctx:
            supercritical_experiment(full_grid(2, 6), ChartFamily.rotations(2), line_shape(6), ExperimentParams())
        self.assertEqual(ctx.exception.condition, 'single-scale')

    def test_planar_cantor_gains(self):
        params = ExperimentParams(kappa=0.1, alpha=0.5, epsilon=0.05, trials=64, pair_budget=200)
        report = supercritical_experiment(cantor_product(2, 12), ChartFamily.rotations(2), line_shape(12), params)
        self.assertLessEqual(report.exceptional_fraction, 0.1)
        self.assertGreater(report.extra['median_gap'], 0)

    def test_spatial_cantor_gains(self):
        k = 8
        shape = ShapeVector((1, 1, 1), (0, Fraction(1, 2), 1), k)
        params = ExperimentParams(kappa=0.1, alpha=0.5, epsilon=0.05, trials=16, pair_budget=200, w_search_budget=64)
        report = supercritical_experiment(cantor_product(3, k), ChartFamily.rotations(3), shape, params)
        self.assertGreater(report.extra['median_gap'], 0)


class MeasureSlicingTests(SimpleTestCase):
    """Cutting over-full rectangles from Frostman measures."""

    def test_uniform_grid_keeps_everything(self):
        k = 6
        params = ExperimentParams(trials=16)
        report = slicing_measure_experiment(uniform_measure(full_grid(2, k)), ChartFamily.rotations(2),
                                            line_shape(k), params)
        self.assertEqual(report.values, [0.0] * 16)
        self.assertLessEqual(report.extra['max_fiber'], 4 * 2.0 ** -k)

    def test_dirac_refused(self):
        nu = AtomicMeasure.from_atoms(np.array([[5, 5]]), np.array([1.0]), 6)
        with self.assertRaises(PreconditionViolated) as ctx:
            slicing_measure_experiment(nu, ChartFamily.rotations(2), line_shape(6), ExperimentParams())
        self.assertEqual(ctx.exception.condition, 'frostman')

    def test_cantor_measure(self):
        k = 12
        params = ExperimentParams(kappa=0.1, alpha=0.5, epsilon=0.05, trials=16)
        report = slicing_measure_experiment(uniform_measure(cantor_product(2, k)), ChartFamily.rotations(2),
                                            line_shape(k), params)
        self.assertLessEqual(report.exceptional_fraction, 0.05)
        self.assertGreater(report.extra['epsilon_measured'], 0)


class Sl2SlicingTests(SimpleTestCase):
    """Multislicing through the charts φ_θ of SL₂(ℝ)."""

    def test_ball_sample(self):
        mats = lie_ball_sample(stream(7, 0), 20000)
        params = ExperimentParams(kappa=0.1, alpha=0.8, epsilon=0.05, trials=32)
        report = sl2_slicing_experiment(mats, params, k=4)
        self.assertLessEqual(report.exceptional_fraction, 0.1)
        self.assertTrue(report.passes)

    def test_one_parameter_subgroup_refused(self):
        t = np.linspace(-1, 1, 2000)
        mats = exp_batch(np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=1))
        params = ExperimentParams(kappa=0.1, alpha=0.5, epsilon=0.05, trials=32)
        with self.assertRaises(PreconditionViolated) as ctx:
            sl2_slicing_experiment(mats, params, k=4)
        self.assertEqual(ctx.exception.condition, 'frostman')

    def test_dirac_sigma_refused(self):
        mats = lie_ball_sample(stream(7, 1), 500)
        params = ExperimentParams(kappa=0.1, alpha=0.8, epsilon=0.05, trials=16)
        with self.assertRaises(PreconditionViolated) as ctx:
            sl2_slicing_experiment(mats, params, k=4, charts=ChartFamily.sl2('dirac', theta=0.2))
        self.assertEqual(ctx.exception.condition, 'sigma-noncon')

    def test_outside_ball(self):
        with self.assertRaises(DomainError):
            sl2_slicing_experiment(exp_batch(np.array([[2.0, 0.0, 0.0]])), ExperimentParams(trials=2))


class CounterexampleTests(SimpleTestCase):
    """Both counterexamples show the claimed failures."""

    def test_suite(self):
        report = counterexample_suite(thetas=16)
        self.assertTrue(all(not row['regular'] for row in report.planar))
        self.assertTrue(all(row['min_gap'] > 0 for row in report.planar))
        for slope in report.slopes:
            self.assertLess(abs(slope - 0.5), 0.1)
        large = report.spatial[-1]
        self.assertEqual(large['R'], 128)
        self.assertFalse(large['naive_holds'])
        self.assertTrue(large['holds'])
        self.assertTrue(report.passes)


class LinearizationTests(SimpleTestCase):
    """Entropy of F-cells against the per-cell linear projections."""

    def test_ladder(self):
        self.assertEqual(scale_ladder(8, 2), [(4, 4), (2, 2)])
        with self.assertRaises(InvalidInputError):
            scale_ladder(6, 2)

    def test_invalid_ladder(self):
        F = ProjectedChart(IsometryChart(np.eye(2)), (0,))
        with self.assertRaises(InvalidInputError):
            linearization_gap(uniform_measure(full_grid(2, 8)), F, ladder=[(5, 4)])

    def test_linear_map(self):
        F = ProjectedChart(AffineChart(np.eye(2)), (0,))
        report = linearization_gap(uniform_measure(full_grid(2, 8)), F, q=2)
        self.assertAlmostEqual(report.L, 1.0, places=6)
        self.assertAlmostEqual(report.lhs, math.log(256), places=9)
        self.assertAlmostEqual(report.rhs_sum, math.log(64), places=9)
        self.assertTrue(report.holds)

    def test_single_level(self):
        F = ProjectedChart(AffineChart(np.eye(2)), (1,))
        report = linearization_gap(uniform_measure(full_grid(2, 8)), F, ladder=[(4, 4)])
        self.assertAlmostEqual(report.rhs_sum, math.log(16), places=9)
        self.assertTrue(report.holds)

    def test_sl2_chart(self):
        F = ProjectedChart(Sl2Chart(0.3), (1, 2))
        report = linearization_gap(uniform_measure(full_grid(3, 4)), F, q=2)
        self.assertTrue(report.holds)
        self.assertLessEqual(report.deficit, 3 * 2 * 2 * math.log(report.L) + 10 * 2)
