"""
Tests for walk measures, convolution, drift, robustness and equidistribution.
"""

import math

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy import stats

from apps.common.exceptions import InvalidInputError, PreconditionViolated, ResourceError
from apps.common.rng import child_seed, stream
from apps.modular_space.services import (
    XPoint,
    compact_sample,
    dist_x,
    haar_sample_batch,
    injectivity_radius,
    injectivity_radius_batch,
    rational_points,
    reduce,
)
from apps.sl2_core.services import Sl2Element, exp_vec
from apps.sl2_core.services.group import rotation_batch

from .services import (
    EmpiricalMeasure,
    WalkMeasure,
    bootstrap_chain,
    bootstrap_experiment,
    cartan_angles,
    convolve_sample,
    cusp_point,
    diophantine_generic,
    discrepancy_regression,
    drift_report,
    effective_time_bound,
    equidistribution_experiment,
    finite_orbit_discrepancy,
    haar_measure,
    lyapunov_estimate,
    multiscale_count,
    orbit_closure,
    persistence_check,
    propagate,
    random_products,
    recurrence_tail,
    rescale_certificate,
    robust_dimension,
    robustness_certificate,
    single_to_multiscale,
    theta_noncon_report,
    wasserstein_estimate,
)
from .services.drift import fit_contraction
from .services.finite_orbits import column_hermite
from .services.persistence import DRIFT_EXPONENT_GRID, fit_drift_exponent
from .services.robustness import dyadic_radii


def generic_point(seed: int = 5) -> XPoint:
    return compact_sample(stream(seed, 0), 2.0)


def nearby(x: XPoint, distance: float) -> XPoint:
    return XPoint.from_element(exp_vec([distance, 0.0, 0.0]) @ x.rep)


def window_sample(N: int, seed: int = 0, min_systole: float = 0.9) -> EmpiricalMeasure:
    reps = haar_sample_batch(stream(seed, 1), 4 * N)
    keep = np.linalg.norm(reps[:, :, 0], axis=1) >= min_systole
    return EmpiricalMeasure(reps[keep][:N], {'source': 'haar-window', 'seed': seed})


class WalkMeasureTests(SimpleTestCase):
    """Step distributions and the Zariski-density flag."""

    def test_standard_pair_flags(self):
        mu = WalkMeasure.standard_pair()
        self.assertTrue(mu.symmetric)
        self.assertTrue(mu.integral)
        self.assertTrue(mu.zariski_dense)
        self.assertFalse(WalkMeasure.standard_pair(symmetric=False).symmetric)

    def test_compact_and_diagonal_walks_are_not_dense(self):
        self.assertFalse(WalkMeasure.rotations([1.0, math.sqrt(2)]).zariski_dense)
        self.assertFalse(WalkMeasure.dirac(Sl2Element.diagonal(2.0)).zariski_dense)

    def test_weights_must_be_normalized(self):
        with self.assertRaises(InvalidInputError):
            WalkMeasure(np.stack([np.eye(2), np.eye(2)]), np.array([0.5, 0.6]))
        with self.assertRaises(InvalidInputError):
            WalkMeasure(np.zeros((0, 2, 2)), np.zeros(0))

    def test_inverse_of_inverse(self):
        mu = WalkMeasure.standard_pair(symmetric=False)
        np.testing.assert_allclose(mu.inverse().inverse().atoms, mu.atoms)

    def test_from_dict(self):
        mu = WalkMeasure.from_dict({'name': 'standard-pair'})
        self.assertEqual(mu.size, 4)
        custom = WalkMeasure.from_dict({'atoms': [[2, 0, 0, 0.5]], 'weights': [1]})
        self.assertEqual(custom.size, 1)
        with self.assertRaises(InvalidInputError):
            WalkMeasure.from_dict({'name': 'unknown'})


class ConvolutionTests(SimpleTestCase):
    """Monte-Carlo samples of μ^{*n} * δ_x."""

    def test_zero_steps_copies_start(self):
        x = generic_point()
        sample = convolve_sample(WalkMeasure.standard_pair(), 0, x, 7)
        self.assertEqual(len(sample), 7)
        np.testing.assert_allclose(sample.reps, np.broadcast_to(x.matrix(), (7, 2, 2)))

    def test_dirac_walk_is_deterministic(self):
        g = Sl2Element(1.0, 0.3, 0.2, 1.06)
        x = generic_point()
        sample = convolve_sample(WalkMeasure.dirac(g), 4, x, 5)
        expected = reduce(g @ g @ g @ g @ x.rep)
        for m in sample.reps:
            self.assertLess(dist_x(XPoint.from_reduced(m), expected), 1e-8)

    def test_free_walk_visits_distinct_points(self):
        mu = WalkMeasure.standard_pair(symmetric=False)
        sample = convolve_sample(mu, 30, generic_point(), 2000, seed=3)
        self.assertGreaterEqual(sample.distinct_count(), 0.99 * 2000)

    def test_integral_walk_fixes_base_point(self):
        sample = convolve_sample(WalkMeasure.standard_pair(), 10, XPoint.base(), 50)
        self.assertEqual(sample.distinct_count(), 1)

    def test_reproducible_and_thread_independent(self):
        mu = WalkMeasure.standard_pair()
        x = generic_point()
        a = convolve_sample(mu, 5, x, 5000, seed=9, threads=1)
        with override_settings(MULTISLICE_THREADS=4):
            b = convolve_sample(mu, 5, x, 5000, seed=9)
        np.testing.assert_array_equal(a.reps, b.reps)

    def test_semigroup_property(self):
        mu = WalkMeasure.standard_pair()
        x = generic_point()
        direct = convolve_sample(mu, 8, x, 3000, seed=1)
        staged = propagate(mu, convolve_sample(mu, 3, x, 3000, seed=2), 5, seed=3)
        a = np.log(np.linalg.norm(direct.reps[:, :, 0], axis=1))
        b = np.log(np.linalg.norm(staged.reps[:, :, 0], axis=1))
        self.assertGreater(stats.ks_2samp(a, b).pvalue, 1e-3)

    def test_negative_sizes_rejected(self):
        with self.assertRaises(InvalidInputError):
            convolve_sample(WalkMeasure.standard_pair(), 3, XPoint.base(), 0)


class LyapunovTests(SimpleTestCase):
    """Top exponent of the adjoint cocycle."""

    def test_diagonal_dirac(self):
        estimate = lyapunov_estimate(WalkMeasure.dirac(Sl2Element.diagonal(2.0)), 30, 10)
        self.assertAlmostEqual(estimate.value, math.log(4), delta=1e-9)
        self.assertAlmostEqual(estimate.value_2n, math.log(4), delta=1e-9)
        self.assertLess(estimate.half_width, 1e-9)

    def test_rotations_have_zero_exponent(self):
        estimate = lyapunov_estimate(WalkMeasure.rotations([0.4, 1.3]), 50, 100)
        self.assertLess(abs(estimate.value), 1e-9)

    def test_standard_pair_settles(self):
        estimate = lyapunov_estimate(WalkMeasure.standard_pair(), 200, 10_000, seed=4)
        self.assertTrue(estimate.agrees)
        self.assertGreater(estimate.value, 0.0)

    def test_inverse_measure_matches(self):
        mu = WalkMeasure.standard_pair()
        a = lyapunov_estimate(mu, 50, 4000, seed=1)
        b = lyapunov_estimate(mu.inverse(), 50, 4000, seed=2)
        self.assertLess(abs(a.value - b.value), 2 * (a.half_width + b.half_width) + 1e-9)


class RobustnessTests(SimpleTestCase):
    """Certificates, robust dimension and the combination helpers."""

    def test_separated_points_pass_without_removal(self):
        catalog = rational_points(3)
        nu = EmpiricalMeasure(catalog.reps())
        ceiling = min(catalog.min_separation / 4, float(injectivity_radius_batch(nu.reps).min()) / 2)
        rho_max = 2.0 ** math.floor(math.log2(ceiling))
        cert = robustness_certificate(nu, 0.01, (rho_max / 4, rho_max), 0.0)
        self.assertTrue(cert.passes)
        self.assertEqual(cert.removed_mass, 0.0)

    def test_cluster_needs_its_mass_in_tau(self):
        nu = EmpiricalMeasure(np.broadcast_to(generic_point().matrix(), (64, 2, 2)).copy())
        self.assertFalse(robustness_certificate(nu, 0.2, (1 / 16, 1 / 8), 0.5).passes)
        self.assertTrue(robustness_certificate(nu, 0.2, (1 / 16, 1 / 8), 1.0).passes)
        self.assertEqual(robust_dimension(nu, 1 / 16, 0.0), 0.0)

    def test_monotone_in_alpha_and_tau(self):
        nu = haar_measure(400, 2)
        interval = (1 / 16, 1 / 4)
        for tau in (0.0, 0.2, 0.5):
            passes = [robustness_certificate(nu, a, interval, tau).passes for a in (0.1, 0.3, 0.5, 0.7)]
            # once failing, larger alpha keeps failing
            self.assertEqual(passes, sorted(passes, reverse=True))
        for alpha in (0.2, 0.6):
            passes = [robustness_certificate(nu, alpha, interval, t).passes for t in (0.0, 0.1, 0.3, 1.0)]
            self.assertEqual(passes, sorted(passes))

    def test_resolution_is_enforced(self):
        nu = haar_measure(10, 0)
        with self.assertRaises(InvalidInputError):
            robustness_certificate(nu, 0.9, (2.0 ** -10, 0.25), 0.0)
        with self.assertRaises(InvalidInputError):
            robustness_certificate(nu, 0.5, (0.1, 0.6), 0.0)

    def test_single_scale_to_multiscale(self):
        nu = haar_measure(800, 4)
        delta, s, alpha, eps = 2.0 ** -6, 0.5, 0.3, 0.1
        radii = dyadic_radii(delta, delta ** s)
        tau = max(robustness_certificate(nu, alpha, (rho, rho), 0.0).removed_mass for rho in radii)
        combined = single_to_multiscale(alpha, delta, s, eps, tau)
        cert = robustness_certificate(nu, combined['alpha'], tuple(combined['interval']), combined['tau'])
        self.assertGreaterEqual(combined['count'], len(radii))
        self.assertTrue(cert.passes)

    def test_helpers(self):
        self.assertEqual(multiscale_count(0.5, 0.1), 7)
        rescaled = rescale_certificate(0.6, 0.01, 0.1, 0.5)
        self.assertAlmostEqual(rescaled['alpha'], 0.3)
        self.assertAlmostEqual(rescaled['interval'][0], 1e-4)
        with self.assertRaises(InvalidInputError):
            rescale_certificate(0.6, 0.01, 0.1, 2.0)
        self.assertEqual(dyadic_radii(0.03, 0.25), [0.25, 0.125, 0.0625, 0.03125])


class DriftTests(SimpleTestCase):
    """Drift away from the cusp, from rational points and from the diagonal."""

    def test_cusp_point_has_requested_radius(self):
        x = cusp_point(1e-4)
        self.assertAlmostEqual(injectivity_radius(x) / 1e-4, 1.0, places=6)

    def test_contraction_from_the_cusp(self):
        report = drift_report(WalkMeasure.standard_pair(), 'u0', cusp_point(1e-4), n_max=15, N=2000, s=0.1)
        self.assertEqual(report.regime, 'contraction')
        self.assertLess(report.rate, 1.0)
        self.assertTrue(report.passes)

    def test_compact_start_is_additive(self):
        report = drift_report(WalkMeasure.standard_pair(), 'u0', XPoint.base(), n_max=8, N=1000, s=0.1)
        self.assertEqual(report.regime, 'additive')
        self.assertTrue(report.passes)

    def test_rational_points_repel(self):
        catalog = rational_points(2)
        x = nearby(catalog.points[0], 1e-5)
        report = drift_report(WalkMeasure.standard_pair(), 'uQ', x, n_max=10, N=1000, s=0.1, catalog=catalog)
        self.assertLess(report.rows[10]['ratio'], 1.0)

    def test_diagonal_drift_pairs(self):
        x = generic_point()
        report = drift_report(WalkMeasure.standard_pair(), 'omega', (x, nearby(x, 1e-4)), n_max=8, N=500)
        self.assertLess(report.rows[-1]['mean'], report.rows[0]['mean'])
        with self.assertRaises(InvalidInputError):
            drift_report(WalkMeasure.standard_pair(), 'omega', x, n_max=2, N=10)

    def test_missing_catalog_rejected(self):
        with self.assertRaises(InvalidInputError):
            drift_report(WalkMeasure.standard_pair(), 'uQ', XPoint.base(), n_max=2, N=10)
        with self.assertRaises(InvalidInputError):
            drift_report(WalkMeasure.standard_pair(), 'height', XPoint.base(), n_max=2, N=10)

    def test_fit_recovers_synthetic_rate(self):
        values = [3 * 0.8 ** n + 1 for n in range(20)]
        r, B, A, method = fit_contraction(values)
        self.assertEqual(method, 'curve_fit')
        self.assertAlmostEqual(r, 0.8, places=4)
        self.assertAlmostEqual(B, 1.0, places=3)


class RecurrenceTests(SimpleTestCase):
    """Exponential tails of dist(·, x₀)."""

    def test_no_steps_from_base(self):
        report = recurrence_tail(WalkMeasure.standard_pair(), XPoint.base(), 0, 20, [0.0, 0.5, 1.0])
        self.assertEqual(report.masses, [1.0, 0.0, 0.0])

    def test_tail_decays(self):
        report = recurrence_tail(WalkMeasure.standard_pair(), generic_point(), 50, 4000,
                                 [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], seed=6)
        self.assertLess(report.fit.slope, -0.1)

    def test_mass_flows_out_of_the_cusp(self):
        x = cusp_point(1e-3)
        radii = [2.0, 3.0]
        early = recurrence_tail(WalkMeasure.standard_pair(), x, 5, 1000, radii, seed=1)
        late = recurrence_tail(WalkMeasure.standard_pair(), x, 50, 1000, radii, seed=1)
        self.assertLess(late.masses[0], early.masses[0])


class ThetaNonconTests(SimpleTestCase):
    """Non-concentration of Cartan angles."""

    def test_angle_reads_inverse_decomposition(self):
        """θ_g is the left K-factor of g⁻¹, not of g, for a non-symmetric g."""
        inverse = rotation_batch([0.3])[0] @ np.diag([math.e ** 2, math.e ** -2]) @ rotation_batch([1.1])[0]
        g = np.linalg.inv(inverse)[None]
        self.assertAlmostEqual(cartan_angles(g, np.zeros(1))[0], 0.3, places=9)

    def test_hyperbolic_dirac_concentrates(self):
        report = theta_noncon_report(WalkMeasure.dirac(Sl2Element(2.0, 1.0, 1.0, 1.0)), 10, 200)
        self.assertLess(report.kappa, 0.05)
        self.assertFalse(report.passes)

    def test_rotations_spread(self):
        """
        Thirty steps of {1, √2} leave at most 31 distinct angles, the heaviest
        of mass C(30, 15)/2³⁰ ≈ 0.14, so the fit flattens at small ρ but stays
        well above a Dirac's.
        """
        report = theta_noncon_report(WalkMeasure.rotations([1.0, math.sqrt(2)]), 30, 2000, seed=2)
        self.assertGreater(report.kappa, 0.1)
        angles = cartan_angles(*random_products(WalkMeasure.rotations([1.0, math.sqrt(2)]), 30, 2000, seed=2))
        self.assertLessEqual(np.unique(np.round(angles, 6)).size, 31)

    def test_standard_pair_does_not_concentrate(self):
        report = theta_noncon_report(WalkMeasure.standard_pair(), 30, 4000, seed=3)
        self.assertGreater(report.kappa, 0.2)
        self.assertTrue(report.passes)

    def test_floor_rejects_weak_exponents(self):
        report = theta_noncon_report(WalkMeasure.rotations([1.0, math.sqrt(2)]), 30, 2000, seed=2)
        self.assertEqual(report.passes, report.kappa > 0.2)

    def test_scales_must_respect_walk_length(self):
        with self.assertRaises(InvalidInputError):
            theta_noncon_report(WalkMeasure.standard_pair(), 2, 10, rhos=[0.5, 0.01])


class WassersteinTests(SimpleTestCase):
    """Dictionary lower bounds for 𝒲_β."""

    def test_equal_measures(self):
        nu = haar_measure(200, 1)
        self.assertEqual(wasserstein_estimate(nu, nu).value, 0.0)

    def test_two_diracs(self):
        x = generic_point()
        y = nearby(x, 0.1)
        d0 = dist_x(x, y)
        for beta in (1.0, 0.5):
            value = wasserstein_estimate(EmpiricalMeasure.from_points([x]), EmpiricalMeasure.from_points([y]),
                                         beta, dictionary_size=64).value
            self.assertGreaterEqual(value, d0 ** beta / 4)
            self.assertLessEqual(value, d0 ** beta)

    def test_two_diracs_up_to_unit_distance(self):
        """Diracs at x, y with dist ≤ 1 give an estimate in [d₀^β/4, d₀^β]."""
        x = XPoint.base()
        for h in (0.5, 0.9, 1.0):
            y = XPoint.from_element(exp_vec([0.0, h, 0.0]))
            d0 = dist_x(x, y)
            self.assertLessEqual(d0, 1.0 + 1e-12)
            for beta in (1.0, 0.5):
                value = wasserstein_estimate(EmpiricalMeasure.from_points([x]), EmpiricalMeasure.from_points([y]),
                                             beta, dictionary_size=64).value
                self.assertGreaterEqual(value, d0 ** beta / 4, f'h={h} beta={beta}')
                self.assertLessEqual(value, d0 ** beta + 1e-12, f'h={h} beta={beta}')

    def test_monotone_in_dictionary_size(self):
        a, b = haar_measure(300, 1), haar_measure(300, 2)
        values = [wasserstein_estimate(a, b, 1.0, size, seed=7).value for size in (8, 32, 128, 512)]
        self.assertEqual(values, sorted(values))

    def test_beta_range(self):
        nu = haar_measure(10, 1)
        with self.assertRaises(InvalidInputError):
            wasserstein_estimate(nu, nu, beta=1.5)


class EquidistributionTests(SimpleTestCase):
    """Decay curves and the effective-time bookkeeping."""

    def test_standard_pair_decays(self):
        curve = equidistribution_experiment(WalkMeasure.standard_pair(), generic_point(), 20, 1000, step=5, seed=1)
        self.assertTrue(curve.decays)
        self.assertEqual([row['n'] for row in curve.rows], [0, 5, 10, 15, 20])

    def test_rotation_does_not_decay(self):
        mu = WalkMeasure.dirac(Sl2Element.rotation(1.0))
        curve = equidistribution_experiment(mu, generic_point(), 6, 300, step=2)
        self.assertFalse(curve.decays)

    def test_unknown_reference(self):
        with self.assertRaises(InvalidInputError):
            equidistribution_experiment(WalkMeasure.standard_pair(), generic_point(), 4, 10, reference='lebesgue')

    def test_rational_proximity_raises_time_bound(self):
        catalog = rational_points(2)
        near = effective_time_bound(nearby(catalog.points[0], 1e-6), 2)
        far = effective_time_bound(generic_point(), 2)
        self.assertGreater(near.n_min, far.n_min)

    def test_diophantine_genericity(self):
        catalog = rational_points(2)
        self.assertFalse(diophantine_generic(catalog.points[0], [2], 2.0).generic)
        self.assertTrue(diophantine_generic(generic_point(), [2, 3], 8.0).generic)


class FiniteOrbitTests(SimpleTestCase):
    """Exact orbits through rational points and their discrepancy."""

    def test_hermite_form_is_basis_independent(self):
        m = np.array([[3, 1], [5, 2]]) @ np.array([[1, 0], [0, 9]])
        moved = m @ np.array([[1, 4], [0, 1]]) @ np.array([[0, -1], [1, 0]])
        self.assertEqual(column_hermite(m), column_hermite(moved))
        a, b, c = column_hermite(m)
        self.assertEqual(a * c, 9)

    def test_denominator_one_is_base_point(self):
        orbit = orbit_closure(WalkMeasure.standard_pair(), 1)
        self.assertEqual(orbit, [(1, 0, 1)])

    def test_orbit_is_closed(self):
        mu = WalkMeasure.standard_pair()
        orbit = set(orbit_closure(mu, 5))
        self.assertLessEqual(len(orbit), 30)
        for a, b, c in orbit:
            for atom in mu.atoms:
                image = column_hermite(np.rint(atom).astype(int) @ np.array([[a, 0], [b, c]]))
                self.assertIn(image, orbit)

    def test_requires_integral_atoms(self):
        with self.assertRaises(InvalidInputError):
            orbit_closure(WalkMeasure.dirac(Sl2Element.diagonal(2.0)), 3)

    @override_settings(MULTISLICE_ORBIT_SIZE_CAP=10)
    def test_orbit_cap(self):
        with self.assertRaises(ResourceError):
            orbit_closure(WalkMeasure.standard_pair(), 13)

    def test_discrepancy_falls_with_orbit_size(self):
        mu = WalkMeasure.standard_pair()
        haar = haar_measure(4000, 3)
        single = finite_orbit_discrepancy(mu, 1, haar=haar)
        reports = [finite_orbit_discrepancy(mu, q, haar=haar) for q in (2, 3, 5, 7, 11, 13)]
        self.assertEqual(single.R, 1)
        self.assertGreater(single.discrepancy, 0.1)
        self.assertLess(discrepancy_regression(reports).slope, 0.0)
        self.assertLess(finite_orbit_discrepancy(mu, 25, haar=haar).discrepancy, reports[2].discrepancy)


class PersistenceTests(SimpleTestCase):
    """Both persistence inequalities."""

    def test_window_measure_passes(self):
        report = persistence_check(WalkMeasure.standard_pair(), window_sample(300), 5, 0.1, 0.05, s=0.1, lam=1.0)
        self.assertTrue(report.passes)

    def test_cusp_measure_saturates_at_zero_steps(self):
        nu = EmpiricalMeasure(np.broadcast_to(cusp_point(1e-3).matrix(), (20, 2, 2)).copy())
        report = persistence_check(WalkMeasure.standard_pair(), nu, 0, 0.1, 0.01, s=0.1, lam=1.0)
        self.assertEqual(report.cusp_lhs, 1.0)
        self.assertGreaterEqual(report.cusp_rhs, 1.0)
        self.assertTrue(report.cusp_passes)

    def test_cluster_spreads(self):
        nu = EmpiricalMeasure(np.broadcast_to(generic_point().matrix(), (200, 2, 2)).copy())
        report = persistence_check(WalkMeasure.standard_pair(), nu, 40, 0.1, 0.05, s=0.1, lam=1.0)
        self.assertTrue(report.ball_passes)
        self.assertLess(report.ball_lhs, 1.0)

    def test_drift_exponent_fitted_when_omitted(self):
        mu = WalkMeasure.standard_pair()
        report = persistence_check(mu, window_sample(200), 3, 0.1, 0.05, lam=1.0, seed=4)
        self.assertIn(report.s, DRIFT_EXPONENT_GRID)
        self.assertEqual(set(report.to_dict()['s_fit']), {'grid', 'rate', 'fit_method'})
        s, drift = fit_drift_exponent(mu, child_seed(4, 3))
        self.assertEqual(s, report.s)
        self.assertEqual(drift.kind, 'u0')
        self.assertIsNone(persistence_check(mu, window_sample(200), 3, 0.1, 0.05, s=0.5, lam=1.0).s_fit)

    def test_explicit_exponent_range(self):
        with self.assertRaises(InvalidInputError):
            persistence_check(WalkMeasure.standard_pair(), window_sample(50), 1, 0.1, 0.05, s=1.5, lam=1.0)


class BootstrapTests(SimpleTestCase):
    """Dimension increment and its chain."""

    def test_single_atom_is_rejected(self):
        nu = EmpiricalMeasure.from_points([generic_point()])
        with self.assertRaises(PreconditionViolated) as ctx:
            bootstrap_experiment(WalkMeasure.standard_pair(), nu, 2.0 ** -8, 0.25, 0.3)
        self.assertEqual(ctx.exception.condition, 'robustness')

    def test_window_sample_keeps_dimension(self):
        mu = WalkMeasure.standard_pair()
        lyapunov = lyapunov_estimate(mu, 20, 500)
        report = bootstrap_experiment(mu, window_sample(1500), 2.0 ** -8, 0.25, 0.3, tau=0.5, lyapunov=lyapunov)
        self.assertGreater(report.steps, 0)
        self.assertGreaterEqual(report.alpha_after, report.alpha_before - 0.15)

    def test_alpha_window(self):
        with self.assertRaises(InvalidInputError):
            bootstrap_experiment(WalkMeasure.standard_pair(), window_sample(50), 2.0 ** -8, 0.25, 0.99)

    def test_chain_reports_each_step(self):
        rows = bootstrap_chain(WalkMeasure.standard_pair(), window_sample(600), 2.0 ** -8, 0.1, 0.25, 2, tau=0.5)
        self.assertGreaterEqual(len(rows), 1)
        self.assertEqual(rows[0]['step'], 0)
