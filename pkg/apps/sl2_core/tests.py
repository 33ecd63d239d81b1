"""
Tests for SL₂(ℝ) numerics: exponentials, decompositions, adjoint and charts.
"""

import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from apps.common.exceptions import DomainError, InvalidInputError

from .services import (
    RHO_0,
    KAK,
    Sl2Element,
    Sl2Vector,
    adjoint,
    adjoint_norm,
    cartan,
    exp_vec,
    iwasawa,
    log_near_identity,
    log_sl2,
    phi_theta,
    psi_theta,
    root_decomposition,
    straightening_check,
    validate_chart_radius,
)
from .services.lie import exp_reference

coordinate = st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)
small = st.floats(min_value=-0.057, max_value=0.057, allow_nan=False)


def random_element(seed: int) -> Sl2Element:
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((2, 2))
    if np.linalg.det(m) < 0:
        m[:, 0] *= -1
    return Sl2Element.from_matrix(m, renormalize=True)


class Sl2ElementTests(SimpleTestCase):
    """Tests for the value types."""

    def test_determinant_enforced(self):
        """A matrix of determinant 2 is rejected."""
        with self.assertRaises(InvalidInputError):
            Sl2Element(2.0, 0.0, 0.0, 1.0)

    def test_serialize_parse_exact(self):
        """17 significant digits reproduce doubles exactly."""
        g = random_element(3)
        self.assertEqual(Sl2Element.parse(g.serialize()), g)

    def test_product_renormalized(self):
        """Long products stay on the determinant-one surface."""
        g = Sl2Element.identity()
        for seed in range(200):
            g = g @ Sl2Element.rotation(0.1 * seed) @ Sl2Element.upper(0.01)
        self.assertAlmostEqual(g.det(), 1.0, delta=1e-10)


class ExponentialTests(SimpleTestCase):
    """Tests for exp and log."""

    def test_exp_zero_is_identity(self):
        """exp(0) = I and log(I) = 0."""
        self.assertEqual(exp_vec((0, 0, 0)), Sl2Element.identity())
        self.assertEqual(log_near_identity(Sl2Element.identity()).norm(), 0.0)

    def test_exp_e_closed_form(self):
        """exp(0.3E) = [[1, 0.3], [0, 1]]."""
        self.assertEqual(exp_vec((0.3, 0, 0)).to_list(), [1.0, 0.3, 0.0, 1.0])

    def test_exp_h_and_f_closed_forms(self):
        """exp(sH) is diagonal and exp(tF) lower unipotent."""
        self.assertTrue(exp_vec((0, 0.5, 0)).close_to(Sl2Element(math.exp(0.5), 0, 0, math.exp(-0.5)), 1e-15))
        self.assertEqual(exp_vec((0, 0, -0.2)).to_list(), [1.0, 0.0, -0.2, 1.0])

    @settings(max_examples=200, deadline=None)
    @given(coordinate, coordinate, coordinate)
    def test_exp_matches_pade(self, r, s, t):
        """The closed form agrees with scipy's expm."""
        ours = exp_vec((r, s, t)).matrix()
        np.testing.assert_allclose(ours, exp_reference((r, s, t)), rtol=1e-9, atol=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(small, small, small)
    def test_log_exp_round_trip(self, r, s, t):
        """log(exp(v)) = v for ‖v‖ ≤ 0.1."""
        v = Sl2Vector(r, s, t)
        back = log_near_identity(exp_vec(v))
        self.assertLess((back - v).norm(), 1e-12)

    def test_log_far_from_identity(self):
        """log_near_identity refuses large elements and log_sl2 accepts them."""
        g = Sl2Element.diagonal(3.0)
        with self.assertRaises(DomainError):
            log_near_identity(g)
        self.assertAlmostEqual(log_sl2(g).s, math.log(3.0), places=12)

    def test_log_negative_trace(self):
        """diag(−2, −1/2) has no real logarithm."""
        with self.assertRaises(DomainError):
            log_sl2(Sl2Element(-2.0, 0.0, 0.0, -0.5))


class CartanTests(SimpleTestCase):
    """Tests for the KAK decomposition."""

    def test_identity(self):
        """I decomposes with t = 0 and trivial rotations."""
        kak = cartan(Sl2Element.identity())
        self.assertEqual((kak.theta, kak.t, kak.theta_prime), (0.0, 0.0, 0.0))

    def test_diagonal(self):
        """diag(2, 1/2): θ = θ′ = 0 and t = 2 log 2."""
        kak = cartan(Sl2Element.diagonal(2.0))
        self.assertAlmostEqual(kak.t, 2 * math.log(2), places=12)
        self.assertAlmostEqual(kak.theta, 0.0, places=12)
        self.assertAlmostEqual(kak.theta_prime, 0.0, places=12)

    def test_rotation(self):
        """A rotation has t = 0 and θ equal to its angle."""
        kak = cartan(Sl2Element.rotation(2.0))
        self.assertEqual(kak.t, 0.0)
        self.assertAlmostEqual(kak.theta, 2.0, places=12)
        self.assertEqual(kak.theta_prime, 0.0)

    def test_reconstruction_and_canonical_range(self):
        """θ·a^t·θ′ reproduces g and θ ∈ [0, π)."""
        for seed in range(100):
            g = random_element(seed)
            kak = cartan(g)
            self.assertGreaterEqual(kak.t, 0.0)
            self.assertTrue(0.0 <= kak.theta < math.pi, f'theta={kak.theta}')
            self.assertTrue(kak.reconstruct().close_to(g, 1e-9), f'seed {seed}')

    def test_decompose_reconstructed_data(self):
        """cartan recovers KAK data in the canonical range."""
        data = KAK(theta=1.1, t=0.7, theta_prime=-2.3)
        kak = cartan(data.reconstruct())
        self.assertAlmostEqual(kak.theta, 1.1, places=9)
        self.assertAlmostEqual(kak.t, 0.7, places=9)
        self.assertAlmostEqual(kak.theta_prime, -2.3, places=9)


class IwasawaTests(SimpleTestCase):
    """Tests for g = n·a·k."""

    def test_identity(self):
        """I factors as (I, I, I)."""
        n, a, k = iwasawa(Sl2Element.identity())
        for part in (n, a, k):
            self.assertTrue(part.close_to(Sl2Element.identity(), 1e-12))

    def test_diagonal(self):
        """diag(2, 1/2) is its own a-part."""
        n, a, k = iwasawa(Sl2Element.diagonal(2.0))
        self.assertTrue(n.close_to(Sl2Element.identity(), 1e-12))
        self.assertTrue(a.close_to(Sl2Element.diagonal(2.0), 1e-12))
        self.assertTrue(k.close_to(Sl2Element.identity(), 1e-12))

    def test_reconstruction(self):
        """[[1,1],[0,1]]·rot(π/3) is reproduced to 1e-10."""
        g = Sl2Element.upper(1.0) @ Sl2Element.rotation(math.pi / 3)
        n, a, k = iwasawa(g)
        self.assertTrue((n @ a @ k).close_to(g, 1e-10))
        self.assertAlmostEqual(n.b, 1.0, places=10)
        self.assertGreater(a.a, 0.0)
        self.assertAlmostEqual(k.a, math.cos(math.pi / 3), places=10)


class AdjointTests(SimpleTestCase):
    """Tests for the adjoint representation."""

    def test_identity(self):
        """Ad(I) is the 3×3 identity."""
        np.testing.assert_allclose(adjoint(Sl2Element.identity()), np.eye(3))

    def test_a_t_scales_root_spaces(self):
        """Ad(a^t) = diag(e^t, 1, e^{−t})."""
        np.testing.assert_allclose(adjoint(Sl2Element.a_t(0.8)), np.diag([math.exp(0.8), 1, math.exp(-0.8)]),
                                   atol=1e-12)

    def test_diagonal(self):
        """Ad(diag(2, 1/2)) = diag(4, 1, 1/4)."""
        np.testing.assert_allclose(adjoint(Sl2Element.diagonal(2.0)), np.diag([4.0, 1.0, 0.25]))

    def test_conjugation(self):
        """Ad(g)v is the coordinate vector of gXg⁻¹."""
        g = random_element(11)
        v = Sl2Vector(0.3, -0.2, 0.5)
        direct = Sl2Vector.from_matrix(g.matrix() @ v.matrix() @ g.inverse().matrix())
        np.testing.assert_allclose(adjoint(g) @ v.to_array(), direct.to_array(), atol=1e-10)

    def test_multiplicative_and_unimodular(self):
        """Ad(gh) = Ad(g)Ad(h) and det Ad(g) = 1."""
        for seed in range(50):
            g, h = random_element(seed), random_element(seed + 1000)
            np.testing.assert_allclose(adjoint(g @ h), adjoint(g) @ adjoint(h), rtol=1e-9, atol=1e-9)
            self.assertAlmostEqual(np.linalg.det(adjoint(g)), 1.0, delta=1e-9)

    def test_norm_is_expansion(self):
        """‖Ad(g)‖ = e^{t_g} for the K-invariant norm."""
        for seed in range(100):
            g = random_element(seed)
            self.assertAlmostEqual(adjoint_norm(g) / math.exp(cartan(g).t), 1.0, delta=1e-8)

    def test_root_decomposition(self):
        """E+H+F splits into its three coordinates and Ad(a^t) scales them."""
        v = Sl2Vector(1.0, 1.0, 1.0)
        plus, zero, minus = root_decomposition(v)
        self.assertEqual((plus, zero, minus), (Sl2Vector(1, 0, 0), Sl2Vector(0, 1, 0), Sl2Vector(0, 0, 1)))
        self.assertEqual(root_decomposition(Sl2Vector(1, 0, 0))[0], Sl2Vector(1, 0, 0))
        ad = adjoint(Sl2Element.a_t(1.5))
        for part, scale in ((plus, math.exp(1.5)), (zero, 1.0), (minus, math.exp(-1.5))):
            np.testing.assert_allclose(ad @ part.to_array(), scale * part.to_array(), atol=1e-12)


class ChartTests(SimpleTestCase):
    """Tests for ψ_θ and φ_θ."""

    def test_zero(self):
        """ψ_θ(0) = θ for the statement chart and I for the conjugate chart."""
        theta = Sl2Element.rotation(0.4)
        self.assertTrue(psi_theta(0.4, (0, 0, 0)).close_to(theta, 1e-15))
        self.assertTrue(psi_theta(0.4, (0, 0, 0), variant='conjugate').close_to(Sl2Element.identity(), 1e-15))

    def test_upper_unipotent(self):
        """θ = I, v = (0.3, 0, 0) gives [[1, 0.3], [0, 1]]."""
        self.assertEqual(psi_theta(0.0, (0.3, 0, 0)).to_list(), [1.0, 0.3, 0.0, 1.0])

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 2 * math.pi), small, small, small, st.sampled_from(['statement', 'conjugate']))
    def test_round_trip(self, theta, r, s, t, variant):
        """φ_θ(ψ_θ(v)) = v for ‖v‖ ≤ 0.2 inside a chart of radius 1/4."""
        v = Sl2Vector(r * 2, s * 2, t * 2)
        back = phi_theta(theta, psi_theta(theta, v, variant), variant, radius=0.25)
        self.assertLess((back - v).norm(), 1e-10)

    def test_outside_chart(self):
        """Elements far from θ raise a domain error."""
        with self.assertRaises(DomainError):
            phi_theta(0.0, Sl2Element.diagonal(2.0))
        with self.assertRaises(DomainError):
            phi_theta(0.0, Sl2Element.rotation(math.pi))

    def test_unknown_variant(self):
        """Only the two named conventions exist."""
        with self.assertRaises(InvalidInputError):
            psi_theta(0.0, (0, 0, 0), variant='left')

    def test_default_radius_is_bi_lipschitz(self):
        """ψ_θ is a 2-bi-Lipschitz bijection on B_ρ₀."""
        for variant in ('statement', 'conjugate'):
            report = validate_chart_radius(RHO_0, pairs=500, seed=1, variant=variant)
            self.assertTrue(report.passes, report.to_dict())


class StraighteningTests(SimpleTestCase):
    """Tests for the rectangle straightening check."""

    def test_trivial_time(self):
        """t = 0 passes with the default factor."""
        report = straightening_check(0.0, RHO_0 / 2, n_samples=2000, seed=2)
        self.assertTrue(report.passes, report.to_dict())

    def test_expanding_time(self):
        """t = 3, ρ = ρ₀e^{−3}/2 passes with factor 10⁶."""
        rho = RHO_0 * math.exp(-3) / 2
        report = straightening_check(3.0, rho, Sl2Element.identity(), n_samples=10_000, seed=3)
        self.assertTrue(report.passes, report.to_dict())
        self.assertEqual(report.accepted, 10_000)

    def test_small_factor_fails(self):
        """Claiming factor 1/10 is refuted by the samples."""
        rho = RHO_0 * math.exp(-3) / 2
        report = straightening_check(3.0, rho, n_samples=10_000, factor=0.1, seed=3)
        self.assertFalse(report.passes)
        self.assertGreater(report.max_ratio, 0.1)

    def test_precondition(self):
        """e^t·ρ > ρ₀ is invalid input."""
        with self.assertRaises(InvalidInputError):
            straightening_check(3.0, RHO_0, n_samples=10)
