"""
Tests for dyadic partitions, covering numbers, regularity and submodularity.
"""

import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from apps.common.exceptions import EmptySetError, InvalidInputError, UnsupportedError

from .services import (
    AtomicMeasure,
    DyadicSet,
    Filtration,
    ShapeVector,
    angle,
    cell_index,
    covering_number,
    entropy_covering_bounds,
    is_regular,
    max_concentration,
    max_restricted_covering,
    projection_submodularity,
    regularize,
    regularize_report,
    restricted_covering,
    rough_refinement_factor,
    shannon_entropy,
    submodular_split,
)


def random_set(seed: int, d: int, k: int, size: int) -> DyadicSet:
    rng = np.random.default_rng(seed)
    return DyadicSet(d, k, rng.integers(0, 1 << k, size=(size, d)))


def clustered_set(seed: int, d: int, k: int) -> DyadicSet:
    """Union of a few dense blobs and scattered points, far from regular."""
    rng = np.random.default_rng(seed)
    parts = [rng.integers(0, 1 << k, size=(rng.integers(1, 40), d))]
    for _ in range(rng.integers(1, 4)):
        center = rng.integers(0, 1 << k, size=d)
        blob = center + rng.integers(-3, 4, size=(rng.integers(5, 80), d))
        parts.append(np.clip(blob, 0, (1 << k) - 1))
    return DyadicSet(d, k, np.vstack(parts))


def counterexample_2d(k: int) -> DyadicSet:
    half = 1 << (k // 2)
    a1 = np.array([(i * half, 0) for i in range(half)])
    c = 1 << (k - 1)
    xs, ys = np.meshgrid(np.arange(c - half, c + half), np.arange(c - half, c + half), indexing='ij')
    disc = (xs - c) ** 2 + (ys - c) ** 2 < half ** 2
    a2 = np.stack([xs[disc], ys[disc]], axis=1)
    return DyadicSet(2, k, np.vstack([a1, a2]))


class ShapeVectorTests(SimpleTestCase):
    """Tests for rectangle shapes."""

    def test_exponents_must_be_nondecreasing(self):
        """Decreasing exponents are rejected."""
        with self.assertRaises(InvalidInputError):
            ShapeVector((1, 1), (Fraction(1), Fraction(0)), 4)

    def test_k_must_clear_denominators(self):
        """k must make every side an exact power of two."""
        with self.assertRaises(InvalidInputError):
            ShapeVector((1, 1), (Fraction(1, 3), Fraction(1)), 4)
        ShapeVector((1, 1), (Fraction(1, 3), Fraction(1)), 6)

    def test_cell_volume(self):
        """vol(R) = δ^{Σ r_i j_i}: d=3, r=(0,1/2,1), δ=2^-8 gives 2^-12."""
        shape = ShapeVector((1, 1, 1), (0, Fraction(1, 2), 1), 8)
        self.assertEqual(shape.cell_volume(), Fraction(1, 2 ** 12))

    def test_join_and_meet(self):
        """Join takes the finer side per coordinate, meet the coarser."""
        P = ShapeVector.from_coordinate_exponents([Fraction(1, 5), 1, 1], 5)
        Q = ShapeVector.from_coordinate_exponents([1, Fraction(1, 5), 1], 5)
        self.assertEqual(P.join(Q).coordinate_exponents(), (1, 1, 1))
        self.assertEqual(P.meet(Q).coordinate_exponents(), (Fraction(1, 5), Fraction(1, 5), 1))
        self.assertTrue(P.meet(Q).precedes(P))
        self.assertTrue(P.join(Q).refines(Q))

    def test_dict_round_trip(self):
        """Shapes survive their JSON form."""
        shape = ShapeVector.from_coordinate_exponents([1, Fraction(1, 2), 0], 8)
        self.assertEqual(ShapeVector.from_dict(shape.to_dict()), shape)


class DyadicSetTests(SimpleTestCase):
    """Tests for point sets and measures."""

    def test_dedup_and_range(self):
        """Duplicates collapse and out-of-range points are rejected."""
        A = DyadicSet(2, 3, [[1, 2], [1, 2], [0, 0]])
        self.assertEqual(len(A), 2)
        with self.assertRaises(InvalidInputError):
            DyadicSet(2, 3, [[8, 0]])

    def test_text_round_trip(self):
        """The 'd k' text format is bit-exact."""
        A = random_set(3, 3, 6, 50)
        self.assertEqual(DyadicSet.from_text(A.to_text()), A)
        self.assertTrue(A.to_text().startswith('3 6\n'))

    def test_measure_aggregates_atoms(self):
        """Repeated atoms add their weights."""
        nu = AtomicMeasure.from_atoms(np.array([[0, 0], [0, 0], [1, 1]]), np.array([0.25, 0.25, 0.5]), 2)
        self.assertEqual(len(nu.support), 2)
        self.assertAlmostEqual(nu.total_mass, 1.0)


class CoveringTests(SimpleTestCase):
    """Tests for cell indices and covering numbers."""

    def test_origin_cell(self):
        """The origin lies in cell 0 for any shape."""
        self.assertEqual(cell_index((0, 0), ShapeVector((1, 1), (0, 1), 4)), (0, 0))

    def test_cell_index_examples(self):
        """Floor division by the per-coordinate side length."""
        self.assertEqual(cell_index((7, 3), ShapeVector((1, 1), (0, 1), 4)), (0, 3))
        shape = ShapeVector((1, 1, 1), (0, Fraction(1, 2), 1), 8)
        self.assertEqual(cell_index((200, 17, 255), shape), (0, 1, 255))

    def test_cell_index_dimension_mismatch(self):
        """A point of the wrong dimension is rejected."""
        with self.assertRaises(InvalidInputError):
            cell_index((1, 2, 3), ShapeVector((1, 1), (0, 1), 4))

    def test_full_grid_rows(self):
        """2^8 grid points at δ=2^-4 with r=(0,1) occupy one cell per row."""
        A = DyadicSet.full_grid(2, 4)
        self.assertEqual(covering_number(A, ShapeVector((1, 1), (0, 1), 4)).count, 16)

    def test_singleton_covering(self):
        """A single point always has covering number 1."""
        A = DyadicSet(2, 6, [[5, 9]])
        for r in [(0, 0), (0, Fraction(1, 2)), (Fraction(1, 2), 1), (1, 1)]:
            self.assertEqual(covering_number(A, ShapeVector((1, 1), r, 6)).count, 1)

    def test_empty_set(self):
        """Covering an empty set is an error."""
        with self.assertRaises(EmptySetError):
            covering_number(DyadicSet(2, 4, np.zeros((0, 2))), ShapeVector.isotropic(2, 4))

    def test_report_counts(self):
        """count equals the number of cells and the point counts sum to |A|."""
        A = random_set(1, 2, 6, 300)
        report = covering_number(A, ShapeVector((1, 1), (Fraction(1, 2), 1), 6))
        self.assertEqual(report.count, len(report.per_cell_counts))
        self.assertEqual(sum(report.per_cell_counts.values()), len(A))
        self.assertEqual(report.to_dict()['count'], report.count)

    def test_restricted_covering_grid(self):
        """A ρ=2^-4 box in the full 2^-8 grid holds 2^8 cells."""
        A = DyadicSet.full_grid(2, 8)
        shape = ShapeVector.isotropic(2, 8)
        self.assertEqual(restricted_covering(A, shape, (8, 8), Fraction(1, 16)), 256)

    def test_restricted_covering_large_radius(self):
        """A box containing all of A gives the full covering number."""
        A = random_set(5, 2, 6, 100)
        shape = ShapeVector((1, 1), (0, 1), 6)
        self.assertEqual(restricted_covering(A, shape, (32, 32), 2), covering_number(A, shape).count)

    def test_restricted_covering_radius_below_resolution(self):
        """Radii below 2^-k are rejected."""
        A = DyadicSet.full_grid(2, 4)
        with self.assertRaises(InvalidInputError):
            restricted_covering(A, ShapeVector.isotropic(2, 4), (0, 0), Fraction(1, 32))

    def test_max_restricted_concentrated(self):
        """A set inside one ρ-box has maximal restricted count equal to its covering number."""
        A = DyadicSet(2, 8, np.array([[i, j] for i in range(4) for j in range(4)]) + 40)
        shape = ShapeVector.isotropic(2, 8)
        self.assertEqual(max_restricted_covering(A, shape, Fraction(1, 16)).count, 16)

    def test_rough_refinement(self):
        """P = Q gives 1; finest inside a single coarse cell counts every point."""
        A = random_set(2, 2, 5, 60)
        fine = ShapeVector.isotropic(2, 5)
        coarse = ShapeVector.isotropic(2, 5, 0)
        self.assertEqual(rough_refinement_factor(fine, fine, A), 1)
        self.assertEqual(rough_refinement_factor(fine, coarse, A), len(A))
        self.assertEqual(rough_refinement_factor(fine, coarse, DyadicSet.full_grid(2, 5)), 2 ** 10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from([2, 3]))
    def test_monotone_and_refinement(self, seed, d):
        """Subsets cover less; finer shapes cover more, by at most the refinement count."""
        k = 4
        A = random_set(seed, d, k, 80)
        sub = A.subset(np.arange(len(A)) % 3 == 0)
        coarse = ShapeVector.isotropic(d, k, Fraction(1, 2))
        fine = ShapeVector.from_coordinate_exponents([Fraction(1, 2)] + [1] * (d - 1), k)
        n_coarse = covering_number(A, coarse).count
        n_fine = covering_number(A, fine).count
        self.assertLessEqual(covering_number(sub, fine).count, n_fine)
        self.assertLessEqual(n_coarse, n_fine)
        self.assertLessEqual(n_fine, n_coarse * 2 ** fine.log2_cells_per(coarse))


class RegularityTests(SimpleTestCase):
    """Tests for regularity and the regularization lemma."""

    def setUp(self):
        self.filtration = Filtration.isotropic(2, 8, [0, Fraction(1, 2), 1])

    def test_full_grid_is_regular(self):
        """The full grid is regular at every level."""
        self.assertTrue(is_regular(DyadicSet.full_grid(2, 8), self.filtration).regular)

    def test_singleton_is_regular(self):
        """A single point is regular and regularizes to itself."""
        A = DyadicSet(2, 8, [[3, 200]])
        self.assertTrue(is_regular(A, self.filtration).regular)
        self.assertEqual(regularize(A, self.filtration), A)

    def test_counterexample_not_regular(self):
        """A₁⊔A₂ is not regular between 𝒟_{δ^{1/2}} ≺ 𝒟_δ."""
        A = counterexample_2d(8)
        report = is_regular(A, self.filtration)
        self.assertFalse(report.pairs[1].regular)
        self.assertIsNotNone(report.pairs[1].offending_cell)

    def test_regular_set_unchanged(self):
        """Regularizing an already regular set changes nothing."""
        A = DyadicSet.full_grid(2, 6)
        filtration = Filtration.isotropic(2, 6, [0, Fraction(1, 2), 1])
        self.assertEqual(regularize(A, filtration), A)

    def test_counterexample_keeps_dense_part(self):
        """The pigeonhole keeps (a trimmed part of) the dense disc A₂."""
        A = counterexample_2d(8)
        result = regularize_report(A, self.filtration)
        self.assertTrue(result.bound_holds)
        self.assertTrue(is_regular(result.subset, self.filtration).regular)
        self.assertTrue(np.all(result.subset.points[:, 1] > 0), 'the sparse row A₁ should be dropped')
        self.assertGreater(len(result.subset), len(A) // 4)

    def test_filtration_of_length_one(self):
        """Regularization needs two levels."""
        with self.assertRaises(InvalidInputError):
            regularize(DyadicSet.full_grid(2, 2), Filtration.isotropic(2, 2, [1]))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 100_000), st.sampled_from([2, 3]))
    def test_regularization_bound(self, seed, d):
        """A′ ⊆ A is regular, a union of finest cells of A, and meets the lower bound exactly."""
        k = 4
        A = clustered_set(seed, d, k)
        filtration = Filtration.isotropic(d, k, [0, Fraction(1, 4), Fraction(1, 2), 1])
        result = regularize_report(A, filtration)
        self.assertTrue(result.subset.is_subset_of(A))
        self.assertTrue(is_regular(result.subset, filtration).regular)
        self.assertTrue(result.bound_holds, result.to_dict())

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 100_000))
    def test_regular_subset_transfer(self, seed):
        """For regular A and A′ ⊆ A: 𝒩_𝒫(A′)/𝒩_𝒫(A) ≥ 𝒩_𝒬(A′)/𝒩_𝒬(A)."""
        k = 4
        P = ShapeVector.isotropic(2, k, Fraction(1, 2))
        Q = ShapeVector.isotropic(2, k, 1)
        A = regularize(clustered_set(seed, 2, k), Filtration((P, Q)))
        rng = np.random.default_rng(seed)
        sub = A.subset(rng.random(len(A)) < 0.4)
        if len(sub) == 0:
            return
        lhs = covering_number(sub, P).count * covering_number(A, Q).count
        rhs = covering_number(sub, Q).count * covering_number(A, P).count
        self.assertGreaterEqual(lhs, rhs)


def brute_counts(points, side_x, side_y):
    """Covering numbers by Python tuples, independent of the numpy path."""
    return len({(x // side_x, y // side_y, z) for x, y, z in points})


class SubmodularityTests(SimpleTestCase):
    """Tests for the submodularity construction."""

    def test_singleton(self):
        """A singleton keeps itself and satisfies the inequality for every c."""
        A = DyadicSet(2, 4, [[1, 2]])
        P = ShapeVector.from_coordinate_exponents([0, 1], 4)
        Q = ShapeVector.from_coordinate_exponents([1, 0], 4)
        for c in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)):
            sub, cert = submodular_split(A, P, Q, c)
            self.assertEqual(sub, A)
            self.assertTrue(cert.holds)

    def test_c_out_of_range(self):
        """c must lie strictly between 0 and 1."""
        A = DyadicSet(2, 4, [[1, 2]])
        P = ShapeVector.isotropic(2, 4)
        for c in (0, 1, 1.5):
            with self.assertRaises(InvalidInputError):
                submodular_split(A, P, P, c)

    def test_product_grid(self):
        """For an aligned product set the inequality already holds with A′ = A."""
        xs = np.arange(0, 16, 2)
        ys = np.arange(1, 16, 3)
        A = DyadicSet(2, 4, np.array([(x, y) for x in xs for y in ys]))
        P = ShapeVector.from_coordinate_exponents([1, 0], 4)
        Q = ShapeVector.from_coordinate_exponents([0, 1], 4)
        _, cert = submodular_split(A, P, Q, Fraction(1, 2))
        self.assertTrue(cert.naive_holds)
        self.assertTrue(cert.holds)
        self.assertEqual((cert.n_p, cert.n_q, cert.n_r), (len(xs), len(ys), len(xs) * len(ys)))

    def test_plane_and_axis(self):
        """Counts on the plane ∪ axis set match a brute-force enumeration; the split always certifies."""
        for R in (16, 128):
            k = int(math.log2(2 * R))
            xs, ys = np.meshgrid(np.arange(-R + 1, R), np.arange(-R + 1, R), indexing='ij')
            disc = xs ** 2 + ys ** 2 < R * R
            plane = np.stack([xs[disc], ys[disc], np.zeros(int(disc.sum()), dtype=int)], axis=1)
            zs = np.arange(-R + 1, R)
            axis = np.stack([np.zeros_like(zs), np.zeros_like(zs), zs], axis=1)
            A = DyadicSet(3, k, np.vstack([plane, axis]) + R)
            pts = [tuple(p) for p in A.points.tolist()]
            P = ShapeVector.from_coordinate_exponents([Fraction(1, k), 1, 1], k)
            Q = ShapeVector.from_coordinate_exponents([1, Fraction(1, k), 1], k)
            _, cert = submodular_split(A, P, Q, Fraction(1, 2))
            self.assertEqual(cert.n_p, brute_counts(pts, R, 1))
            self.assertEqual(cert.n_q, brute_counts(pts, 1, R))
            self.assertEqual(cert.n_r, len(pts))
            self.assertEqual(cert.n_s, brute_counts(pts, R, R))
            self.assertTrue(cert.holds)
            self.assertTrue(cert.mass_kept)
            if R == 128:
                self.assertFalse(cert.naive_holds)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 100_000), st.sampled_from([2, 3]), st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]))
    def test_certificate_on_random_sets(self, seed, d, c):
        """The Markov split keeps (1−c) of 𝒩_ℛ and satisfies the inequality."""
        k = 4
        A = clustered_set(seed, d, k)
        rng = np.random.default_rng(seed)
        P = ShapeVector.from_coordinate_exponents(rng.choice([0, Fraction(1, 2), 1], size=d), k)
        Q = ShapeVector.from_coordinate_exponents(rng.choice([0, Fraction(1, 4), 1], size=d), k)
        sub, cert = submodular_split(A, P, Q, c)
        self.assertTrue(sub.is_subset_of(A))
        self.assertTrue(cert.mass_kept, cert.to_dict())
        self.assertTrue(cert.holds, cert.to_dict())


class ProjectionSubmodularityTests(SimpleTestCase):
    """Tests for the coordinate projection corollary."""

    def test_grid_in_z3(self):
        """V = span(e₁,e₂), W = span(e₂,e₃) on a grid, checked against direct projections."""
        rng = np.random.default_rng(4)
        Z = DyadicSet(3, 4, rng.integers(0, 16, size=(200, 3)))
        sub, cert = projection_submodularity(Z, (0, 1), (1, 2), Fraction(1, 2))
        pts = Z.points.tolist()
        self.assertEqual(cert.inner.n_p, len({(x, y) for x, y, _ in pts}))
        self.assertEqual(cert.inner.n_q, len({(y, z) for _, y, z in pts}))
        self.assertEqual(cert.inner.n_r, len(pts))
        self.assertTrue(cert.holds)

    def test_nested_subspaces(self):
        """V ⊆ W holds by monotonicity."""
        Z = random_set(8, 3, 4, 100)
        _, cert = projection_submodularity(Z, (0,), (0, 1), Fraction(3, 4))
        self.assertTrue(cert.holds)

    def test_basis_input(self):
        """Coordinate subspaces may be given by a basis."""
        Z = random_set(9, 3, 4, 30)
        _, cert = projection_submodularity(Z, [[0.0, 2.0, 0.0], [1.0, 1.0, 0.0]], [[0.0, 0.0, 1.0]], 0.5)
        self.assertEqual(cert.axes_v, (0, 1))
        self.assertEqual(cert.axes_w, (2,))

    def test_non_coordinate_subspace(self):
        """A diagonal line is not supported."""
        Z = random_set(9, 3, 4, 30)
        with self.assertRaises(UnsupportedError):
            projection_submodularity(Z, [[1.0, 1.0, 0.0]], (2,), 0.5)


class EntropyTests(SimpleTestCase):
    """Tests for entropy and the entropy/covering sandwich."""

    def setUp(self):
        self.shape = ShapeVector.isotropic(2, 4)

    def test_dirac(self):
        """A Dirac mass has zero entropy."""
        nu = AtomicMeasure(DyadicSet(2, 4, [[3, 3]]), [1.0])
        self.assertEqual(shannon_entropy(nu, self.shape), 0.0)

    def test_uniform(self):
        """Uniform on N cells gives log N."""
        nu = AtomicMeasure.uniform(DyadicSet.full_grid(2, 4))
        self.assertAlmostEqual(shannon_entropy(nu, self.shape), math.log(256), places=12)

    def test_two_atoms(self):
        """Masses (3/4, 1/4) give ≈ 0.5623."""
        nu = AtomicMeasure(DyadicSet(2, 4, [[0, 0], [5, 5]]), [0.75, 0.25])
        self.assertAlmostEqual(shannon_entropy(nu, self.shape), 0.5623351446, places=9)

    def test_not_probability(self):
        """Total mass must be 1."""
        nu = AtomicMeasure(DyadicSet(2, 4, [[0, 0]]), [0.5])
        with self.assertRaises(InvalidInputError):
            shannon_entropy(nu, self.shape)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 100_000), st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]))
    def test_sandwich(self, seed, c):
        """log 𝒩(supp ν) ≥ H(ν) ≥ (1−c)·min log 𝒩(E) over ν(E) ≥ c."""
        rng = np.random.default_rng(seed)
        pts = rng.integers(0, 16, size=(rng.integers(1, 60), 2))
        w = rng.pareto(1.5, size=pts.shape[0]) + 1e-3
        nu = AtomicMeasure.from_atoms(pts, w / w.sum(), 4).normalized()
        shape = ShapeVector.isotropic(2, 4, Fraction(1, 2))
        bounds = entropy_covering_bounds(nu, shape, c)
        self.assertTrue(bounds.holds, bounds.to_dict())


class AngleTests(SimpleTestCase):
    """Tests for subspace angles."""

    def test_examples(self):
        """Orthogonal lines give 1, equal lines 0, a π/6 tilt 1/2."""
        self.assertAlmostEqual(angle([[1, 0]], [[0, 1]]), 1.0)
        self.assertAlmostEqual(angle([[1, 0]], [[2, 0]]), 0.0)
        self.assertAlmostEqual(angle([[1, 0]], [[math.cos(math.pi / 6), math.sin(math.pi / 6)]]), 0.5)

    def test_dimension_mismatch(self):
        """dim U + dim W must equal d."""
        with self.assertRaises(InvalidInputError):
            angle([[1, 0, 0]], [[0, 1, 0]])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 100_000))
    def test_symmetric_and_basis_invariant(self, seed):
        """Swapping U, W and re-basing does not change the angle."""
        rng = np.random.default_rng(seed)
        U = rng.normal(size=(1, 3))
        W = rng.normal(size=(2, 3))
        mix = rng.normal(size=(2, 2)) + 3 * np.eye(2)
        self.assertAlmostEqual(angle(U, W), angle(W, U), delta=1e-10)
        self.assertAlmostEqual(angle(U, W), angle(U, mix @ W), delta=1e-10)


class ConcentrationTests(SimpleTestCase):
    """Tests for the Grassmannian concentration search."""

    def test_uniform_circle(self):
        """Uniform directions in the plane put mass ≈ (2/π)ρ near any line."""
        phis = np.linspace(0, np.pi, 2000, endpoint=False)
        vectors = np.stack([np.cos(phis), np.sin(phis)], axis=1)
        report = max_concentration(vectors, [0.01, 0.05, 0.2], budget=128, kappa=1.0, seed=1)
        for rho, mass in zip(report.rhos, report.max_mass):
            self.assertAlmostEqual(mass, 2 * math.asin(rho) / math.pi, delta=0.01)
        self.assertLess(report.worst_ratio, 1.0)

    def test_dirac_concentrates(self):
        """All samples equal: the worst W captures the full mass at every ρ."""
        vectors = np.tile([[0.6, 0.8]], (50, 1))
        report = max_concentration(vectors, [1e-3, 1e-2], budget=16, kappa=0.5)
        for mass in report.max_mass:
            self.assertAlmostEqual(mass, 1.0)

    def test_three_dimensions(self):
        """Samples in a great circle are caught by its normal in d=3."""
        phis = np.linspace(0, 2 * np.pi, 500, endpoint=False)
        vectors = np.stack([np.cos(phis), np.sin(phis), np.zeros_like(phis)], axis=1)
        report = max_concentration(vectors, [1e-3], budget=64)
        self.assertAlmostEqual(report.max_mass[0], 1.0)
