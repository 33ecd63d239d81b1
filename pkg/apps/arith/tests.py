"""
Tests for algebraic numbers, Mahler measure and the composition bound.
"""

import math
from fractions import Fraction

from django.test import SimpleTestCase, override_settings

from apps.common.exceptions import DomainError, InvalidInputError, ResourceError, UnsupportedError

from .services import (
    AlgebraicNumber,
    as_algebraic,
    denominator,
    mahler,
    mahler_composition_check,
    mahler_matrix,
)

GOLDEN = (1 + math.sqrt(5)) / 2

CORPUS = [
    Fraction(3, 2),
    Fraction(1),
    Fraction(-4, 3),
    Fraction(7, 5),
    'sqrt(2)',
    'sqrt(2)/2',
    '(1 + sqrt(5))/2',
    '2**(1/3)',
    '3*I/2',
    'sqrt(3)/3 + 1',
]


def corpus():
    return [as_algebraic(value) for value in CORPUS] + [AlgebraicNumber((1, 0, -1, -1), 0)]


class AlgebraicNumberTests(SimpleTestCase):
    """AlgebraicNumber construction and serialization."""

    def test_rational(self):
        alpha = AlgebraicNumber.from_rational(Fraction(3, 2))
        self.assertEqual(alpha.minpoly, (2, -3))
        self.assertAlmostEqual(alpha.value.real, 1.5, places=12)
        self.assertEqual(alpha.as_fraction(), Fraction(3, 2))

    def test_from_expr_selects_matching_root(self):
        alpha = AlgebraicNumber.from_expr('-sqrt(2)')
        self.assertEqual(alpha.minpoly, (1, 0, -2))
        self.assertAlmostEqual(alpha.value.real, -math.sqrt(2), places=12)

    def test_reducible_minpoly_rejected(self):
        with self.assertRaises(InvalidInputError):
            AlgebraicNumber((1, 0, -1))

    def test_non_primitive_rejected(self):
        with self.assertRaises(InvalidInputError):
            AlgebraicNumber((2, 0, -4))
        self.assertEqual(AlgebraicNumber.from_poly((-2, 0, 4)).minpoly, (1, 0, -2))

    def test_root_index_range(self):
        with self.assertRaises(InvalidInputError):
            AlgebraicNumber((1, 0, -2), 2)

    def test_serialization(self):
        alpha = AlgebraicNumber.from_expr('(1 + sqrt(5))/2')
        data = alpha.to_dict()
        self.assertEqual(set(data), {'minpoly', 'root_index'})
        self.assertEqual(AlgebraicNumber.from_dict(data), alpha)

    def test_inverse(self):
        alpha = AlgebraicNumber.from_expr('sqrt(2)/2')
        self.assertAlmostEqual(alpha.inverse().value.real, math.sqrt(2), places=12)
        with self.assertRaises(DomainError):
            AlgebraicNumber.from_rational(0).inverse()


class MahlerTests(SimpleTestCase):
    """Mahler measure and denominators."""

    def test_examples(self):
        self.assertAlmostEqual(mahler(Fraction(3, 2)), 3.0, places=12)
        self.assertAlmostEqual(mahler(1), 1.0, places=12)
        self.assertAlmostEqual(mahler('sqrt(2)'), 2.0, places=9)
        self.assertAlmostEqual(mahler('(1 + sqrt(5))/2'), GOLDEN, places=9)

    def test_roots_of_unity(self):
        self.assertAlmostEqual(mahler('I'), 1.0, places=9)
        self.assertAlmostEqual(mahler(-1), 1.0, places=12)

    def test_denominator(self):
        self.assertEqual(denominator(Fraction(3, 2)), 2)
        self.assertEqual(denominator('sqrt(2)'), 1)
        self.assertEqual(denominator('sqrt(2)/2'), 2)
        self.assertEqual(denominator('3*I/2'), 2)

    def test_inverse_law(self):
        for alpha in corpus():
            if alpha.minpoly[-1] == 0:
                continue
            with self.subTest(alpha=str(alpha)):
                self.assertAlmostEqual(mahler(alpha.inverse()) / mahler(alpha), 1.0, places=9)

    def test_absolute_value_sandwich(self):
        for alpha in corpus():
            with self.subTest(alpha=str(alpha)):
                m = mahler(alpha)
                self.assertLessEqual(1 / m, abs(alpha.value) * (1 + 1e-9))
                self.assertLessEqual(abs(alpha.value), m * (1 + 1e-9))

    def test_denominator_below_mahler(self):
        for alpha in corpus():
            with self.subTest(alpha=str(alpha)):
                self.assertLessEqual(denominator(alpha), mahler(alpha) * (1 + 1e-9))

    def test_conjugates_share_mahler(self):
        for alpha in corpus():
            values = [mahler(AlgebraicNumber(alpha.minpoly, k)) for k in range(alpha.degree)]
            self.assertLess(max(values) - min(values), 1e-9 * max(values))

    def test_matrix(self):
        self.assertEqual(mahler_matrix([[1, 0], [0, 1]]), 1.0)
        self.assertAlmostEqual(mahler_matrix([[2, 1], [1, 1]]), 2.0, places=12)
        self.assertAlmostEqual(mahler_matrix([[1, 'sqrt(2)'], [0, 1]]), 2.0, places=9)


class CompositionTests(SimpleTestCase):
    """The bound Mah(P(α)) ≤ ℒ(P)^d Π Mah(αᵢ)^{kᵢ d / dᵢ}."""

    def test_identity_polynomial_is_equality(self):
        for alpha in ['sqrt(2)', Fraction(3, 2), '2**(1/3)']:
            report = mahler_composition_check('X1', [alpha])
            self.assertTrue(report.passes)
            self.assertAlmostEqual(report.lhs / report.rhs, 1.0, places=9)

    def test_sum_of_square_roots(self):
        report = mahler_composition_check('X1 + X2', ['sqrt(2)', 'sqrt(2)'])
        self.assertEqual(report.value.minpoly, (1, 0, -8))
        self.assertAlmostEqual(report.lhs, 8.0, places=9)
        self.assertEqual(report.field_degree, 2)
        self.assertAlmostEqual(report.rhs, 16.0, places=9)
        self.assertTrue(report.passes)

    def test_mixed_fields(self):
        pairs = [
            ('X1*X2', ['sqrt(2)', 'sqrt(3)']),
            ('X1 + X2', ['sqrt(2)', 'sqrt(3)']),
            ('X1**2 - 3*X2', [Fraction(3, 2), '(1 + sqrt(5))/2']),
            ('X1 + X2 + X3', ['sqrt(2)', Fraction(1, 3), 'I']),
            ({(1, 1): 2, (0, 0): -1}, ['sqrt(2)/2', '2**(1/3)']),
        ]
        for P, alphas in pairs:
            with self.subTest(P=P):
                self.assertTrue(mahler_composition_check(P, alphas).passes)

    def test_value_matches_numerics(self):
        report = mahler_composition_check('X1*X2', ['sqrt(2)', 'sqrt(3)'])
        self.assertAlmostEqual(report.value.value.real, math.sqrt(6), places=10)

    def test_too_many_variables(self):
        with self.assertRaises(UnsupportedError):
            mahler_composition_check('X1 + X2 + X3 + X4', [1, 1, 1, 1])

    @override_settings(MULTISLICE_FIELD_DEGREE_CAP=4)
    def test_degree_cap(self):
        with self.assertRaises(ResourceError):
            mahler_composition_check('X1 + X2 + X3', ['sqrt(2)', 'sqrt(3)', 'sqrt(5)'])
