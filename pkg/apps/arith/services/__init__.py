from apps.arith.services.algebraic import AlgebraicNumber, as_algebraic
from apps.arith.services.mahler import (
    CompositionReport,
    as_polynomial,
    denominator,
    length,
    mahler,
    mahler_composition_check,
    mahler_matrix,
    minimal_polynomial_of,
)

__all__ = [
    'AlgebraicNumber',
    'as_algebraic',
    'CompositionReport',
    'as_polynomial',
    'denominator',
    'length',
    'mahler',
    'mahler_composition_check',
    'mahler_matrix',
    'minimal_polynomial_of',
]
