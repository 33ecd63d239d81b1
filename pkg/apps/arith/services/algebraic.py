"""
Algebraic numbers given by a minimal polynomial and a root index.

Coefficients are stored highest degree first, primitive, with a positive
leading coefficient. Roots are indexed in sympy's canonical CRootOf order
(real roots ascending, then complex roots by real and imaginary part) and
evaluated from certified isolating intervals.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Sequence, Union

import sympy
from sympy import CRootOf, Poly, Symbol

from apps.common.exceptions import DomainError, InvalidInputError

logger = logging.getLogger(__name__)

X = Symbol('X')
ROOT_DIGITS = 30


def _primitive(coeffs: Sequence[int]) -> tuple[int, ...]:
    coeffs = [int(c) for c in coeffs]
    while coeffs and coeffs[0] == 0:
        coeffs.pop(0)
    if len(coeffs) < 2:
        raise InvalidInputError('a minimal polynomial needs degree ≥ 1')
    g = reduce(math.gcd, coeffs)
    sign = -1 if coeffs[0] < 0 else 1
    return tuple(sign * c // g for c in coeffs)


@dataclass(frozen=True)
class AlgebraicNumber:
    """The root_index-th root of the irreducible integer polynomial minpoly."""
    minpoly: tuple[int, ...]
    root_index: int = 0
    _roots: tuple[complex, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.minpoly)
        if coeffs != _primitive(coeffs):
            raise InvalidInputError(f'minpoly {list(coeffs)} is not primitive with positive leading coefficient')
        object.__setattr__(self, 'minpoly', coeffs)
        poly = Poly(list(coeffs), X, domain='ZZ')
        _, factors = poly.factor_list()
        if len(factors) != 1 or factors[0][1] != 1:
            raise InvalidInputError(f'minpoly {list(coeffs)} is reducible over Q')
        if not 0 <= self.root_index < poly.degree():
            raise InvalidInputError(f'root_index {self.root_index} out of range for degree {poly.degree()}')
        roots = tuple(complex(r.evalf(ROOT_DIGITS)) for r in poly.all_roots())
        object.__setattr__(self, '_roots', roots)

    @classmethod
    def from_poly(cls, coeffs: Sequence[int], root_index: int = 0) -> 'AlgebraicNumber':
        """Normalize sign and content before constructing."""
        return cls(_primitive(coeffs), root_index)

    @classmethod
    def from_rational(cls, value: Union[int, Fraction, str]) -> 'AlgebraicNumber':
        q = Fraction(value)
        return cls.from_poly([q.denominator, -q.numerator])

    @classmethod
    def from_expr(cls, expr) -> 'AlgebraicNumber':
        """
        From a sympy expression such as sqrt(2)/2 or (1 + sqrt(5))/2.

        Raises:
            InvalidInputError: if the expression is not algebraic
        """
        expr = sympy.sympify(expr)
        try:
            mp = sympy.minimal_polynomial(expr, X, polys=True)
        except (NotImplementedError, sympy.polys.polyerrors.NotAlgebraic) as e:
            raise InvalidInputError(f'{expr} is not a recognised algebraic number') from e
        coeffs = _primitive([int(c) for c in mp.all_coeffs()])
        value = complex(sympy.N(expr, ROOT_DIGITS))
        roots = [complex(r.evalf(ROOT_DIGITS)) for r in Poly(list(coeffs), X).all_roots()]
        index = min(range(len(roots)), key=lambda i: abs(roots[i] - value))
        return cls(coeffs, index)

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    @property
    def leading(self) -> int:
        return self.minpoly[0]

    def poly(self) -> Poly:
        return Poly(list(self.minpoly), X, domain='ZZ')

    def root(self) -> CRootOf:
        return CRootOf(self.poly().as_expr(), self.root_index)

    def conjugates(self) -> tuple[complex, ...]:
        return self._roots

    @property
    def value(self) -> complex:
        return self._roots[self.root_index]

    def is_rational(self) -> bool:
        return self.degree == 1

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise DomainError(f'{self} is not rational')
        return Fraction(-self.minpoly[1], self.minpoly[0])

    def inverse(self) -> 'AlgebraicNumber':
        """1/α, whose minimal polynomial is the reversed one."""
        if self.minpoly[-1] == 0:
            raise DomainError('0 has no inverse')
        reversed_coeffs = _primitive(list(reversed(self.minpoly)))
        target = 1 / self.value
        roots = [complex(r.evalf(ROOT_DIGITS)) for r in Poly(list(reversed_coeffs), X).all_roots()]
        index = min(range(len(roots)), key=lambda i: abs(roots[i] - target))
        return AlgebraicNumber(reversed_coeffs, index)

    def to_dict(self) -> dict:
        return {'minpoly': list(self.minpoly), 'root_index': self.root_index}

    @classmethod
    def from_dict(cls, data) -> 'AlgebraicNumber':
        if isinstance(data, (int, str, Fraction)):
            return cls.from_rational(data)
        return cls(tuple(data['minpoly']), int(data.get('root_index', 0)))

    def __str__(self) -> str:
        return f'root #{self.root_index} of {self.poly().as_expr()}'


Entry = Union[AlgebraicNumber, int, Fraction, str]


def as_algebraic(value: Entry) -> AlgebraicNumber:
    if isinstance(value, AlgebraicNumber):
        return value
    if isinstance(value, dict):
        return AlgebraicNumber.from_dict(value)
    if isinstance(value, (int, Fraction)):
        return AlgebraicNumber.from_rational(value)
    if isinstance(value, str):
        try:
            return AlgebraicNumber.from_rational(value)
        except ValueError:
            return AlgebraicNumber.from_expr(value)
    return AlgebraicNumber.from_expr(value)
