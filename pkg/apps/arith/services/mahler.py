"""
Mahler measure, denominators and the composition bound.

Provides:
- mahler / denominator for single algebraic numbers
- mahler_matrix for matrices with algebraic entries
- mahler_composition_check: builds the minimal polynomial of P(α₁,…,αₙ)
  by iterated resultants and compares both sides of
  Mah(P(α)) ≤ ℒ(P)^d · Π Mah(αᵢ)^{kᵢ d / dᵢ}
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import sympy
from django.conf import settings
from sympy import Poly, Symbol

from apps.common.exceptions import ResourceError, UnsupportedError
from apps.arith.services.algebraic import ROOT_DIGITS, X, AlgebraicNumber, Entry, as_algebraic

logger = logging.getLogger(__name__)

MAX_VARIABLES = 3
MAX_INPUT_DEGREE = 8
EVAL_DIGITS = 50
BOUND_TOLERANCE = 1e-9


def mahler(alpha: Entry) -> float:
    """
    Mah(α) = |a_m| Π max(1, |α_i|) over all conjugates.

    Args:
        alpha: an AlgebraicNumber, or anything as_algebraic accepts

    Returns:
        The Mahler measure as a float
    """
    alpha = as_algebraic(alpha)
    return abs(alpha.leading) * math.prod(max(1.0, abs(r)) for r in alpha.conjugates())


def denominator(alpha: Entry) -> int:
    """
    Least Q ≥ 1 with Qα an algebraic integer.

    Qα is a root of X^m + Σ a_i Q^{m-i} / a_m X^i, so Q works exactly when
    a_m divides every a_i Q^{m-i}. The admissible Q form an ideal containing
    a_m, so the search runs over the divisors of a_m.
    """
    alpha = as_algebraic(alpha)
    lead = alpha.leading
    m = alpha.degree
    # a_i for i = m-1 .. 0
    lower = alpha.minpoly[1:]
    for q in sympy.divisors(lead):
        if all((a * q ** (k + 1)) % lead == 0 for k, a in enumerate(lower)):
            return int(q)
    return lead


def mahler_matrix(matrix: Sequence[Sequence[Entry]]) -> float:
    """Mah(A) = max over entries of Mah(a_ij)."""
    return max(mahler(entry) for row in matrix for entry in row)


PolynomialLike = Union[str, sympy.Expr, dict]


def variables(n: int) -> tuple[Symbol, ...]:
    return tuple(Symbol(f'X{i + 1}') for i in range(n))


def as_polynomial(P: PolynomialLike, n: int) -> Poly:
    """
    Integer polynomial in X1..Xn.

    Accepts a sympy expression, a string such as 'X1*X2 + 3', or a dict
    mapping exponent tuples to integer coefficients.
    """
    gens = variables(n)
    if isinstance(P, dict):
        expr = sum(int(c) * sympy.Mul(*(g ** e for g, e in zip(gens, exps))) for exps, c in P.items())
    else:
        expr = sympy.sympify(P, locals={str(g): g for g in gens})
    extra = expr.free_symbols - set(gens)
    if extra:
        raise UnsupportedError(f'polynomial uses variables {sorted(map(str, extra))} beyond X1..X{n}')
    return Poly(expr, *gens, domain='ZZ')


def length(P: Poly) -> int:
    """ℒ(P), the sum of the absolute values of the coefficients."""
    return sum(abs(int(c)) for c in P.coeffs())


def _degree_cap() -> int:
    return int(getattr(settings, 'MULTISLICE_FIELD_DEGREE_CAP', 64))


def _field_degree(alphas: Sequence[AlgebraicNumber]) -> tuple[int, bool]:
    """[Q(α₁,…,αₙ):Q], or the product of degrees as an upper bound when sympy cannot tell."""
    distinct = list(dict.fromkeys(alphas))
    if len(distinct) == 1:
        return distinct[0].degree, True
    try:
        minpoly, _ = sympy.primitive_element([a.root() for a in distinct], X, polys=True)
        return int(minpoly.degree()), True
    except (NotImplementedError, sympy.polys.polyerrors.BasePolynomialError) as e:
        logger.warning(f'field degree fell back to product of degrees: {e}')
        return math.prod(a.degree for a in distinct), False


def _evaluate(P: Poly, alphas: Sequence[AlgebraicNumber]) -> complex:
    gens = P.gens
    subs = {g: a.root() for g, a in zip(gens, alphas)}
    return complex(sympy.N(P.as_expr().subs(subs), EVAL_DIGITS))


def minimal_polynomial_of(P: Poly, alphas: Sequence[AlgebraicNumber]) -> AlgebraicNumber:
    """
    The algebraic number P(α₁,…,αₙ), via iterated resultants.

    Res_{x_n}(…Res_{x_1}(Y − P, χ₁(x₁))…, χₙ(xₙ)) vanishes at P(α); its
    irreducible factor nearest the numerical value is the minimal
    polynomial.

    Raises:
        UnsupportedError: more than three variables
        ResourceError: an input degree above 8, or the resultant degree
            above MULTISLICE_FIELD_DEGREE_CAP
    """
    if len(alphas) > MAX_VARIABLES:
        raise UnsupportedError(f'composition check supports at most {MAX_VARIABLES} variables, got {len(alphas)}')
    if any(a.degree > MAX_INPUT_DEGREE for a in alphas):
        raise ResourceError(f'input degree above {MAX_INPUT_DEGREE}')
    total = math.prod(a.degree for a in alphas)
    if total > _degree_cap():
        raise ResourceError(f'field degree {total} exceeds cap {_degree_cap()}')

    y = Symbol('Y')
    resultant = y - P.as_expr()
    for gen, alpha in zip(P.gens, alphas):
        chi = alpha.poly().as_expr().subs(X, gen)
        resultant = sympy.resultant(resultant, chi, gen)
    value = _evaluate(P, alphas)

    _, factors = sympy.factor_list(Poly(resultant, y, domain='ZZ'))
    best: Optional[tuple[float, Poly]] = None
    for factor, _ in factors:
        if factor.degree() < 1:
            continue
        roots = [complex(r.evalf(ROOT_DIGITS)) for r in factor.all_roots()]
        gap = min(abs(r - value) for r in roots)
        if best is None or gap < best[0]:
            best = (gap, factor)
    coeffs = [int(c) for c in best[1].all_coeffs()]
    candidate = AlgebraicNumber.from_poly(coeffs)
    roots = candidate.conjugates()
    index = min(range(len(roots)), key=lambda i: abs(roots[i] - value))
    return AlgebraicNumber(candidate.minpoly, index)


@dataclass
class CompositionReport:
    polynomial: str
    value: AlgebraicNumber
    lhs: float
    rhs: float
    field_degree: int
    field_degree_exact: bool
    length: int
    partial_degrees: list[int]

    @property
    def passes(self) -> bool:
        return self.lhs <= self.rhs * (1 + BOUND_TOLERANCE)

    def to_dict(self) -> dict:
        return {
            'polynomial': self.polynomial,
            'value': self.value.to_dict(),
            'lhs': self.lhs,
            'rhs': self.rhs,
            'field_degree': self.field_degree,
            'field_degree_exact': self.field_degree_exact,
            'length': self.length,
            'partial_degrees': self.partial_degrees,
            'passes': self.passes,
        }


def mahler_composition_check(P: PolynomialLike, alphas: Sequence[Entry]) -> CompositionReport:
    """
    Evaluate both sides of the composition bound for P at alphas.

    Using the product of degrees when the field degree is unknown only
    enlarges the right-hand side, so the check stays sound.
    """
    alphas = [as_algebraic(a) for a in alphas]
    poly = as_polynomial(P, len(alphas))
    value = minimal_polynomial_of(poly, alphas)
    d, exact = _field_degree(alphas)
    ell = length(poly)
    ks = [poly.degree(g) for g in poly.gens]
    log_rhs = d * math.log(ell) if ell > 0 else 0.0
    for k, alpha in zip(ks, alphas):
        log_rhs += k * d / alpha.degree * math.log(mahler(alpha))
    report = CompositionReport(
        polynomial=str(poly.as_expr()),
        value=value,
        lhs=mahler(value),
        rhs=math.exp(log_rhs),
        field_degree=d,
        field_degree_exact=exact,
        length=ell,
        partial_degrees=ks,
    )
    if not report.passes:
        logger.warning(f'composition bound violated for {report.polynomial}: {report.lhs} > {report.rhs}')
    return report
