"""
Finite orbits of integral walks and their discrepancy against m_X.

A point gΛ with q·g integral is stored as the sublattice qgℤ² ⊂ ℤ² in
column Hermite form [[a, 0], [b, c]] (a, c > 0, 0 ≤ b < c, ac = q²), so two
representatives of one point compare equal as integer triples.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.conf import settings
from sympy.core.intfunc import igcdex

from apps.common.exceptions import InvalidInputError, ResourceError
from apps.common.fitting import LineFit, loglog_fit
from apps.common.rng import stream

from .equidistribution import haar_measure
from .measures import EmpiricalMeasure, WalkMeasure
from .wasserstein import LOCAL_TENT_WIDTHS, TentDictionary

logger = logging.getLogger(__name__)

MAX_DENOMINATOR = 32
DEFAULT_HAAR_SAMPLES = 20000
DEFAULT_DICTIONARY = 512
_ORBIT_DICTIONARY_STREAM = 41

Hermite = tuple[int, int, int]


def _orbit_cap() -> int:
    return int(getattr(settings, 'MULTISLICE_ORBIT_SIZE_CAP', 20000))


def column_hermite(m: np.ndarray) -> Hermite:
    """(a, b, c) of the column Hermite form of the integer matrix m."""
    (m00, m01), (m10, m11) = ((int(v) for v in row) for row in m)
    if m00 == 0 and m01 == 0:
        raise InvalidInputError(f'singular lattice basis {m.tolist()}')
    x, y, g = igcdex(m00, m01)
    if g < 0:
        x, y, g = -x, -y, -g
    # first row becomes (g, 0) under the unimodular [[x, −m01/g], [y, m00/g]]
    b = m10 * x + m11 * y
    c = abs(-m10 * (m01 // g) + m11 * (m00 // g))
    if c == 0:
        raise InvalidInputError(f'singular lattice basis {m.tolist()}')
    return int(g), int(b % c), int(c)


def _point(h: Hermite, q: int) -> np.ndarray:
    a, b, c = h
    return np.array([[a / q, 0.0], [b / q, c / q]])


def orbit_closure(mu: WalkMeasure, q: int) -> list[Hermite]:
    """
    The orbit of diag(1/q, q)Λ under the semigroup generated by supp μ.

    For a finite orbit the forward closure is the whole group orbit.

    Raises:
        InvalidInputError: if μ is not integral or q is out of range
        ResourceError: if the orbit exceeds MULTISLICE_ORBIT_SIZE_CAP
    """
    if not mu.integral:
        raise InvalidInputError('finite orbits need atoms in SL2(Z)')
    if not 1 <= q <= MAX_DENOMINATOR:
        raise InvalidInputError(f'q must lie in [1, {MAX_DENOMINATOR}], got {q}')
    atoms = [np.rint(a).astype(np.int64) for a in mu.atoms]
    start = column_hermite(np.array([[1, 0], [0, q * q]]))
    cap = _orbit_cap()
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        a, b, c = queue.popleft()
        basis = np.array([[a, 0], [b, c]], dtype=np.int64)
        for atom in atoms:
            image = column_hermite(atom @ basis)
            if image in seen:
                continue
            seen.add(image)
            order.append(image)
            queue.append(image)
            if len(seen) > cap:
                raise ResourceError(f'orbit through denominator {q} exceeds the cap of {cap} points')
    return order


@dataclass
class OrbitDiscrepancy:
    q: int
    R: int
    discrepancy: float
    dictionary_size: int
    haar_samples: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'q': self.q,
            'R': self.R,
            'discrepancy': self.discrepancy,
            'dictionary_size': self.dictionary_size,
            'haar_samples': self.haar_samples,
            **self.extra,
        }


def orbit_measure(mu: WalkMeasure, q: int) -> EmpiricalMeasure:
    """m_Y, uniform on the orbit through denominator q."""
    orbit = orbit_closure(mu, q)
    mats = np.stack([_point(h, q) for h in orbit])
    return EmpiricalMeasure.from_matrices(mats, {'source': 'finite-orbit', 'mu': mu.name, 'q': q, 'R': len(orbit)})


def finite_orbit_discrepancy(mu: WalkMeasure, q: int, dictionary_size: int = DEFAULT_DICTIONARY,
                             haar_samples: int = DEFAULT_HAAR_SAMPLES, seed: int = 0,
                             haar: Optional[EmpiricalMeasure] = None) -> OrbitDiscrepancy:
    """
    sup over a Lipschitz tent dictionary of |m_Y(f) − m̂_X(f)|.

    Tents are centred on every orbit point first (at every width), then on
    Haar sample points up to ``dictionary_size``.
    """
    m_y = orbit_measure(mu, q)
    m_x = haar if haar is not None else haar_measure(haar_samples, seed)
    rng = stream(seed, _ORBIT_DICTIONARY_STREAM, q)
    widths = np.asarray(LOCAL_TENT_WIDTHS)
    orbit_centers = np.repeat(m_y.reps, widths.size, axis=0)
    orbit_widths = np.tile(widths, len(m_y))
    extra = max(0, dictionary_size - orbit_widths.size)
    picks = rng.integers(0, len(m_x), size=extra)
    dictionary = TentDictionary(
        np.concatenate([orbit_centers, m_x.reps[picks]]),
        np.concatenate([orbit_widths, rng.choice(widths, size=extra)]),
        beta=1.0,
    )
    gaps = np.abs(dictionary.integrate(m_y) - dictionary.integrate(m_x))
    report = OrbitDiscrepancy(q, len(m_y), float(gaps.max()), len(dictionary), len(m_x))
    logger.info(f'finite_orbit_discrepancy: q={q} R={report.R} discrepancy={report.discrepancy:.4g}')
    return report


def discrepancy_regression(reports: list[OrbitDiscrepancy]) -> LineFit:
    """log discrepancy against log R."""
    return loglog_fit([r.R for r in reports], [r.discrepancy for r in reports])
