"""
Haar sampling on X.

A point Λg of Λ\\G is drawn as g = n_x a_y k_φ with z = x + iy uniform for
dx dy / y² on the truncated fundamental domain {|x| ≤ 1/2, |z| ≥ 1, y ≤ Y}
and φ uniform; the point of X = G/Λ is g⁻¹Λ.
"""

import logging
import math
from typing import Optional

import numpy as np

from apps.common.exceptions import InvalidInputError, MassDeficitError
from apps.sl2_core.services.group import inverse_batch, rotation_batch

from .points import XPoint, points_from_batch, reduce_batch

logger = logging.getLogger(__name__)

FUNDAMENTAL_DOMAIN_MASS = math.pi / 3
MAX_MASS_DEFICIT = 1e-6
DEFAULT_HEIGHT_CUTOFF = 1e7
DEFAULT_COMPACT_HEIGHT = 2.0


def truncated_mass_deficit(height_cutoff: float) -> float:
    """Relative mass of {y > Y} in the fundamental domain: (1/Y)/(π/3)."""
    return 1.0 / (height_cutoff * FUNDAMENTAL_DOMAIN_MASS)


def _check_cutoff(height_cutoff: float) -> None:
    _check_height(height_cutoff)
    deficit = truncated_mass_deficit(height_cutoff)
    if deficit > MAX_MASS_DEFICIT:
        raise MassDeficitError(
            f'height cutoff {height_cutoff:g} loses relative mass {deficit:.3g} > {MAX_MASS_DEFICIT:g}',
            deficit=deficit,
        )


def _check_height(height_cutoff: float) -> None:
    if height_cutoff <= 1.0:
        raise InvalidInputError(f'height cutoff must exceed 1, got {height_cutoff}')


def _domain_points(rng: np.random.Generator, n: int, height_cutoff: float) -> np.ndarray:
    y_min = math.sqrt(3) / 2
    out = np.empty((0, 2))
    while out.shape[0] < n:
        m = max(16, int(1.2 * (n - out.shape[0])) + 16)
        x = rng.uniform(-0.5, 0.5, m)
        # 1/y uniform on [1/Y, 1/y_min] gives density ∝ 1/y²
        y = 1.0 / rng.uniform(1.0 / height_cutoff, 1.0 / y_min, m)
        keep = x * x + y * y >= 1.0
        out = np.concatenate([out, np.stack([x[keep], y[keep]], axis=1)])
    return out[:n]


def fundamental_domain_sample(rng: np.random.Generator, n: int, height_cutoff: float) -> np.ndarray:
    """n points x + iy of the truncated fundamental domain, density ∝ dx dy / y²."""
    _check_cutoff(height_cutoff)
    return _domain_points(rng, n, height_cutoff)


def _representatives(rng: np.random.Generator, z: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    phi = rng.uniform(0.0, 2 * math.pi, n)
    sy = np.sqrt(z[:, 1])
    na = np.zeros((n, 2, 2))
    na[:, 0, 0] = sy
    na[:, 0, 1] = z[:, 0] / sy
    na[:, 1, 1] = 1.0 / sy
    g = na @ rotation_batch(phi)
    return reduce_batch(inverse_batch(g))


def haar_sample_batch(rng: np.random.Generator, n: int, height_cutoff: float = DEFAULT_HEIGHT_CUTOFF) -> np.ndarray:
    """
    Reduced representatives of n Haar-distributed points, shape (n, 2, 2).

    Raises:
        MassDeficitError: if the cutoff drops more than 1e-6 of the mass
    """
    return _representatives(rng, fundamental_domain_sample(rng, n, height_cutoff))


def haar_sample(rng: np.random.Generator, height_cutoff: float = DEFAULT_HEIGHT_CUTOFF,
                n: Optional[int] = None) -> XPoint | list[XPoint]:
    """
    One Haar-random point (or a list of n of them).

    Args:
        rng: explicit generator; concurrent callers pass independent streams
        height_cutoff: truncation height Y of the cusp
        n: number of points, a single XPoint when omitted
    """
    mats = haar_sample_batch(rng, 1 if n is None else n, height_cutoff)
    points = points_from_batch(mats)
    return points[0] if n is None else points


def compact_sample_batch(rng: np.random.Generator, n: int, height_cutoff: float = DEFAULT_COMPACT_HEIGHT) -> np.ndarray:
    """Haar measure conditioned on height ≤ Y: generic points kept away from the cusp."""
    _check_height(height_cutoff)
    return _representatives(rng, _domain_points(rng, n, height_cutoff))


def compact_sample(rng: np.random.Generator, height_cutoff: float = DEFAULT_COMPACT_HEIGHT,
                   n: Optional[int] = None) -> XPoint | list[XPoint]:
    points = points_from_batch(compact_sample_batch(rng, 1 if n is None else n, height_cutoff))
    return points[0] if n is None else points


def cusp_mass_exact(y: float) -> float:
    """Haar probability of {height > y} for y ≥ 1."""
    return 1.0 / (y * FUNDAMENTAL_DOMAIN_MASS)
