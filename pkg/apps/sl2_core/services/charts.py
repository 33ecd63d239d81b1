"""
The charts ψ_θ and their inverses φ_θ.

Two conventions are provided and named distinctly:
- 'statement': ψ_θ(v) = θ·exp(rE)exp(sH)exp(tF)
- 'conjugate': ψ_θ(v) = θ·ψ(v)·θ⁻¹
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from apps.common.exceptions import DomainError, InvalidInputError
from apps.common.rng import stream

from .group import Sl2Element, Sl2Vector, inverse_batch, rotation_batch, rotation_matrix
from .lie import log_batch

logger = logging.getLogger(__name__)

RHO_0 = 0.01
VARIANTS = ('statement', 'conjugate')

Rotation = Union[float, Sl2Element]


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise InvalidInputError(f'unknown chart variant {variant!r}; expected one of {VARIANTS}')
    return variant


def _rotation(theta: Rotation) -> np.ndarray:
    if isinstance(theta, Sl2Element):
        return theta.matrix()
    return rotation_matrix(float(theta))


def psi_batch(v: np.ndarray) -> np.ndarray:
    """ψ(v) = exp(rE)exp(sH)exp(tF) for (N, 3) coordinates."""
    v = np.asarray(v, dtype=float)
    r, s, t = v[..., 0], v[..., 1], v[..., 2]
    es, ems = np.exp(s), np.exp(-s)
    out = np.empty(v.shape[:-1] + (2, 2))
    out[..., 0, 0] = es + r * t * ems
    out[..., 0, 1] = r * ems
    out[..., 1, 0] = t * ems
    out[..., 1, 1] = ems
    return out


def psi(v) -> Sl2Element:
    if isinstance(v, Sl2Vector):
        v = v.to_array()
    return Sl2Element.from_matrix(psi_batch(v), renormalize=True)


def psi_inverse_batch(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Read (r, s, t) off ψ(v) = [[e^s + rte^{−s}, re^{−s}], [te^{−s}, e^{−s}]].

    Returns:
        (coordinates, valid) where valid marks a positive lower-right entry
    """
    mats = np.asarray(mats, dtype=float)
    h11 = mats[..., 1, 1]
    valid = h11 > 0
    with np.errstate(divide='ignore', invalid='ignore'):
        coords = np.stack([mats[..., 0, 1] / h11, -np.log(h11), mats[..., 1, 0] / h11], axis=-1)
    coords[~valid] = np.nan
    return coords, valid


def psi_theta_batch(thetas: np.ndarray, v: np.ndarray, variant: str = 'statement') -> np.ndarray:
    """ψ_θ for matching arrays of angles (N,) and coordinates (N, 3)."""
    _check_variant(variant)
    rot = rotation_batch(thetas)
    out = rot @ psi_batch(v)
    if variant == 'conjugate':
        out = out @ inverse_batch(rot)
    return out


def psi_theta(theta: Rotation, v, variant: str = 'statement') -> Sl2Element:
    """
    ψ_θ(v) for a rotation θ (angle or element) and v ∈ 𝔤.

    Args:
        theta: rotation angle in radians, or a rotation Sl2Element
        v: Sl2Vector or (r, s, t)
        variant: 'statement' or 'conjugate'
    """
    _check_variant(variant)
    if isinstance(v, Sl2Vector):
        v = v.to_array()
    rot = _rotation(theta)
    m = rot @ psi_batch(v)
    if variant == 'conjugate':
        m = m @ rot.T
    return Sl2Element.from_matrix(m, renormalize=True)


def phi_theta_batch(thetas: np.ndarray, mats: np.ndarray, variant: str = 'statement',
                    radius: float = RHO_0) -> tuple[np.ndarray, np.ndarray]:
    """
    φ_θ on (N, 2, 2) inputs; rows outside the chart are NaN.

    Returns:
        (coordinates, valid)
    """
    _check_variant(variant)
    rot = rotation_batch(thetas)
    h = inverse_batch(rot) @ np.asarray(mats, dtype=float)
    if variant == 'conjugate':
        h = h @ rot
    coords, valid = psi_inverse_batch(h)
    norms = np.linalg.norm(np.where(valid[..., None], coords, 0.0), axis=-1)
    valid &= norms <= radius
    coords[~valid] = np.nan
    return coords, valid


def phi_theta(theta: Rotation, g: Sl2Element, variant: str = 'statement', radius: float = RHO_0) -> Sl2Vector:
    """
    Inverse chart φ_θ = ψ_θ⁻¹ on the ball of the given radius.

    Raises:
        DomainError: if θ⁻¹g (or θ⁻¹gθ) has no ψ-preimage in the ball
    """
    _check_variant(variant)
    rot = _rotation(theta)
    h = rot.T @ g.matrix()
    if variant == 'conjugate':
        h = h @ rot
    coords, valid = psi_inverse_batch(h)
    if not valid:
        raise DomainError('element has no preimage under ψ (lower-right entry ≤ 0)')
    v = Sl2Vector.from_array(coords)
    if v.norm() > radius:
        raise DomainError(f'preimage of norm {v.norm():.6g} is outside the chart ball of radius {radius}')
    return v


def local_distance_batch(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """‖log(gh⁻¹)‖ for matching (N, 2, 2) stacks; NaN where the logarithm is not real."""
    coords, _ = log_batch(np.asarray(g) @ inverse_batch(np.asarray(h, dtype=float)))
    return np.linalg.norm(coords, axis=-1)


@dataclass
class ChartRadiusReport:
    radius: float
    pairs: int
    max_roundtrip_error: float
    min_ratio: float
    max_ratio: float

    @property
    def passes(self) -> bool:
        return self.max_roundtrip_error < 1e-10 and self.min_ratio >= 0.5 and self.max_ratio <= 2.0

    def to_dict(self) -> dict:
        return {
            'radius': self.radius,
            'pairs': self.pairs,
            'max_roundtrip_error': self.max_roundtrip_error,
            'min_ratio': self.min_ratio,
            'max_ratio': self.max_ratio,
            'passes': self.passes,
        }


def _ball(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * (radius * rng.random(n) ** (1 / 3))[:, None]


def validate_chart_radius(radius: float = RHO_0, pairs: int = 2000, seed: int = 0,
                          variant: str = 'statement') -> ChartRadiusReport:
    """
    Check that ψ_θ is a 2-bi-Lipschitz bijection onto its image on B_radius.

    Distances in G are the local right-invariant ones, ‖log(gh⁻¹)‖.
    """
    rng = stream(seed, 0)
    thetas = rng.uniform(0, 2 * np.pi, pairs)
    v = _ball(rng, pairs, radius)
    w = _ball(rng, pairs, radius)
    gv = psi_theta_batch(thetas, v, variant)
    gw = psi_theta_batch(thetas, w, variant)
    back, valid = phi_theta_batch(thetas, gv, variant, radius=radius * (1 + 1e-9))
    err = float(np.max(np.abs(back - v))) if valid.all() else float('inf')
    ratios = local_distance_batch(gv, gw) / np.linalg.norm(v - w, axis=1)
    report = ChartRadiusReport(
        radius=radius,
        pairs=pairs,
        max_roundtrip_error=err,
        min_ratio=float(np.min(ratios)),
        max_ratio=float(np.max(ratios)),
    )
    logger.debug(f'validate_chart_radius: {report.to_dict()}')
    return report
