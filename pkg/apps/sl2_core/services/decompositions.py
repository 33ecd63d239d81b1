"""
Cartan and Iwasawa decompositions, the adjoint representation and the
root-space splitting of 𝔰𝔩₂.

Provides:
- cartan: g = θ·a^t·θ′ with t ≥ 0 and θ ∈ [0, π)
- iwasawa: g = n·a·k
- adjoint / adjoint_batch: Ad(g) on (E, H, F) coordinates
- adjoint_norm: ‖Ad(g)‖ for the Ad(K)-invariant inner product, equal to e^{t_g}
- root_decomposition: v = v₊ + v₀ + v₋
"""

import math

import numpy as np
from scipy.linalg import rq

from .group import KAK, Sl2Element, Sl2Vector

ROTATION_THRESHOLD = 1e-10

# r² + 2s² + t² is the Frobenius norm of rE + sH + tF, which conjugation by K preserves
_K_WEIGHT = np.array([1.0, math.sqrt(2.0), 1.0])


def cartan(g: Sl2Element) -> KAK:
    """
    KAK decomposition through the SVD.

    a^t = diag(e^{t/2}, e^{−t/2}), so t = 2 log σ₁ = log(σ₁/σ₂). When t vanishes
    g is a rotation and θ′ is the identity. Otherwise θ is moved into [0, π)
    by trading −I between the two rotations.
    """
    m = g.matrix()
    u, sigma, vt = np.linalg.svd(m)
    if np.linalg.det(u) < 0:
        u[:, 1] *= -1
        vt[1, :] *= -1
    t = max(0.0, 2.0 * math.log(sigma[0]))
    if t < ROTATION_THRESHOLD:
        theta = math.atan2(m[1, 0], m[0, 0]) % (2 * math.pi)
        return KAK(theta=theta, t=0.0, theta_prime=0.0)
    theta = math.atan2(u[1, 0], u[0, 0])
    theta_prime = math.atan2(vt[1, 0], vt[0, 0])
    turns = math.floor(theta / math.pi + 1e-12)
    theta -= turns * math.pi
    theta_prime = math.remainder(theta_prime + turns * math.pi, 2 * math.pi)
    return KAK(theta=theta, t=t, theta_prime=theta_prime)


def expansion(g: Sl2Element) -> float:
    """t_g of the Cartan decomposition, log(σ₁/σ₂)."""
    sigma = np.linalg.svd(g.matrix(), compute_uv=False)
    return max(0.0, 2.0 * math.log(sigma[0]))


def expansion_batch(mats: np.ndarray) -> np.ndarray:
    sigma = np.linalg.svd(np.asarray(mats, dtype=float), compute_uv=False)
    return np.maximum(0.0, 2.0 * np.log(sigma[..., 0]))


def iwasawa(g: Sl2Element) -> tuple[Sl2Element, Sl2Element, Sl2Element]:
    """
    g = n·a·k with n upper unipotent, a positive diagonal and k a rotation.

    Returns:
        (n, a, k)
    """
    r, q = rq(g.matrix())
    signs = np.diag(np.sign(np.diag(r)))
    r = r @ signs
    q = signs @ q
    a = Sl2Element.from_matrix(np.diag([r[0, 0], r[1, 1]]), renormalize=True)
    n = Sl2Element.upper(r[0, 1] / r[1, 1])
    k = Sl2Element.from_matrix(q, renormalize=True)
    return n, a, k


def adjoint_batch(mats: np.ndarray) -> np.ndarray:
    """Ad(g) for (N, 2, 2) inputs; column j is the image of the j-th basis vector."""
    mats = np.asarray(mats, dtype=float)
    a, b = mats[..., 0, 0], mats[..., 0, 1]
    c, d = mats[..., 1, 0], mats[..., 1, 1]
    col_e = np.stack([a * a, -a * c, -c * c], axis=-1)
    col_h = np.stack([-2 * a * b, a * d + b * c, 2 * c * d], axis=-1)
    col_f = np.stack([-b * b, b * d, d * d], axis=-1)
    return np.stack([col_e, col_h, col_f], axis=-1)


def adjoint(g: Sl2Element) -> np.ndarray:
    """Matrix of X ↦ gXg⁻¹ in the ordered basis (E, H, F)."""
    return adjoint_batch(g.matrix())


def adjoint_norm(g: Sl2Element) -> float:
    """
    Operator norm of Ad(g) for the Ad(K)-invariant inner product.

    For that inner product ‖Ad(θ a^t θ′)‖ = ‖Ad(a^t)‖ = e^t. The norm with
    (E, H, F) orthonormal differs from it by at most a factor √2.
    """
    weighted = _K_WEIGHT[:, None] * adjoint(g) / _K_WEIGHT[None, :]
    return float(np.linalg.norm(weighted, 2))


def adjoint_norm_batch(mats: np.ndarray) -> np.ndarray:
    weighted = _K_WEIGHT[:, None] * adjoint_batch(mats) / _K_WEIGHT[None, :]
    return np.linalg.norm(weighted, ord=2, axis=(-2, -1))


def root_decomposition(v: Sl2Vector) -> tuple[Sl2Vector, Sl2Vector, Sl2Vector]:
    """Projections onto 𝔤₊ = ℝE, 𝔤₀ = ℝH and 𝔤₋ = ℝF."""
    return Sl2Vector(v.r, 0.0, 0.0), Sl2Vector(0.0, v.s, 0.0), Sl2Vector(0.0, 0.0, v.t)
