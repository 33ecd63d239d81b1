"""
Exponential and logarithm on 𝔰𝔩₂(ℝ) in closed form.

A traceless X satisfies X² = q·I with q = s² + rt, so
exp(X) = C(q)·I + S(q)·X with (C, S) = (cosh √q, sinh √q / √q) for q > 0
and (cos √−q, sin √−q / √−q) for q < 0. The logarithm inverts this on
{tr g > −2}.
"""

import numpy as np
from scipy.linalg import expm

from apps.common.exceptions import DomainError

from .group import IDENTITY, Sl2Element, Sl2Vector, matrices_to_vectors, vectors_to_matrices

LOG_RADIUS = 0.5
_TAYLOR_WINDOW = 1e-8


def exp_e(r: float) -> Sl2Element:
    return Sl2Element(1.0, r, 0.0, 1.0)


def exp_h(s: float) -> Sl2Element:
    return Sl2Element(float(np.exp(s)), 0.0, 0.0, float(np.exp(-s)))


def exp_f(t: float) -> Sl2Element:
    return Sl2Element(1.0, 0.0, t, 1.0)


def exp_batch(v: np.ndarray) -> np.ndarray:
    """exp of (N, 3) coordinate vectors, returned as (N, 2, 2)."""
    v = np.asarray(v, dtype=float)
    X = vectors_to_matrices(v)
    q = v[..., 1] ** 2 + v[..., 0] * v[..., 2]
    root = np.sqrt(np.abs(q))
    pos = q > 0
    with np.errstate(invalid='ignore', divide='ignore'):
        c = np.where(pos, np.cosh(root), np.cos(root))
        s = np.where(pos, np.sinh(root), np.sin(root)) / root
    small = root < 1e-8
    s = np.where(small, 1.0 + q / 6.0, s)
    c = np.where(small, 1.0 + q / 2.0, c)
    return c[..., None, None] * IDENTITY + s[..., None, None] * X


def exp_vec(v) -> Sl2Element:
    """exp(rE + sH + tF); pure E, H, F directions use their exact forms."""
    if not isinstance(v, Sl2Vector):
        v = Sl2Vector.from_array(v)
    if v.s == 0 and v.t == 0:
        return exp_e(v.r)
    if v.r == 0 and v.t == 0:
        return exp_h(v.s)
    if v.r == 0 and v.s == 0:
        return exp_f(v.t)
    return Sl2Element.from_matrix(exp_batch(v.to_array()), renormalize=True)


def exp_reference(v) -> np.ndarray:
    """scipy's Padé expm, kept as an independent cross-check."""
    if not isinstance(v, Sl2Vector):
        v = Sl2Vector.from_array(v)
    return expm(v.matrix())


def _log_factor(u: np.ndarray) -> np.ndarray:
    """f(u) with X = f·(g − uI), u = tr(g)/2 > −1."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    near = np.abs(u - 1.0) < _TAYLOR_WINDOW
    hyper = (u > 1.0) & ~near
    ellip = (u < 1.0) & ~near
    theta = np.arccosh(u[hyper])
    out[hyper] = theta / np.sinh(theta)
    phi = np.arccos(np.clip(u[ellip], -1.0, 1.0))
    out[ellip] = phi / np.sin(phi)
    out[near] = 1.0 - (u[near] - 1.0) / 3.0
    return out


def log_batch(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Principal logarithm of (N, 2, 2) matrices as (N, 3) coordinates.

    Returns:
        (coordinates, valid) where valid marks tr g > −2; invalid rows are NaN
    """
    mats = np.asarray(mats, dtype=float)
    u = (mats[..., 0, 0] + mats[..., 1, 1]) / 2
    valid = u > -1.0
    coords = np.full(mats.shape[:-2] + (3,), np.nan)
    if np.any(valid):
        m = mats[valid]
        f = _log_factor(u[valid])
        X = f[:, None, None] * (m - u[valid][:, None, None] * IDENTITY)
        coords[valid] = matrices_to_vectors(X)
    return coords, valid


def log_sl2(g: Sl2Element) -> Sl2Vector:
    """
    Principal logarithm wherever it is real (tr g > −2).

    Raises:
        DomainError: if tr g ≤ −2
    """
    coords, valid = log_batch(g.matrix()[None])
    if not valid[0]:
        raise DomainError(f'no real logarithm for trace {g.trace()}')
    return Sl2Vector.from_array(coords[0])


def log_near_identity(g: Sl2Element) -> Sl2Vector:
    """
    Logarithm on the chart ‖g − I‖_op < 1/2.

    Raises:
        DomainError: if g is outside the chart
    """
    gap = float(np.linalg.norm(g.matrix() - IDENTITY, 2))
    if gap >= LOG_RADIUS:
        raise DomainError(f'‖g − I‖ = {gap:.6g} is outside the logarithm chart')
    return log_sl2(g)
