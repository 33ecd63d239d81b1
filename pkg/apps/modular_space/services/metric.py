"""
Distances on G and X = G/Λ and the injectivity radius.

dist_G(g, h) = ‖log(gh⁻¹)‖ while ‖gh⁻¹ − I‖_op < 1/2. Farther apart it is
the smaller of ‖log(gh⁻¹)‖ (when real) and the chained bound
d(I, θ) + d(I, a^t) + d(I, θ′) along the Cartan factors; results that used
this branch are flagged as coarse.

Provides:
- dist_g / dist_g_batch
- dist_x, distances_to, distance_to_base, distance_to_set
- injectivity_radius / injectivity_radius_batch
- BallCounter: cKDTree-backed ball masses of a sample
- lattice_elements, search_bound, lattice_search_self_check
"""

import logging
import math
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from django.conf import settings
from scipy.spatial import cKDTree

from apps.common.exceptions import EmptySetError, InvalidInputError
from apps.sl2_core.services import Sl2Element, log_batch
from apps.sl2_core.services.group import inverse_batch

from .points import XPoint, small_unimodular

logger = logging.getLogger(__name__)

LOG_CHART_RADIUS = 0.5
_ROOT2 = math.sqrt(2.0)
_CHUNK = 2048


@lru_cache(maxsize=None)
def lattice_elements(bound: int) -> np.ndarray:
    """All λ ∈ SL₂(ℤ) with max |entry| ≤ bound as floats, identity first."""
    if bound < 1:
        raise InvalidInputError(f'lattice search bound must be ≥ 1, got {bound}')
    r = np.arange(-bound, bound + 1)
    a, b, c, d = (m.reshape(-1) for m in np.meshgrid(r, r, r, r, indexing='ij'))
    keep = a * d - b * c == 1
    mats = np.stack([a[keep], b[keep], c[keep], d[keep]], axis=1).reshape(-1, 2, 2)
    is_id = (mats[:, 0, 0] == 1) & (mats[:, 1, 1] == 1) & (mats[:, 0, 1] == 0) & (mats[:, 1, 0] == 0)
    mats = np.concatenate([mats[is_id], mats[~is_id]]).astype(float)
    mats.setflags(write=False)
    return mats


def search_cap() -> int:
    return int(getattr(settings, 'MULTISLICE_LATTICE_SEARCH_CAP', 6))


def search_bound(norm_x: float, norm_y: float, override: Optional[int] = None) -> int:
    """ceil(4‖rep_x‖‖rep_y‖), capped by MULTISLICE_LATTICE_SEARCH_CAP unless overridden."""
    if override is not None:
        return int(override)
    wanted = math.ceil(4 * norm_x * norm_y - 1e-12)
    cap = search_cap()
    if wanted > cap:
        logger.warning(f'lattice search bound {wanted} capped at {cap}')
    return max(1, min(wanted, cap))


def op_norm_batch(m: np.ndarray) -> np.ndarray:
    """Largest singular value of 2×2 matrices in closed form."""
    fro2 = np.einsum('...ij,...ij->...', m, m)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return np.sqrt((fro2 + np.sqrt(np.maximum(fro2 * fro2 - 4 * det * det, 0.0))) / 2)


def _chain_bound_batch(k: np.ndarray) -> np.ndarray:
    u, sigma, vt = np.linalg.svd(k)
    flip = np.linalg.det(u) < 0
    u[flip, :, 1] *= -1
    vt[flip, 1, :] *= -1
    t = np.maximum(0.0, 2.0 * np.log(sigma[:, 0]))
    phi1 = np.arctan2(u[:, 1, 0], u[:, 0, 0])
    phi2 = np.arctan2(vt[:, 1, 0], vt[:, 0, 0])
    # rotating both factors by π leaves θ a^t θ′ unchanged
    alt1 = np.abs(phi1) - math.pi
    alt2 = np.abs(phi2) - math.pi
    direct = np.abs(phi1) + np.abs(phi2)
    swapped = np.abs(alt1) + np.abs(alt2)
    return _ROOT2 * np.minimum(direct, swapped) + t / 2


def dist_g_batch(g: np.ndarray, h: np.ndarray, local_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    dist_G for matching (N, 2, 2) stacks.

    With local_only the chained bound is skipped and pairs outside the log
    chart get +inf.

    Returns:
        (distances, coarse) where coarse marks pairs outside the log chart
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    k = g @ inverse_batch(h)
    if k.ndim == 2:
        k = k[None]
    gap = op_norm_batch(k - np.eye(2))
    coords, real = log_batch(k)
    log_norm = np.where(real, np.linalg.norm(np.where(real[:, None], coords, 0.0), axis=1), np.inf)
    coarse = gap >= LOG_CHART_RADIUS
    out = log_norm.copy()
    if local_only:
        out[coarse] = np.inf
    elif coarse.any():
        out[coarse] = np.minimum(log_norm[coarse], _chain_bound_batch(k[coarse]))
    return out, coarse


def dist_g(g: Sl2Element, h: Sl2Element) -> float:
    value, _ = dist_g_batch(g.matrix()[None], h.matrix()[None])
    return float(value[0])


def _pairwise_min(left: np.ndarray, reps: np.ndarray, lambdas: np.ndarray,
                  local_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """min over λ of dist_G(left_i, rep_i·λ) for matching stacks."""
    best = np.full(reps.shape[0], np.inf)
    coarse = np.zeros(reps.shape[0], dtype=bool)
    left = np.broadcast_to(left, reps.shape)
    for lam in lambdas:
        value, flag = dist_g_batch(left, reps @ lam, local_only)
        better = value < best
        best[better] = value[better]
        coarse[better] = flag[better]
    return best, coarse


def distances_to(x: XPoint, points: Sequence[XPoint] | np.ndarray, bound: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """
    dist_X from x to each point (XPoints or an (N, 2, 2) stack of reduced reps).

    Returns:
        (distances, coarse)
    """
    reps = _as_reps(points)
    return pair_distances(np.broadcast_to(x.matrix(), reps.shape), reps, bound)


def pair_distances(a: np.ndarray, b: np.ndarray, bound: Optional[int] = None,
                   local_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """dist_X between matching (N, 2, 2) stacks of reduced reps."""
    a = np.asarray(a, dtype=float).reshape(-1, 2, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2, 2)
    if a.shape[0] == 0:
        return np.zeros(0), np.zeros(0, dtype=bool)
    norm_a = float(np.linalg.norm(a, ord=2, axis=(-2, -1)).max())
    norm_b = float(np.linalg.norm(b, ord=2, axis=(-2, -1)).max())
    lambdas = lattice_elements(search_bound(norm_a, norm_b, bound))
    values = np.empty(a.shape[0])
    coarse = np.empty(a.shape[0], dtype=bool)
    for start in range(0, a.shape[0], _CHUNK):
        stop = start + _CHUNK
        values[start:stop], coarse[start:stop] = _pairwise_min(a[start:stop], b[start:stop], lambdas, local_only)
    # canonical reps: equal points have equal reps, and their distance is exactly 0
    same = np.all(a == b, axis=(1, 2))
    values[same] = 0.0
    coarse[same] = False
    return values, coarse


def dist_x(x: XPoint, y: XPoint, bound: Optional[int] = None) -> float:
    """
    Quotient distance min_λ dist_G(rep_x, rep_y·λ) over the bounded enumeration of Λ.

    Symmetric; zero exactly on equal points.
    """
    values, coarse = distances_to(x, [y], bound)
    if coarse[0]:
        logger.warning(f'dist_x used the chained bound ({values[0]:.6g})')
    return float(values[0])


def distance_to_base(x: XPoint, bound: Optional[int] = None) -> float:
    return dist_x(x, XPoint.base(), bound)


def distance_to_set(x: XPoint, points: Sequence[XPoint] | np.ndarray, bound: Optional[int] = None) -> float:
    """
    Raises:
        EmptySetError: if points is empty
    """
    values, _ = distances_to(x, points, bound)
    if values.size == 0:
        raise EmptySetError('distance to an empty set of points')
    return float(values.min())


def _as_reps(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 2, 2).astype(float)
    points = list(points)
    if not points:
        return np.zeros((0, 2, 2))
    return np.stack([p.matrix() for p in points])


def injectivity_radius_batch(reps: np.ndarray, bound: Optional[int] = None) -> np.ndarray:
    """
    inj(x) = ½ min_{λ ≠ ±I} dist_G(I, rep·λ·rep⁻¹) for (N, 2, 2) reduced reps.
    """
    reps = np.asarray(reps, dtype=float).reshape(-1, 2, 2)
    out = np.empty(reps.shape[0])
    if reps.shape[0] == 0:
        return out
    for start in range(0, reps.shape[0], _CHUNK):
        chunk = reps[start:start + _CHUNK]
        norm = float(np.linalg.norm(chunk, ord=2, axis=(-2, -1)).max())
        lambdas = lattice_elements(search_bound(norm, norm, bound))
        lambdas = lambdas[~(np.all(np.abs(lambdas - np.eye(2)) == 0, axis=(1, 2))
                            | np.all(np.abs(lambdas + np.eye(2)) == 0, axis=(1, 2)))]
        inv = inverse_batch(chunk)
        ident = np.broadcast_to(np.eye(2), chunk.shape)
        best = np.full(chunk.shape[0], np.inf)
        for lam in lambdas:
            value, _ = dist_g_batch(chunk @ lam @ inv, ident, local_only=True)
            np.minimum(best, value, out=best)
        far = ~np.isfinite(best)
        if far.any():
            # no stabilizer element inside the log chart: fall back to the chained bound
            sub, sub_inv, sub_id = chunk[far], inv[far], ident[: int(far.sum())]
            for lam in lambdas:
                value, _ = dist_g_batch(sub @ lam @ sub_inv, sub_id)
                best[far] = np.minimum(best[far], value)
        out[start:start + _CHUNK] = best / 2
    return out


def injectivity_radius(x: XPoint, bound: Optional[int] = None) -> float:
    return float(injectivity_radius_batch(x.matrix()[None], bound)[0])


def lattice_search_self_check(points: Sequence[XPoint], bound: Optional[int] = None, tol: float = 1e-9) -> bool:
    """
    Doubling the Λ-enumeration bound must leave distances and injectivity radii unchanged.
    """
    points = list(points)
    if not points:
        return True
    reps = _as_reps(points)
    base_bound = bound or search_bound(
        float(np.linalg.norm(reps, ord=2, axis=(-2, -1)).max()),
        float(np.linalg.norm(reps, ord=2, axis=(-2, -1)).max()),
    )
    inj_a = injectivity_radius_batch(reps, base_bound)
    inj_b = injectivity_radius_batch(reps, 2 * base_bound)
    d_a, _ = distances_to(points[0], reps, base_bound)
    d_b, _ = distances_to(points[0], reps, 2 * base_bound)
    ok = bool(np.allclose(inj_a, inj_b, atol=tol) and np.allclose(d_a, d_b, atol=tol))
    if not ok:
        logger.warning(f'lattice search bound {base_bound} is too small for these points')
    return ok


class BallCounter:
    """
    Masses of small dist_X-balls in a finite sample.

    Every sample point is indexed together with its alternative reduced
    bases rep·γ, so a Euclidean prefilter in matrix entries cannot miss a
    neighbour whose canonical basis sits across a tie. Candidates are then
    confirmed with dist_G. Radii must stay below the log-chart radius.
    """

    def __init__(self, reps: np.ndarray, weights: Optional[np.ndarray] = None):
        reps = np.asarray(reps, dtype=float).reshape(-1, 2, 2)
        self.reps = reps
        self.weights = np.full(reps.shape[0], 1.0 / max(1, reps.shape[0])) if weights is None else np.asarray(weights, dtype=float)
        gammas = small_unimodular().astype(float)
        alts = np.einsum('nij,gjk->ngik', reps, gammas).reshape(-1, 2, 2)
        self._owner = np.repeat(np.arange(reps.shape[0]), gammas.shape[0])
        self._alts = alts
        self._tree = cKDTree(alts.reshape(-1, 4))

    def __len__(self) -> int:
        return self.reps.shape[0]

    def within(self, center: XPoint | np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """
        Sample points within dist_X ≤ radius of center.

        Returns:
            (indices, distances), one entry per sample point, sorted by index
        """
        if radius >= LOG_CHART_RADIUS:
            raise InvalidInputError(f'ball radius {radius} exceeds the log-chart radius')
        c = center.matrix() if isinstance(center, XPoint) else np.asarray(center, dtype=float).reshape(2, 2)
        # h = e^{−X}c with ‖X‖_op ≤ √2‖X‖, so ‖h − c‖_F ≤ √2(e^{√2r} − 1)‖c‖_op
        reach = _ROOT2 * math.expm1(_ROOT2 * radius) * float(np.linalg.norm(c, 2)) * (1 + 1e-9) + 1e-12
        idx = np.asarray(self._tree.query_ball_point(c.reshape(-1), reach), dtype=int)
        if idx.size == 0:
            return idx, np.zeros(0)
        cand = self._alts[idx]
        value, _ = dist_g_batch(np.broadcast_to(c, cand.shape), cand)
        inside = value <= radius
        owners, value = self._owner[idx[inside]], value[inside]
        order = np.lexsort((value, owners))
        owners, value = owners[order], value[order]
        first = np.ones(owners.size, dtype=bool)
        first[1:] = owners[1:] != owners[:-1]
        return owners[first], value[first]

    def neighbours(self, center: XPoint | np.ndarray, radius: float) -> np.ndarray:
        """Indices of sample points within dist_X ≤ radius of center."""
        return self.within(center, radius)[0]

    def mass(self, center: XPoint, radius: float) -> float:
        return float(self.weights[self.neighbours(center, radius)].sum())
