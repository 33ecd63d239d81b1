"""
Monte-Carlo convolution μ^{*n} * ν on X and raw products g_n⋯g_1.

Trajectories run in chunks, each chunk on its own RNG stream, so samples
do not depend on the worker count.
"""

import logging
import math
from typing import Optional

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.common.parallel import parallel_map
from apps.common.rng import stream
from apps.modular_space.services import XPoint, reduce_batch
from apps.sl2_core.services.decompositions import ROTATION_THRESHOLD

from .measures import EmpiricalMeasure, WalkMeasure

logger = logging.getLogger(__name__)

TRAJECTORY_CHUNK = 4096
_CONVOLVE_STREAM = 11
_PRODUCT_STREAM = 12


def _chunks(total: int) -> list[tuple[int, int, int]]:
    return [(i, start, min(total, start + TRAJECTORY_CHUNK))
            for i, start in enumerate(range(0, total, TRAJECTORY_CHUNK))]


def _walk(mu: WalkMeasure, reps: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """reduce(g_n⋯g_1·rep) with a fresh step per row; reduced after every step."""
    out = reps
    for _ in range(n):
        out = reduce_batch(mu.atoms[mu.sample_steps(rng, out.shape[0])] @ out)
    return out


def _run(mu: WalkMeasure, starts: np.ndarray, n: int, seed: int, threads: Optional[int]) -> np.ndarray:
    def one(chunk: tuple[int, int, int]) -> np.ndarray:
        index, lo, hi = chunk
        return _walk(mu, starts[lo:hi], n, stream(seed, _CONVOLVE_STREAM, index))

    parts = parallel_map(one, _chunks(starts.shape[0]), threads)
    return np.concatenate(parts) if parts else np.zeros((0, 2, 2))


def convolve_sample(mu: WalkMeasure, n: int, x: XPoint, N: int, seed: int = 0,
                    threads: Optional[int] = None) -> EmpiricalMeasure:
    """
    N independent samples of μ^{*n} * δ_x.

    Raises:
        InvalidInputError: if N < 1 or n < 0
    """
    if N < 1:
        raise InvalidInputError(f'need at least one trajectory, got N={N}')
    if n < 0:
        raise InvalidInputError(f'walk length must be nonnegative, got n={n}')
    starts = np.broadcast_to(x.matrix(), (N, 2, 2)).copy()
    reps = _run(mu, starts, n, seed, threads)
    provenance = {'mu': mu.to_dict(), 'n': n, 'start': x.to_dict(), 'N': N, 'seed': seed}
    logger.debug(f'convolve_sample: {mu.name} n={n} N={N}')
    return EmpiricalMeasure(reps, provenance)


def propagate(mu: WalkMeasure, nu: EmpiricalMeasure, n: int, seed: int = 0,
              threads: Optional[int] = None) -> EmpiricalMeasure:
    """μ^{*n} * ν: one independent trajectory of length n from every sample of ν."""
    if n < 0:
        raise InvalidInputError(f'walk length must be nonnegative, got n={n}')
    reps = _run(mu, nu.reps, n, seed, threads)
    provenance = {'mu': mu.name, 'n': n, 'start': nu.provenance, 'N': len(nu), 'seed': seed}
    return EmpiricalMeasure(reps, provenance)


def random_products(mu: WalkMeasure, n: int, N: int, seed: int = 0,
                    threads: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Samples of g_n⋯g_1 ~ μ^{*n} kept in scaled form.

    Returns:
        (mats, log_scale) with g = e^{log_scale}·mats and ‖mats‖_F = 1
    """
    if n < 1:
        raise InvalidInputError(f'need n >= 1, got n={n}')

    def one(chunk: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray]:
        index, lo, hi = chunk
        rng = stream(seed, _PRODUCT_STREAM, index)
        mats = np.broadcast_to(np.eye(2), (hi - lo, 2, 2)).copy()
        scale = np.zeros(hi - lo)
        for _ in range(n):
            mats = mu.atoms[mu.sample_steps(rng, hi - lo)] @ mats
            norms = np.linalg.norm(mats, axis=(1, 2))
            mats /= norms[:, None, None]
            scale += np.log(norms)
        return mats, scale

    parts = parallel_map(one, _chunks(N), threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def log_expansions(mats: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    """t_g = log‖Ad g‖ = 2 log σ₁(g) for g = e^{log_scale}·mats."""
    sigma = np.linalg.svd(mats, compute_uv=False)[:, 0]
    return np.maximum(0.0, 2 * (np.log(sigma) + log_scale))


def cartan_angles(mats: np.ndarray, log_scale: np.ndarray) -> np.ndarray:
    """
    θ_g from g⁻¹ = θ_g a^t θ′_g, in [0, π).

    For rotations (t = 0) the split is not unique and θ_g is the rotation
    angle of g itself, in [0, 2π).
    """
    # adj(g) is a positive multiple of g⁻¹, so it has the same left singular factor
    inverse = np.stack([mats[:, 1, 1], -mats[:, 0, 1], -mats[:, 1, 0], mats[:, 0, 0]], axis=1).reshape(-1, 2, 2)
    u, sigma, _ = np.linalg.svd(inverse)
    flip = np.linalg.det(u) < 0
    u[flip, :, 1] *= -1
    theta = np.arctan2(u[:, 1, 0], u[:, 0, 0]) % math.pi
    t = 2 * (np.log(sigma[:, 0]) + log_scale)
    rotation = t < ROTATION_THRESHOLD
    if rotation.any():
        m = mats[rotation]
        theta[rotation] = np.arctan2(m[:, 1, 0], m[:, 0, 0]) % (2 * math.pi)
    return theta
