"""
Builders for the sets and measures the experiments run on.

Provides:
- middle-half Cantor sets and their products (box dimension 1/2 per axis)
- the two counterexample sets: A₁⊔A₂ in the plane, plane ∪ axis in ℝ³
- samples of group measures on B₁^G for the SL₂ experiment
"""

import math

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.dyadic.services import AtomicMeasure, DyadicSet
from apps.sl2_core.services import exp_batch


def _require_even(k: int):
    if k < 2 or k % 2:
        raise InvalidInputError(f'k must be a positive even integer, got {k}')


def middle_half_cantor(k: int) -> np.ndarray:
    """Grid indices at resolution 2^{-k} of the set with base-4 digits in {0, 3}."""
    _require_even(k)
    idx = np.zeros(1, dtype=np.int64)
    for _ in range(k // 2):
        idx = np.concatenate([idx * 4, idx * 4 + 3])
    return np.sort(idx)


def cantor_product(d: int, k: int) -> DyadicSet:
    side = middle_half_cantor(k)
    mesh = np.stack(np.meshgrid(*([side] * d), indexing='ij'), axis=-1)
    return DyadicSet(d, k, mesh.reshape(-1, d))


def full_grid(d: int, k: int) -> DyadicSet:
    return DyadicSet.full_grid(d, k)


def fiber_line(k: int, row: int = None, axis: int = 0) -> DyadicSet:
    """All 2^k points of one row: an axis-parallel 1 × δ fiber."""
    row = (1 << (k - 1)) if row is None else row
    line = np.arange(1 << k, dtype=np.int64)
    pts = np.zeros((line.size, 2), dtype=np.int64)
    pts[:, axis] = line
    pts[:, 1 - axis] = row
    return DyadicSet(2, k, pts)


def two_scale_counterexample(k: int) -> DyadicSet:
    """
    A₁ ⊔ A₂: A₁ is δ^{1/2}-separated with δ^{-1/2} points on one row, A₂
    the δ-grid points of a disc of radius δ^{1/2} at the centre.
    """
    _require_even(k)
    half = 1 << (k // 2)
    a1 = np.stack([np.arange(half, dtype=np.int64) * half, np.zeros(half, dtype=np.int64)], axis=1)
    c = 1 << (k - 1)
    xs, ys = np.meshgrid(np.arange(c - half, c + half), np.arange(c - half, c + half), indexing='ij')
    disc = (xs - c) ** 2 + (ys - c) ** 2 < half ** 2
    a2 = np.stack([xs[disc], ys[disc]], axis=1)
    return DyadicSet(2, k, np.vstack([a1, a2]))


def plane_and_axis(R: int) -> DyadicSet:
    """(ℤe₁ ⊕ ℤe₂ ∪ ℤe₃) ∩ B(0, R), translated by R into the grid of side 2R."""
    k = int(round(math.log2(2 * R)))
    if 1 << k != 2 * R:
        raise InvalidInputError(f'R must be a power of two, got {R}')
    xs, ys = np.meshgrid(np.arange(-R + 1, R), np.arange(-R + 1, R), indexing='ij')
    disc = xs ** 2 + ys ** 2 < R * R
    plane = np.stack([xs[disc], ys[disc], np.zeros(int(disc.sum()), dtype=np.int64)], axis=1)
    zs = np.arange(-R + 1, R)
    axis = np.stack([np.zeros_like(zs), np.zeros_like(zs), zs], axis=1)
    return DyadicSet(3, k, np.vstack([plane, axis]) + R)


def uniform_measure(A: DyadicSet) -> AtomicMeasure:
    return AtomicMeasure.uniform(A)


def lie_ball_sample(rng: np.random.Generator, n: int, radius: float = 1.0) -> np.ndarray:
    """exp(v) for v uniform in the Lie algebra ball of the given radius; (n, 2, 2)."""
    v = rng.standard_normal((n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / 3.0)
    return exp_batch(v)


def one_parameter_sample(n: int, direction: int = 0, length: float = 1.0) -> np.ndarray:
    """Evenly spaced exp(tX), t ∈ [−length, length], X the E, H or F basis vector."""
    v = np.zeros((n, 3))
    v[:, direction] = np.linspace(-length, length, n)
    return exp_batch(v)
