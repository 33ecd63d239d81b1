"""
Angles between subspaces and Grassmannian concentration of random subspaces.

Provides:
- angle: dang(U, W) = |det(u_1..u_k, w_1..w_{d-k})| for orthonormal bases
- max_concentration: sup over W of the mass of {θ : dang(U_θ, W) ≤ ρ}
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.linalg import orth

from apps.common.exceptions import InvalidInputError
from apps.common.fitting import loglog_fit
from apps.common.rng import stream

logger = logging.getLogger(__name__)


def _basis(rows) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(rows, dtype=float))
    return orth(arr.T)


def angle(U, W) -> float:
    """
    dang(U, W) in [0, 1]; bases are given as rows and orthonormalized.

    Raises:
        InvalidInputError: if dim U + dim W differs from the ambient dimension
    """
    bu = _basis(U)
    bw = _basis(W)
    d = bu.shape[0]
    if bw.shape[0] != d:
        raise InvalidInputError('U and W live in different ambient spaces')
    if bu.shape[1] + bw.shape[1] != d:
        raise InvalidInputError(
            f'dim U + dim W must equal {d}, got {bu.shape[1]} + {bw.shape[1]}'
        )
    return float(min(1.0, abs(np.linalg.det(np.hstack([bu, bw])))))


def normal_vector(rows) -> np.ndarray:
    """Unit normal of a hyperplane given by a basis (d-1 rows)."""
    basis = _basis(rows)
    d = basis.shape[0]
    if basis.shape[1] != d - 1:
        raise InvalidInputError('normal_vector expects a hyperplane basis')
    _, _, vt = np.linalg.svd(basis.T)
    return vt[-1]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _from_angles(params: np.ndarray, d: int) -> np.ndarray:
    if d == 2:
        return np.array([math.cos(params[0]), math.sin(params[0])])
    theta, phi = params
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _to_angles(n: np.ndarray) -> np.ndarray:
    if n.shape[0] == 2:
        return np.array([math.atan2(n[1], n[0])])
    return np.array([math.acos(max(-1.0, min(1.0, n[2]))), math.atan2(n[1], n[0])])


def _grid_candidates(d: int, count: int) -> np.ndarray:
    if d == 2:
        phis = np.pi * np.arange(count) / count
        return np.stack([np.cos(phis), np.sin(phis)], axis=1)
    # Fibonacci points on the upper hemisphere (antipodes give the same W)
    i = np.arange(count) + 0.5
    z = 1 - i / count
    r = np.sqrt(1 - z * z)
    golden = np.pi * (3 - math.sqrt(5))
    return np.stack([r * np.cos(golden * i), r * np.sin(golden * i), z], axis=1)


def _data_candidates(vectors: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Directions orthogonal to sampled data vectors (where mass piles up)."""
    t, d = vectors.shape
    rng = stream(seed, 0)
    if d == 2:
        idx = rng.choice(t, size=min(count, t), replace=False)
        v = vectors[idx]
        return np.stack([-v[:, 1], v[:, 0]], axis=1)
    a = rng.integers(0, t, size=count)
    b = rng.integers(0, t, size=count)
    cross = np.cross(vectors[a], vectors[b])
    norms = np.linalg.norm(cross, axis=1)
    keep = norms > 1e-12
    return cross[keep] / norms[keep, None]


@dataclass
class ConcentrationReport:
    """Worst measured ratio of σ{dang ≤ ρ} to ρ^κ over the tested scales."""
    rhos: list[float]
    max_mass: list[float]
    best_normals: list[list[float]]
    kappa: float
    worst_ratio: float
    worst_rho: float
    candidates: int
    fitted_kappa: float = float('nan')
    extra: dict = field(default_factory=dict)

    def passes(self, slack: float) -> bool:
        """True when every tested scale has mass ≤ slack·ρ^κ."""
        return self.worst_ratio <= slack

    def to_dict(self) -> dict:
        return {
            'rhos': self.rhos,
            'max_mass': self.max_mass,
            'best_normals': self.best_normals,
            'kappa': self.kappa,
            'worst_ratio': self.worst_ratio,
            'worst_rho': self.worst_rho,
            'candidates': self.candidates,
            'fitted_kappa': self.fitted_kappa,
        }


def max_concentration(
    vectors: np.ndarray,
    rhos: Sequence[float],
    budget: int = 256,
    kappa: float = 0.0,
    seed: int = 0,
    weights: Optional[np.ndarray] = None,
) -> ConcentrationReport:
    """
    Estimate sup_n σ{θ : |⟨u_θ, n⟩| ≤ ρ} for each ρ.

    ``vectors`` holds one unit vector u_θ per sample: the direction of U_θ
    when U_θ is a line (then n is the normal of the hyperplane W), or the
    normal of U_θ when it is a hyperplane (then n spans the line W). Either
    way dang(U_θ, W) = |⟨u_θ, n⟩|.

    The sup is searched over a grid on the projective space, directions
    orthogonal to the data, and a Nelder-Mead refinement from the best
    candidate at each scale. Only d ∈ {2, 3}.
    """
    vectors = _unit(np.asarray(vectors, dtype=float))
    t, d = vectors.shape
    if d not in (2, 3):
        raise InvalidInputError(f'concentration search is implemented for d in (2, 3), got {d}')
    if budget < 1:
        raise InvalidInputError('budget must be at least 1')
    w = np.full(t, 1.0 / t) if weights is None else np.asarray(weights, dtype=float) / np.sum(weights)
    rhos = [float(r) for r in rhos]

    candidates = np.vstack([_grid_candidates(d, budget), _data_candidates(vectors, budget, seed)])
    dots = np.abs(vectors @ candidates.T)

    def mass(n: np.ndarray, rho: float) -> float:
        return float(w @ (np.abs(vectors @ n) <= rho))

    max_mass, normals = [], []
    for rho in rhos:
        masses = w @ (dots <= rho)
        best = int(np.argmax(masses))
        best_mass, best_n = float(masses[best]), candidates[best]
        res = optimize.minimize(
            lambda p: -mass(_from_angles(p, d), rho),
            _to_angles(best_n),
            method='Nelder-Mead',
            options={'maxfev': max(20, budget // 4), 'xatol': rho / 8, 'fatol': 0.0},
        )
        refined = -float(res.fun)
        if refined > best_mass:
            best_mass, best_n = refined, _from_angles(res.x, d)
        max_mass.append(best_mass)
        normals.append([float(v) for v in best_n])

    ratios = [m / (r ** kappa) for m, r in zip(max_mass, rhos)]
    worst = int(np.argmax(ratios)) if ratios else 0
    fit = loglog_fit(rhos, max_mass)
    report = ConcentrationReport(
        rhos=rhos,
        max_mass=max_mass,
        best_normals=normals,
        kappa=kappa,
        worst_ratio=float(ratios[worst]) if ratios else 0.0,
        worst_rho=rhos[worst] if rhos else float('nan'),
        candidates=int(candidates.shape[0]),
        fitted_kappa=fit.slope,
    )
    logger.debug(f'max_concentration: worst ratio {report.worst_ratio:.4g} at rho={report.worst_rho:.4g}')
    return report
