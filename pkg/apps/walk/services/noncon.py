"""
Non-concentration of the Cartan angle θ_g for g ~ μ^{*n}.

For the flag pieces 𝔤₊ (a line) and 𝔤₊⊕𝔤₀ (a plane) the mass of
{g : dang(Ad(θ_g)V, W) ≤ ρ} is searched over W and fitted against ρ^κ.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.dyadic.services import max_concentration
from apps.sl2_core.services import adjoint_batch
from apps.sl2_core.services.group import rotation_batch

from .convolution import cartan_angles, random_products
from .measures import WalkMeasure

logger = logging.getLogger(__name__)

KAPPA_FLOOR = 0.2
MAX_GRID_LEVELS = 8
# (E, H, F) coordinates scaled so that Ad(K) acts orthogonally
_K_WEIGHT = np.array([1.0, math.sqrt(2.0), 1.0])


def default_rhos(n: int) -> list[float]:
    """2^{-j}, j = 1.., down to max(e^{-n}, 2^{-8})."""
    levels = min(MAX_GRID_LEVELS, max(1, int(n / math.log(2))))
    return [2.0 ** -j for j in range(1, levels + 1)]


def flag_directions(thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Unit direction of Ad(θ)𝔤₊ and unit normal of Ad(θ)(𝔤₊⊕𝔤₀), per angle.
    """
    ad = _K_WEIGHT[None, :, None] * adjoint_batch(rotation_batch(thetas))
    line = ad[:, :, 0]
    plane_normal = np.cross(line, ad[:, :, 1])
    line /= np.linalg.norm(line, axis=1, keepdims=True)
    plane_normal /= np.linalg.norm(plane_normal, axis=1, keepdims=True)
    return line, plane_normal


@dataclass
class ThetaNonconReport:
    n: int
    N: int
    rhos: list[float]
    line: dict
    plane: dict
    kappa_floor: float = KAPPA_FLOOR
    extra: dict = field(default_factory=dict)

    @property
    def kappa(self) -> float:
        """Smaller of the two fitted exponents."""
        return float(min(self.line['fitted_kappa'], self.plane['fitted_kappa']))

    @property
    def passes(self) -> bool:
        return self.kappa > self.kappa_floor

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'N': self.N,
            'rhos': self.rhos,
            'kappa': self.kappa,
            'passes': self.passes,
            'line': self.line,
            'plane': self.plane,
            **self.extra,
        }


def theta_noncon_report(mu: WalkMeasure, n: int, N: int, rhos: Optional[Sequence[float]] = None,
                        budget: int = 128, seed: int = 0, threads: Optional[int] = None) -> ThetaNonconReport:
    """
    Sample θ_g for g ~ μ^{*n} and measure the worst concentration near a W.

    Args:
        rhos: scales in [e^{-n}, 1]; defaults to default_rhos(n)
        budget: candidate count for the search over W

    Raises:
        InvalidInputError: if a scale falls outside [e^{-n}, 1]
    """
    rhos = list(rhos) if rhos is not None else default_rhos(n)
    floor = math.exp(-n)
    if not rhos or any(not floor <= r <= 1 for r in rhos):
        raise InvalidInputError(f'scales must lie in [e^-{n}, 1], got {rhos}')
    mats, scale = random_products(mu, n, N, seed, threads)
    thetas = cartan_angles(mats, scale)
    line, normal = flag_directions(thetas)
    line_report = max_concentration(line, rhos, budget=budget, seed=seed)
    plane_report = max_concentration(normal, rhos, budget=budget, seed=seed + 1)
    report = ThetaNonconReport(n, N, rhos, line_report.to_dict(), plane_report.to_dict(),
                               extra={'mu': mu.name, 'zariski_dense': mu.zariski_dense})
    logger.info(f'theta_noncon_report: {mu.name} n={n} kappa={report.kappa:.4g} passes={report.passes}')
    return report
