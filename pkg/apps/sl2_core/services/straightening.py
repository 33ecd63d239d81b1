"""
Monte Carlo check that a nonlinear rectangle straightens in the chart ψ.

The set {v ∈ B_ρ₀ : ψ(v) ∈ a^t B_ρ a^{−t} h} is sampled through
X ∈ B_ρ(𝔤) ↦ ψ⁻¹(a^t exp(X) a^{−t} h) and every sample must lie in
Ad(a^t) B_{factor·ρ} + w for the first accepted sample w.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.common.rng import stream

from .charts import RHO_0, _ball, psi_inverse_batch
from .group import Sl2Element, a_t_matrix
from .lie import exp_batch

logger = logging.getLogger(__name__)

DEFAULT_FACTOR = 1e6
_CHUNK = 4096


@dataclass
class StraighteningReport:
    t: float
    rho: float
    factor: float
    samples: int
    accepted: int
    max_ratio: float
    witness: Optional[list[float]] = field(default=None)

    @property
    def passes(self) -> bool:
        return self.accepted > 0 and self.max_ratio <= self.factor

    def to_dict(self) -> dict:
        return {
            't': self.t,
            'rho': self.rho,
            'factor': self.factor,
            'samples': self.samples,
            'accepted': self.accepted,
            'max_ratio': self.max_ratio,
            'witness': self.witness,
            'passes': self.passes,
        }


def straightening_check(t: float, rho: float, h: Optional[Sl2Element] = None, n_samples: int = 10_000,
                        factor: float = DEFAULT_FACTOR, seed: int = 0, rho0: float = RHO_0) -> StraighteningReport:
    """
    Sample the rectangle preimage and measure it in Ad(a^t)-rescaled coordinates.

    Args:
        t: expansion time, t ≥ 0
        rho: ball radius in G
        h: translation, identity when omitted
        n_samples: number of draws X ∈ B_ρ(𝔤)
        factor: claimed containment factor
        seed: random seed
        rho0: chart radius

    Returns:
        StraighteningReport whose max_ratio is max ‖Ad(a^{−t})(v − w)‖ / ρ

    Raises:
        InvalidInputError: if t < 0, ρ ≤ 0 or e^t·ρ > ρ₀
    """
    if t < 0 or rho <= 0:
        raise InvalidInputError(f'need t ≥ 0 and ρ > 0, got t={t}, ρ={rho}')
    if math.exp(t) * rho > rho0 * (1 + 1e-12):
        raise InvalidInputError(f'e^t·ρ = {math.exp(t) * rho:.6g} exceeds ρ₀ = {rho0}')
    h = h or Sl2Element.identity()
    at, at_inv = a_t_matrix(t), a_t_matrix(-t)
    shrink = np.array([math.exp(-t), 1.0, math.exp(t)])
    rng = stream(seed, 0)

    witness = None
    accepted = 0
    max_ratio = 0.0
    remaining = n_samples
    while remaining > 0:
        n = min(_CHUNK, remaining)
        remaining -= n
        X = _ball(rng, n, rho)
        g = at @ exp_batch(X) @ at_inv @ h.matrix()
        v, valid = psi_inverse_batch(g)
        valid &= np.linalg.norm(np.where(valid[:, None], v, 0.0), axis=1) <= rho0
        v = v[valid]
        if v.shape[0] == 0:
            continue
        if witness is None:
            witness = v[0]
        accepted += v.shape[0]
        spread = np.linalg.norm((v - witness) * shrink, axis=1) / rho
        max_ratio = max(max_ratio, float(spread.max()))

    report = StraighteningReport(
        t=t,
        rho=rho,
        factor=factor,
        samples=n_samples,
        accepted=accepted,
        max_ratio=max_ratio,
        witness=None if witness is None else witness.tolist(),
    )
    logger.debug(f'straightening_check: t={t} accepted={accepted} max_ratio={max_ratio:.6g}')
    return report
