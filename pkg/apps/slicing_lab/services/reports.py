"""
Experiment parameters and the per-θ slicing report.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from apps.common.exceptions import InvalidInputError


@dataclass(frozen=True)
class ExperimentParams:
    """
    Knobs of a slicing experiment.

    kappa, alpha and epsilon are the exponents of the hypotheses; loss_constant
    plays the role of C in the subcritical target δ^{Cε|log ε|}; allowed_fraction
    overrides the default pass threshold δ^ε on the exceptional fraction.
    """
    kappa: float = 0.1
    alpha: float = 0.5
    epsilon: float = 0.05
    trials: int = 64
    seed: int = 0
    w_search_budget: int = 128
    loss_constant: float = 1.0
    pair_budget: int = 2000
    allowed_fraction: Optional[float] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not (0 < self.kappa <= self.alpha <= 1 - self.kappa):
            raise InvalidInputError(
                f'need 0 < kappa <= alpha <= 1 - kappa, got kappa={self.kappa}, alpha={self.alpha}'
            )
        if not (0 < self.epsilon <= 0.5):
            raise InvalidInputError(f'epsilon must lie in (0, 1/2], got {self.epsilon}')
        if self.trials < 1:
            raise InvalidInputError('trials must be at least 1')
        if self.w_search_budget < 1:
            raise InvalidInputError('W search budget must be at least 1')
        if self.allowed_fraction is not None and not (0 <= self.allowed_fraction <= 1):
            raise InvalidInputError('allowed_fraction must lie in [0, 1]')

    def allowed(self, delta: float) -> float:
        return self.allowed_fraction if self.allowed_fraction is not None else delta ** self.epsilon

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentParams':
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{key: value for key, value in data.items() if key in known})


@dataclass
class SlicingReport:
    """
    Per-θ measurements and the σ-mass of the exceptional θ.

    ``values`` holds the quantity compared to ``target`` for each θ: an
    adversarial covering number (exceptional when below target) or a removed
    mass (exceptional when above).
    """
    experiment: str
    delta: float
    target: float
    values: list[float]
    exceptional: list[bool]
    allowed_fraction: float
    lower_is_exceptional: bool = True
    rows: list[dict[str, Any]] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.values)

    @property
    def exceptional_fraction(self) -> float:
        if not self.exceptional:
            return 0.0
        return float(np.mean(self.exceptional))

    @property
    def passes(self) -> bool:
        return self.exceptional_fraction <= self.allowed_fraction

    def fraction_beyond(self, threshold: float) -> float:
        """Exceptional fraction had the target been ``threshold``."""
        values = np.asarray(self.values, dtype=float)
        if values.size == 0:
            return 0.0
        hit = values < threshold if self.lower_is_exceptional else values > threshold
        return float(np.mean(hit))

    def csv_rows(self) -> list[dict[str, Any]]:
        return [
            {
                'theta_index': i,
                'covering': value,
                'target': self.target,
                'exceptional_flag': int(flag),
                **row,
            }
            for i, (value, flag, row) in enumerate(
                zip(self.values, self.exceptional, self.rows or [{}] * len(self.values))
            )
        ]

    def to_dict(self) -> dict:
        return {
            'experiment': self.experiment,
            'delta': self.delta,
            'trials': self.trials,
            'target': self.target,
            'exceptional_fraction': self.exceptional_fraction,
            'allowed_fraction': self.allowed_fraction,
            'passes': self.passes,
            'extra': self.extra,
        }


def dyadic_scales(k: int, epsilon: float) -> list[float]:
    """ρ = 2^{-j} for every j with δ ≤ ρ ≤ δ^ε, δ = 2^{-k}."""
    first = min(k, math.ceil(epsilon * k))
    return [2.0 ** (-j) for j in range(first, k + 1)]
