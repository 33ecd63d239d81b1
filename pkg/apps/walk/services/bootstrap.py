"""
Dimension increment: run n_δ = ⌊|log δ|/(2λ)⌋ steps from a robust measure and
certify the output at scale δ^{1/2}.

Provides:
- bootstrap_experiment: one increment with the measured α-gain
- bootstrap_chain: δ_j = δ^{2^{-j}}, α_j = κ + jε/2, τ_{j+1} = τ_j + δ_j^ε
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from apps.common.exceptions import InvalidInputError, PreconditionViolated
from apps.common.rng import child_seed
from apps.modular_space.services.metric import LOG_CHART_RADIUS

from .convolution import propagate
from .lyapunov import LyapunovEstimate, lyapunov_estimate
from .measures import EmpiricalMeasure, WalkMeasure
from .robustness import DIM_X, robust_dimension, robustness_certificate

logger = logging.getLogger(__name__)

LYAPUNOV_STEPS = 20
LYAPUNOV_SAMPLES = 2000


@dataclass
class BootstrapReport:
    delta: float
    epsilon: float
    alpha: float
    tau: float
    lam: float
    steps: int
    alpha_before: float
    alpha_after: float
    output_certified: Optional[bool]
    output: EmpiricalMeasure = field(repr=False)
    extra: dict = field(default_factory=dict)

    @property
    def gain(self) -> float:
        return self.alpha_after - self.alpha_before

    def to_dict(self) -> dict:
        return {
            'delta': self.delta,
            'epsilon': self.epsilon,
            'alpha': self.alpha,
            'tau': self.tau,
            'lambda': self.lam,
            'steps': self.steps,
            'alpha_before': self.alpha_before,
            'alpha_after': self.alpha_after,
            'gain': self.gain,
            'output_certified': self.output_certified,
            **self.extra,
        }


def _require_robust(nu: EmpiricalMeasure, alpha: float, interval: tuple[float, float], tau: float):
    details = {'alpha': alpha, 'interval': list(interval), 'tau': tau, 'samples': len(nu)}
    if len(nu) * interval[0] ** (DIM_X * alpha) < 1:
        raise PreconditionViolated('input measure is below the sampling resolution of its interval',
                                   condition='robustness', details=details)
    cert = robustness_certificate(nu, alpha, interval, tau)
    if not cert.passes:
        raise PreconditionViolated('input measure is not certified robust', condition='robustness',
                                   details={**details, **cert.to_dict()})
    return cert


def bootstrap_experiment(mu: WalkMeasure, nu0: EmpiricalMeasure, delta: float, epsilon: float, alpha: float,
                         tau: float = 0.0, kappa: float = 0.05, lyapunov: Optional[LyapunovEstimate] = None,
                         seed: int = 0, threads: Optional[int] = None) -> BootstrapReport:
    """
    One dimension increment.

    Args:
        delta: scale δ; ν₀ must be (α, ℬ_{[δ, δ^ε]}, τ)-robust
        epsilon: target increment, also the exponent of the upper scale δ^ε
        alpha: certified dimension of ν₀, in [κ, 1 − κ]
        lyapunov: a previous estimate; measured when omitted

    Raises:
        InvalidInputError: malformed scales or α outside [κ, 1 − κ]
        PreconditionViolated: ν₀ is not certified robust (condition 'robustness')
    """
    if not 0 < delta < 1 or not 0 < epsilon < 1:
        raise InvalidInputError(f'need delta, epsilon in (0, 1), got delta={delta}, epsilon={epsilon}')
    if delta ** epsilon >= LOG_CHART_RADIUS:
        raise InvalidInputError(f'delta^epsilon = {delta ** epsilon:.3g} reaches the log-chart radius')
    if not kappa <= alpha <= 1 - kappa:
        raise InvalidInputError(f'alpha={alpha} outside [{kappa}, {1 - kappa}]')
    _require_robust(nu0, alpha, (delta, delta ** epsilon), tau)

    estimate = lyapunov or lyapunov_estimate(mu, LYAPUNOV_STEPS, LYAPUNOV_SAMPLES, child_seed(seed, 1), threads)
    if estimate.value <= 0:
        raise PreconditionViolated('the walk has no positive Lyapunov exponent', condition='lyapunov',
                                   details=estimate.to_dict())
    steps = int(abs(math.log(delta)) / (2 * estimate.value))
    nu1 = propagate(mu, nu0, steps, child_seed(seed, 2), threads)

    rho = math.sqrt(delta)
    out_tau = tau + delta ** epsilon
    target = min(1.0, alpha + epsilon)
    try:
        certified = robustness_certificate(nu1, target, (rho, rho), out_tau).passes
    except InvalidInputError:
        certified = None
    report = BootstrapReport(
        delta=delta,
        epsilon=epsilon,
        alpha=alpha,
        tau=tau,
        lam=estimate.value,
        steps=steps,
        alpha_before=robust_dimension(nu0, rho, tau),
        alpha_after=robust_dimension(nu1, rho, out_tau),
        output_certified=certified,
        output=nu1,
        extra={'target_alpha': target, 'output_tau': out_tau, 'lyapunov': estimate.to_dict()},
    )
    logger.info(f'bootstrap_experiment: n_delta={steps} alpha {report.alpha_before:.3f} -> {report.alpha_after:.3f}')
    return report


def bootstrap_chain(mu: WalkMeasure, nu0: EmpiricalMeasure, delta: float, kappa: float, epsilon: float,
                    steps: int, tau: float = 0.0, seed: int = 0, threads: Optional[int] = None) -> list[dict]:
    """
    Chain increments from δ upwards.

    Step j works at δ_j = δ^{2^{-j}} with α_j = κ + jε/2 and feeds its output
    to step j + 1. The chain stops at the first uncertified input; that row
    carries the violated condition.
    """
    if steps < 1:
        raise InvalidInputError(f'need at least one step, got {steps}')
    estimate = lyapunov_estimate(mu, LYAPUNOV_STEPS, LYAPUNOV_SAMPLES, child_seed(seed, 1), threads)
    rows = []
    nu = nu0
    for j in range(steps):
        delta_j = delta ** (2.0 ** -j)
        alpha_j = min(1 - kappa, kappa + j * epsilon / 2)
        try:
            report = bootstrap_experiment(mu, nu, delta_j, epsilon, alpha_j, tau, kappa, estimate,
                                          child_seed(seed, 3, j), threads)
        except (PreconditionViolated, InvalidInputError) as e:
            logger.warning(f'bootstrap_chain: stopped at step {j}: {e}')
            rows.append({'step': j, 'delta': delta_j, 'alpha': alpha_j, 'tau': tau, 'stopped': str(e)})
            break
        rows.append({'step': j, **report.to_dict()})
        nu, tau = report.output, report.extra['output_tau']
    return rows
