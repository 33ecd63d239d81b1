from .measures import EmpiricalMeasure, WalkMeasure, zariski_dense_heuristic
from .convolution import cartan_angles, convolve_sample, log_expansions, propagate, random_products
from .lyapunov import LyapunovEstimate, lyapunov_estimate
from .robustness import (
    RobustnessCertificate,
    multiscale_count,
    rescale_certificate,
    robust_dimension,
    robustness_certificate,
    single_to_multiscale,
    union_certificate,
)
from .drift import DriftReport, TailReport, cusp_point, drift_report, recurrence_tail
from .noncon import ThetaNonconReport, theta_noncon_report
from .wasserstein import WassersteinEstimate, wasserstein_estimate
from .equidistribution import (
    DecayCurve,
    diophantine_generic,
    effective_time_bound,
    equidistribution_experiment,
    haar_measure,
)
from .finite_orbits import OrbitDiscrepancy, discrepancy_regression, finite_orbit_discrepancy, orbit_closure
from .persistence import PersistenceReport, persistence_check
from .bootstrap import BootstrapReport, bootstrap_chain, bootstrap_experiment

__all__ = [
    'WalkMeasure',
    'EmpiricalMeasure',
    'zariski_dense_heuristic',
    'convolve_sample',
    'propagate',
    'random_products',
    'log_expansions',
    'cartan_angles',
    'LyapunovEstimate',
    'lyapunov_estimate',
    'RobustnessCertificate',
    'robustness_certificate',
    'robust_dimension',
    'union_certificate',
    'rescale_certificate',
    'multiscale_count',
    'single_to_multiscale',
    'DriftReport',
    'TailReport',
    'cusp_point',
    'drift_report',
    'recurrence_tail',
    'ThetaNonconReport',
    'theta_noncon_report',
    'WassersteinEstimate',
    'wasserstein_estimate',
    'DecayCurve',
    'equidistribution_experiment',
    'effective_time_bound',
    'diophantine_generic',
    'haar_measure',
    'OrbitDiscrepancy',
    'orbit_closure',
    'finite_orbit_discrepancy',
    'discrepancy_regression',
    'PersistenceReport',
    'persistence_check',
    'BootstrapReport',
    'bootstrap_experiment',
    'bootstrap_chain',
]
