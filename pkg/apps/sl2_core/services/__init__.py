from .group import KAK, Sl2Element, Sl2Vector
from .lie import exp_batch, exp_e, exp_f, exp_h, exp_vec, log_batch, log_near_identity, log_sl2
from .decompositions import (
    adjoint,
    adjoint_batch,
    adjoint_norm,
    adjoint_norm_batch,
    cartan,
    expansion,
    expansion_batch,
    iwasawa,
    root_decomposition,
)
from .charts import (
    RHO_0,
    local_distance_batch,
    phi_theta,
    phi_theta_batch,
    psi,
    psi_theta,
    psi_theta_batch,
    validate_chart_radius,
)
from .straightening import straightening_check

__all__ = [
    'Sl2Element',
    'Sl2Vector',
    'KAK',
    'exp_e',
    'exp_h',
    'exp_f',
    'exp_vec',
    'exp_batch',
    'log_sl2',
    'log_near_identity',
    'log_batch',
    'cartan',
    'iwasawa',
    'expansion',
    'expansion_batch',
    'adjoint',
    'adjoint_batch',
    'adjoint_norm',
    'adjoint_norm_batch',
    'root_decomposition',
    'RHO_0',
    'psi',
    'psi_theta',
    'psi_theta_batch',
    'phi_theta',
    'phi_theta_batch',
    'local_distance_batch',
    'validate_chart_radius',
    'straightening_check',
]
