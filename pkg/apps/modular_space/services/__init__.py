from .points import XPoint, is_reduced_batch, points_from_batch, reduce, reduce_batch
from .metric import (
    BallCounter,
    dist_g,
    dist_g_batch,
    dist_x,
    distance_to_base,
    distance_to_set,
    distances_to,
    injectivity_radius,
    injectivity_radius_batch,
    lattice_elements,
    lattice_search_self_check,
    pair_distances,
)
from .sampling import compact_sample, compact_sample_batch, cusp_mass_exact, haar_sample, haar_sample_batch
from .rational import RationalPointCatalog, SeparationProfile, rational_points, separation_profile

__all__ = [
    'XPoint',
    'reduce',
    'reduce_batch',
    'is_reduced_batch',
    'points_from_batch',
    'dist_g',
    'dist_g_batch',
    'dist_x',
    'distances_to',
    'pair_distances',
    'distance_to_base',
    'distance_to_set',
    'injectivity_radius',
    'injectivity_radius_batch',
    'lattice_elements',
    'lattice_search_self_check',
    'BallCounter',
    'compact_sample',
    'compact_sample_batch',
    'haar_sample',
    'haar_sample_batch',
    'cusp_mass_exact',
    'RationalPointCatalog',
    'SeparationProfile',
    'rational_points',
    'separation_profile',
]
