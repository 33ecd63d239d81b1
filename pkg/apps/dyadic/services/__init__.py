from .shapes import Filtration, ShapeVector
from .sets import AtomicMeasure, DyadicSet
from .covering import (
    CoverReport,
    cell_index,
    cell_indices,
    covering_count,
    covering_number,
    max_restricted_covering,
    restricted_covering,
    rough_refinement_factor,
)
from .regularity import is_regular, regularize, regularize_report
from .submodularity import projection_submodularity, submodular_split
from .entropy import entropy_covering_bounds, shannon_entropy
from .geometry import angle, max_concentration

__all__ = [
    'ShapeVector',
    'Filtration',
    'DyadicSet',
    'AtomicMeasure',
    'CoverReport',
    'cell_index',
    'cell_indices',
    'covering_count',
    'covering_number',
    'restricted_covering',
    'max_restricted_covering',
    'rough_refinement_factor',
    'is_regular',
    'regularize',
    'regularize_report',
    'submodular_split',
    'projection_submodularity',
    'shannon_entropy',
    'entropy_covering_bounds',
    'angle',
    'max_concentration',
]
