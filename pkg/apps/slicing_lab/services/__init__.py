from .charts import (
    AffineChart,
    Chart,
    ChartFamily,
    FunctionChart,
    IsometryChart,
    ProjectedChart,
    Sl2Chart,
    fold_chart,
)
from .reports import ExperimentParams, SlicingReport, dyadic_scales
from .conditions import (
    chart_distortion_check,
    circle_concentration_check,
    measure_frostman_check,
    noncon_condition_check,
    single_scale_check,
)
from .experiments import (
    image_covering_check,
    nonlinear_covering,
    sl2_slicing_experiment,
    slicing_measure_experiment,
    subcritical_experiment,
    supercritical_experiment,
)
from .counterexamples import counterexample_suite
from .linearization import linearization_gap, scale_ladder

__all__ = [
    'Chart',
    'IsometryChart',
    'AffineChart',
    'Sl2Chart',
    'FunctionChart',
    'ProjectedChart',
    'fold_chart',
    'ChartFamily',
    'ExperimentParams',
    'SlicingReport',
    'dyadic_scales',
    'chart_distortion_check',
    'noncon_condition_check',
    'single_scale_check',
    'measure_frostman_check',
    'circle_concentration_check',
    'nonlinear_covering',
    'image_covering_check',
    'subcritical_experiment',
    'supercritical_experiment',
    'slicing_measure_experiment',
    'sl2_slicing_experiment',
    'counterexample_suite',
    'linearization_gap',
    'scale_ladder',
]
