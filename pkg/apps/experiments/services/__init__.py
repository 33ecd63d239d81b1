from .registry import Experiment, ExperimentResult, REGISTRY, get_experiment, register, registered_kinds
from . import kinds  # noqa: F401  registers every kind
from .runner import (
    EXIT_ERROR,
    EXIT_FAILED,
    EXIT_PASS,
    ExperimentConfig,
    RunOutcome,
    config_hash,
    run_experiment,
)
from .selftest import CheckResult, run_self_test

__all__ = [
    'Experiment',
    'ExperimentResult',
    'REGISTRY',
    'get_experiment',
    'register',
    'registered_kinds',
    'ExperimentConfig',
    'RunOutcome',
    'config_hash',
    'run_experiment',
    'EXIT_PASS',
    'EXIT_ERROR',
    'EXIT_FAILED',
    'CheckResult',
    'run_self_test',
]
