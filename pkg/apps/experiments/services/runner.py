"""
Run one configured experiment and write its outputs.

A run directory ``<output_dir>/<kind>-<hash12>`` receives results.csv, one
CSV per extra table, report.json and manifest.json. Everything except the
manifest's wall time depends on (kind, params, seed) only.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from django.conf import settings

from apps.common.exceptions import InvalidInputError, PreconditionViolated
from apps.common.reports import sha256_file, sha256_text, to_jsonable, write_csv, write_json
from apps.common.rng import default_seed

from ..serializers import ExperimentConfigSerializer
from . import kinds  # noqa: F401  registers every kind
from .registry import ExperimentResult, get_experiment

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


def _version() -> str:
    return getattr(settings, 'MULTISLICE_VERSION', '0.0.0')


def canonical_json(value: Any) -> str:
    return json.dumps(to_jsonable(value), sort_keys=True, separators=(',', ':'), ensure_ascii=False)


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.seed is None:
            self.seed = default_seed()
        if self.output_dir is None:
            self.output_dir = str(getattr(settings, 'MULTISLICE_OUTPUT_DIR', 'runs'))

    @classmethod
    def from_dict(cls, data: Any) -> 'ExperimentConfig':
        """
        Validate the outer run document.

        Raises:
            InvalidInputError: not an object, unknown kind, or bad seed
        """
        if not isinstance(data, dict):
            raise InvalidInputError(f'config must be a JSON object, got {type(data).__name__}')
        serializer = ExperimentConfigSerializer(data=data)
        if not serializer.is_valid():
            raise InvalidInputError(f'invalid config: {dict(serializer.errors)}')
        values = serializer.validated_data
        return cls(values['kind'], dict(values.get('params', {})), values.get('seed'), values.get('output_dir'))

    @classmethod
    def load(cls, path: str | Path) -> 'ExperimentConfig':
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as e:
            raise InvalidInputError(f'cannot read config {path}: {e.strerror}') from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f'{path}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}') from e
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'params': self.params, 'seed': self.seed, 'output_dir': self.output_dir}


@dataclass
class RunOutcome:
    kind: str
    config_hash: str
    run_dir: Path
    exit_code: int
    passed: bool
    wall_time: float
    outputs: dict[str, str]
    condition: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'config_hash': self.config_hash,
            'run_dir': str(self.run_dir),
            'exit_code': self.exit_code,
            'passed': self.passed,
            'wall_time': self.wall_time,
            'outputs': self.outputs,
            'condition': self.condition,
        }


def config_hash(kind: str, params: dict, seed: int) -> str:
    return sha256_text(canonical_json({'kind': kind, 'params': params, 'seed': seed, 'version': _version()}))


def _precondition_result(error: PreconditionViolated) -> ExperimentResult:
    return ExperimentResult(['condition', 'message'], [[error.condition, str(error)]], error.to_dict(), passed=False)


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> RunOutcome:
    """
    Validate, run and persist one experiment.

    A violated precondition is a completed run with exit code 2 and a
    condition row. Any other MultisliceError propagates and leaves no run
    directory behind.

    Raises:
        MultisliceError: invalid params or an input the services reject
    """
    experiment = get_experiment(config.kind)
    params = experiment.validate(config.params)
    digest = config_hash(config.kind, params, config.seed)
    run_dir = Path(config.output_dir) / f'{config.kind}-{digest[:12]}'
    logger.info(f'run_experiment: {config.kind} seed={config.seed} hash={digest[:12]}')

    started = time.perf_counter()
    condition = None
    try:
        result = experiment.run(params, config.seed, threads)
        exit_code = EXIT_PASS if result.passed else EXIT_FAILED
    except PreconditionViolated as e:
        logger.warning(f'run_experiment: {config.kind} precondition {e.condition!r} violated: {e}')
        result = _precondition_result(e)
        condition = e.condition
        exit_code = EXIT_FAILED
    wall_time = time.perf_counter() - started

    paths = [write_csv(run_dir / 'results.csv', result.header, result.rows)]
    for name, (header, rows) in sorted(result.extra_tables.items()):
        paths.append(write_csv(run_dir / f'{name}.csv', header, rows))
    paths.append(write_json(run_dir / 'report.json', {
        'kind': config.kind,
        'seed': config.seed,
        'config_hash': digest,
        'version': _version(),
        'params': params,
        'passed': result.passed,
        'condition': condition,
        'report': result.report,
    }))
    outputs = {path.name: sha256_file(path) for path in paths}
    write_json(run_dir / 'manifest.json', {
        'config_hash': digest,
        'version': _version(),
        'wall_time': wall_time,
        'config': {'kind': config.kind, 'params': params, 'seed': config.seed},
        'outputs': outputs,
        'exit_code': exit_code,
    })

    logger.info(f'run_experiment: {config.kind} exit={exit_code} in {wall_time:.2f}s -> {run_dir}')
    return RunOutcome(config.kind, digest, run_dir, exit_code, result.passed, wall_time, outputs, condition)
