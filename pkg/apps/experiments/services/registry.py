"""
Registered experiment kinds.

Each kind pairs a params serializer with a runner
``run(params, seed, threads) -> ExperimentResult``. Runners are registered
with the ``register`` decorator when ``kinds`` is imported.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from apps.common.exceptions import InvalidInputError


@dataclass
class ExperimentResult:
    """Table rows for results.csv, a JSON report, and the pass/fail verdict."""
    header: list[str]
    rows: list[list[Any]]
    report: dict[str, Any]
    passed: bool
    extra_tables: dict[str, tuple[list[str], list[list[Any]]]] = field(default_factory=dict)


Runner = Callable[[dict, int, Optional[int]], ExperimentResult]


@dataclass(frozen=True)
class Experiment:
    kind: str
    summary: str
    serializer: type
    run: Runner

    def validate(self, params: dict) -> dict:
        """
        Validate params against the kind's schema.

        Raises:
            InvalidInputError: with the serializer's field errors
        """
        serializer = self.serializer(data=params)
        if not serializer.is_valid():
            raise InvalidInputError(f'invalid params for {self.kind}: {dict(serializer.errors)}')
        return dict(serializer.validated_data)


REGISTRY: dict[str, Experiment] = {}


def register(kind: str, serializer: type, summary: str):
    def decorator(func: Runner) -> Runner:
        if kind in REGISTRY:
            raise InvalidInputError(f'experiment kind {kind!r} registered twice')
        REGISTRY[kind] = Experiment(kind, summary, serializer, func)
        return func
    return decorator


def get_experiment(kind: str) -> Experiment:
    try:
        return REGISTRY[kind]
    except KeyError:
        raise InvalidInputError(f'unknown experiment kind {kind!r}; see "multislice list"') from None


def registered_kinds() -> list[str]:
    return sorted(REGISTRY)
