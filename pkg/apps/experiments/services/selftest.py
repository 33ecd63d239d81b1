"""
Fast battery of known-answer checks across every app.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

from apps.arith.services import denominator, mahler
from apps.common.exceptions import MultisliceError
from apps.common.rng import stream
from apps.modular_space.services import compact_sample, lattice_search_self_check
from apps.sl2_core.services import Sl2Element, straightening_check, validate_chart_radius
from apps.walk.services import WalkMeasure, lyapunov_estimate

from .kinds import run_combinatorics_suite

logger = logging.getLogger(__name__)

SELFTEST_SEED = 7


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ''

    def to_dict(self) -> dict:
        return {'name': self.name, 'passed': self.passed, 'detail': self.detail}


def _chart_radius() -> tuple[bool, str]:
    report = validate_chart_radius(pairs=500, seed=SELFTEST_SEED)
    return report.passes, f'roundtrip={report.max_roundtrip_error:.2e} ratios=[{report.min_ratio:.3f}, {report.max_ratio:.3f}]'


def _straightening() -> tuple[bool, str]:
    report = straightening_check(2.0, 0.05, n_samples=2000, seed=SELFTEST_SEED)
    return report.passes, f'accepted={report.accepted} max_ratio={report.max_ratio:.3g}'


def _lyapunov_dirac() -> tuple[bool, str]:
    mu = WalkMeasure.dirac(Sl2Element.from_dict([2.0, 0.0, 0.0, 0.5]))
    estimate = lyapunov_estimate(mu, 10, 16, SELFTEST_SEED)
    return abs(estimate.value - math.log(4)) < 1e-9, f'estimate={estimate.value:.12f}'


def _mahler_examples() -> tuple[bool, str]:
    expected = {'3/2': (3.0, 2), 'sqrt(2)': (2.0, 1), '1': (1.0, 1)}
    got = {text: (mahler(text), denominator(text)) for text in expected}
    ok = all(abs(got[t][0] - m) < 1e-9 and got[t][1] == d for t, (m, d) in expected.items())
    return ok, ', '.join(f'{t}: M={m:.6g} den={d}' for t, (m, d) in got.items())


def _combinatorics() -> tuple[bool, str]:
    params = {'trials': 8, 'dims': [2, 3], 'ks': [4, 8], 'max_points': 256, 'cs': ['1/2']}
    result = run_combinatorics_suite(params, SELFTEST_SEED, None)
    return result.passed, f'failures={result.report["failures"]}'


def _lattice_search() -> tuple[bool, str]:
    rng = stream(SELFTEST_SEED, 0)
    points = compact_sample(rng, 3.0, n=8)
    return lattice_search_self_check(points), f'{len(points)} points'


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ('chart-radius', _chart_radius),
    ('straightening', _straightening),
    ('lyapunov-dirac', _lyapunov_dirac),
    ('mahler-examples', _mahler_examples),
    ('combinatorics', _combinatorics),
    ('lattice-search', _lattice_search),
]


def run_self_test(names: Optional[list[str]] = None) -> list[CheckResult]:
    """Run the named checks (all by default); a raised error counts as a failure."""
    results = []
    for name, check in CHECKS:
        if names and name not in names:
            continue
        try:
            passed, detail = check()
        except MultisliceError as e:
            logger.error(f'self-test {name}: {e}')
            passed, detail = False, f'{type(e).__name__}: {e}'
        results.append(CheckResult(name, bool(passed), detail))
        logger.info(f'self-test {name}: {"ok" if passed else "FAILED"} {detail}')
    return results
