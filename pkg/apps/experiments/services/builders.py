"""
Turn validated params into domain objects.

Every random construction draws from ``stream(seed, BUILD_STREAM, ...)`` so
inputs are reproducible independently of the experiment's own streams.
"""

import math
from typing import Optional

import numpy as np

from apps.common.exceptions import InvalidInputError
from apps.common.rng import child_seed, stream
from apps.dyadic.services import DyadicSet, ShapeVector
from apps.modular_space.services import XPoint, compact_sample, haar_sample, haar_sample_batch, rational_points
from apps.modular_space.services.sampling import DEFAULT_COMPACT_HEIGHT
from apps.sl2_core.services import Sl2Element, exp_vec
from apps.slicing_lab.services import ChartFamily, ExperimentParams
from apps.slicing_lab.services.test_sets import (
    cantor_product,
    fiber_line,
    full_grid,
    plane_and_axis,
    two_scale_counterexample,
)
from apps.walk.services import EmpiricalMeasure, WalkMeasure, convolve_sample, cusp_point

BUILD_STREAM = 90


def build_set(options: dict, seed: int) -> DyadicSet:
    builder = options.get('builder', 'cantor_product')
    d, k = int(options.get('d', 2)), int(options.get('k', 8))
    if builder == 'cantor_product':
        return cantor_product(d, k)
    if builder == 'full_grid':
        return full_grid(d, k)
    if builder == 'two_scale':
        return two_scale_counterexample(k)
    if builder == 'fiber_line':
        return fiber_line(k)
    if builder == 'plane_and_axis':
        return plane_and_axis(int(options.get('R', 16)))
    if builder == 'random':
        rng = stream(seed, BUILD_STREAM, 0)
        return DyadicSet(d, k, rng.integers(0, 1 << k, size=(int(options.get('points', 1024)), d)))
    if builder == 'text':
        return DyadicSet.from_text(options['text'])
    raise InvalidInputError(f'unknown set builder {builder!r}')


def build_shape(options: dict, k: int) -> ShapeVector:
    return ShapeVector.from_dict({**options, 'k': k})


def build_params(params: dict, seed: int) -> ExperimentParams:
    known = {name: params[name] for name in ExperimentParams.__dataclass_fields__ if name in params}
    return ExperimentParams(**{**known, 'seed': seed})


def build_charts(options: dict) -> ChartFamily:
    return ChartFamily.from_dict(options)


def build_walk(options: dict) -> WalkMeasure:
    return WalkMeasure.from_dict(options)


def shift_point(x: XPoint, offset: float) -> XPoint:
    if offset <= 0:
        return x
    return XPoint.from_element(exp_vec([offset, 0.0, 0.0]) @ x.rep)


def build_start(options: Optional[dict], seed: int) -> XPoint:
    """x from {'kind': base | haar | compact | cusp | matrix | rational, ...}, optionally shifted along E."""
    options = options or {}
    kind = options.get('kind', 'haar')
    if kind == 'base':
        x = XPoint.base()
    elif kind == 'haar':
        x = haar_sample(stream(seed, BUILD_STREAM, 1))
    elif kind == 'compact':
        x = compact_sample(stream(seed, BUILD_STREAM, 1), float(options.get('height_cutoff', DEFAULT_COMPACT_HEIGHT)))
    elif kind == 'cusp':
        x = cusp_point(float(options.get('inj', 1e-4)))
    elif kind == 'matrix':
        x = XPoint.from_element(Sl2Element.from_dict(options['matrix']))
    elif kind == 'rational':
        catalog = rational_points(int(options.get('Q', 2)))
        if not len(catalog):
            raise InvalidInputError(f'no rational points with denominator up to {options.get("Q")}')
        x = catalog.points[0]
    else:
        raise InvalidInputError(f'unknown start kind {kind!r}')
    return shift_point(x, float(options.get('offset', 0.0)))


def build_input(options: Optional[dict], seed: int, mu: Optional[WalkMeasure] = None) -> EmpiricalMeasure:
    """An empirical measure on X from a Haar sample, a Haar window, or a walk."""
    options = options or {}
    source = options.get('source', 'haar-window')
    N = int(options.get('N', 2000))
    if source == 'haar':
        reps = haar_sample_batch(stream(seed, BUILD_STREAM, 2), N)
        return EmpiricalMeasure(reps, {'source': 'haar', 'N': N})
    if source == 'haar-window':
        min_systole = float(options.get('min_systole', 0.9))
        rng = stream(seed, BUILD_STREAM, 3)
        kept = []
        total = 0
        # rejection sampling
        for _ in range(64):
            reps = haar_sample_batch(rng, max(2 * N, 256))
            reps = reps[np.linalg.norm(reps[:, :, 0], axis=1) >= min_systole]
            kept.append(reps)
            total += reps.shape[0]
            if total >= N:
                break
        if total < N:
            raise InvalidInputError(f'min_systole={min_systole} leaves too little Haar mass for {N} points')
        return EmpiricalMeasure(np.concatenate(kept)[:N], {'source': 'haar-window', 'N': N, 'min_systole': min_systole})
    if source == 'walk':
        if mu is None:
            raise InvalidInputError('a walk input needs a walk measure')
        x = build_start(options.get('start'), seed)
        return convolve_sample(mu, int(options.get('steps', 10)), x, N, child_seed(seed, BUILD_STREAM, 4))
    raise InvalidInputError(f'unknown input source {source!r}')


def finite_or_inf(value: Optional[float]) -> float:
    return math.inf if value is None else float(value)
