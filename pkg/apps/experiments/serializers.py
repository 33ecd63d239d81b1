"""
Parameter schemas for every registered experiment.

Provides:
- ExperimentConfigSerializer: the outer run document (kind, params, seed, output_dir)
- One params serializer per experiment kind, plus nested schemas for point
  sets, shapes, start points and input measures
- serializer_schema: JSON rendering used by ``multislice describe``
"""

import math
from fractions import Fraction

from rest_framework import serializers
from rest_framework.fields import empty

from apps.common.exceptions import MultisliceError
from apps.slicing_lab.services import ChartFamily, ExperimentParams
from apps.walk.services import WalkMeasure

SET_BUILDERS = ('cantor_product', 'full_grid', 'two_scale', 'fiber_line', 'plane_and_axis', 'random', 'text')
START_KINDS = ('base', 'haar', 'compact', 'cusp', 'matrix', 'rational')
INPUT_SOURCES = ('haar', 'haar-window', 'walk')


def _fraction(value: str) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise serializers.ValidationError(f'{value!r} is not a rational number') from e


class DyadicSetSerializer(serializers.Serializer):
    builder = serializers.ChoiceField(choices=SET_BUILDERS, default='cantor_product')
    d = serializers.IntegerField(min_value=2, max_value=3, default=2)
    k = serializers.IntegerField(min_value=1, max_value=24, default=8)
    R = serializers.IntegerField(min_value=2, default=16, help_text='radius of plane_and_axis, a power of two')
    points = serializers.IntegerField(min_value=1, max_value=1 << 16, default=1024,
                                      help_text='number of draws for the random builder')
    text = serializers.CharField(required=False, allow_blank=False, help_text='"d k" header then one point per line')

    def validate(self, attrs):
        if attrs.get('builder') == 'text' and not attrs.get('text'):
            raise serializers.ValidationError('the text builder needs a text document')
        return attrs


class ShapeSerializer(serializers.Serializer):
    dims = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=1)
    exponents = serializers.ListField(child=serializers.CharField(), min_length=1,
                                      help_text='nondecreasing exponents in [0, 1] such as "1/2"')
    axes = serializers.ListField(child=serializers.IntegerField(min_value=0), default=list)

    def validate_exponents(self, value):
        for r in value:
            _fraction(r)
        return value

    def validate(self, attrs):
        if len(attrs['dims']) != len(attrs['exponents']):
            raise serializers.ValidationError('dims and exponents must have equal length')
        return attrs


class StartPointSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=START_KINDS, default='haar')
    inj = serializers.FloatField(min_value=1e-7, max_value=0.1, default=1e-4,
                                 help_text='injectivity radius of the cusp start')
    matrix = serializers.ListField(child=serializers.FloatField(), min_length=4, max_length=4, required=False)
    offset = serializers.FloatField(min_value=0.0, default=0.0,
                                    help_text='move the point this far along the E direction')
    Q = serializers.IntegerField(min_value=1, default=2, help_text='denominator bound of the rational start')
    height_cutoff = serializers.FloatField(min_value=1.0, default=2.0,
                                          help_text='height bound of the compact start')

    def validate(self, attrs):
        if attrs.get('kind') == 'matrix' and 'matrix' not in attrs:
            raise serializers.ValidationError('a matrix start needs its four entries')
        return attrs


class InputMeasureSerializer(serializers.Serializer):
    source = serializers.ChoiceField(choices=INPUT_SOURCES, default='haar-window')
    N = serializers.IntegerField(min_value=1, default=2000)
    min_systole = serializers.FloatField(min_value=0.0, default=0.9,
                                         help_text='haar-window keeps points whose first column is at least this long')
    steps = serializers.IntegerField(min_value=0, default=10, help_text='walk length for the walk source')
    start = StartPointSerializer(required=False)


def _walk_measure_default():
    return {'name': 'standard-pair'}


class WalkParamsSerializer(serializers.Serializer):
    mu = serializers.JSONField(default=_walk_measure_default,
                               help_text='{"name": ...} or {"atoms": [[a, b, c, d], ...], "weights": [...]}')

    def validate_mu(self, value):
        try:
            WalkMeasure.from_dict(value)
        except (MultisliceError, KeyError, TypeError) as e:
            raise serializers.ValidationError(f'invalid walk measure: {e}') from e
        return value


class SlicingParamsSerializer(serializers.Serializer):
    kappa = serializers.FloatField(default=0.1)
    alpha = serializers.FloatField(default=0.5)
    epsilon = serializers.FloatField(default=0.05)
    trials = serializers.IntegerField(min_value=1, default=64)
    w_search_budget = serializers.IntegerField(min_value=1, default=128)
    loss_constant = serializers.FloatField(min_value=0.0, default=1.0)
    pair_budget = serializers.IntegerField(min_value=1, default=2000)
    allowed_fraction = serializers.FloatField(min_value=0.0, max_value=1.0, allow_null=True, default=None)

    def validate(self, attrs):
        known = {name: attrs[name] for name in ExperimentParams.__dataclass_fields__ if name in attrs}
        try:
            ExperimentParams(**known)
        except MultisliceError as e:
            raise serializers.ValidationError(str(e)) from e
        return attrs


def _rotations_default():
    return {'kind': 'rotations'}


class SetSlicingSerializer(SlicingParamsSerializer):
    set = DyadicSetSerializer()
    shape = ShapeSerializer()
    charts = serializers.JSONField(default=_rotations_default)

    def validate_charts(self, value):
        try:
            ChartFamily.from_dict(value)
        except (MultisliceError, KeyError, TypeError) as e:
            raise serializers.ValidationError(f'invalid chart family: {e}') from e
        return value


class SubcriticalSerializer(SetSlicingSerializer):
    pass


class SupercriticalSerializer(SetSlicingSerializer):
    pass


class SlicingMeasureSerializer(SetSlicingSerializer):
    pass


def _sl2_charts_default():
    return {'kind': 'sl2'}


class Sl2SlicingSerializer(SlicingParamsSerializer):
    k = serializers.IntegerField(min_value=2, max_value=16, default=4)
    samples = serializers.IntegerField(min_value=1, default=4096)
    radius = serializers.FloatField(min_value=0.0, max_value=1.0, default=1.0)
    charts = serializers.JSONField(default=_sl2_charts_default)
    chart_radius = serializers.FloatField(min_value=0.0, allow_null=True, default=None,
                                          help_text='largest admissible norm of a chart preimage; null for none')

    def validate_k(self, value):
        if value % 2:
            raise serializers.ValidationError('k must be even')
        return value


class CombinatoricsSuiteSerializer(serializers.Serializer):
    trials = serializers.IntegerField(min_value=1, default=200)
    dims = serializers.ListField(child=serializers.IntegerField(min_value=2, max_value=3), default=lambda: [2, 3])
    ks = serializers.ListField(child=serializers.IntegerField(min_value=4, max_value=16), default=lambda: [8, 12])
    max_points = serializers.IntegerField(min_value=1, max_value=1 << 16, default=4096)
    cs = serializers.ListField(child=serializers.CharField(), default=lambda: ['1/4', '1/2', '3/4'])

    def validate_ks(self, value):
        if any(k % 4 for k in value):
            raise serializers.ValidationError('every k must be divisible by 4')
        return value

    def validate_cs(self, value):
        for c in value:
            if not 0 < _fraction(c) < 1:
                raise serializers.ValidationError(f'c={c} is outside (0, 1)')
        return value


class CoveringSerializer(serializers.Serializer):
    set = DyadicSetSerializer()
    shapes = ShapeSerializer(many=True)


class CounterexampleSuiteSerializer(serializers.Serializer):
    ks = serializers.ListField(child=serializers.IntegerField(min_value=2, max_value=16), default=lambda: [8, 10, 12])
    thetas = serializers.IntegerField(min_value=1, default=64)
    radii = serializers.ListField(child=serializers.IntegerField(min_value=2), default=lambda: [16, 128])


class LinearizationSerializer(serializers.Serializer):
    set = DyadicSetSerializer()
    charts = serializers.JSONField(default=_rotations_default)
    keep = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1, default=lambda: [0])
    q = serializers.IntegerField(min_value=1, default=2)
    o_term = serializers.FloatField(min_value=0.0, default=10.0)


class StraighteningSerializer(serializers.Serializer):
    t = serializers.FloatField(min_value=0.0, default=3.0)
    rho = serializers.FloatField(min_value=0.0, default=0.05)
    n_samples = serializers.IntegerField(min_value=1, default=10_000)
    factor = serializers.FloatField(min_value=0.0, allow_null=True, default=None)
    h = serializers.ListField(child=serializers.FloatField(), min_length=4, max_length=4, required=False)


class LyapunovSerializer(WalkParamsSerializer):
    n = serializers.IntegerField(min_value=1, default=200)
    N = serializers.IntegerField(min_value=1, default=10_000)


class DriftSerializer(WalkParamsSerializer):
    drift = serializers.ChoiceField(choices=('u0', 'uQ', 'omega'), default='u0')
    start = StartPointSerializer(required=False)
    partner_offset = serializers.FloatField(min_value=0.0, default=1e-4,
                                            help_text='E-offset of the second point for omega')
    n_max = serializers.IntegerField(min_value=1, default=20)
    N = serializers.IntegerField(min_value=1, default=4000)
    s = serializers.FloatField(min_value=0.0, max_value=1.0, allow_null=True, default=None,
                               help_text='drift exponent; fitted from the u0 drift when null')
    C = serializers.FloatField(min_value=0.0, default=1.0)
    Q = serializers.IntegerField(min_value=1, default=2, help_text='catalog bound for uQ')


class RecurrenceSerializer(WalkParamsSerializer):
    start = StartPointSerializer(required=False)
    n = serializers.IntegerField(min_value=0, default=50)
    N = serializers.IntegerField(min_value=1, default=4000)
    radii = serializers.ListField(child=serializers.FloatField(min_value=0.0), min_length=1,
                                  default=lambda: [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])


class ThetaNonconSerializer(WalkParamsSerializer):
    n = serializers.IntegerField(min_value=1, default=30)
    N = serializers.IntegerField(min_value=1, default=4000)
    rhos = serializers.ListField(child=serializers.FloatField(min_value=0.0), allow_null=True, default=None)
    budget = serializers.IntegerField(min_value=1, default=128)


class WassersteinSerializer(serializers.Serializer):
    first = InputMeasureSerializer()
    second = InputMeasureSerializer()
    beta = serializers.FloatField(min_value=0.0, max_value=1.0, default=1.0)
    dictionary_size = serializers.IntegerField(min_value=1, default=256)


class EquidistributionSerializer(WalkParamsSerializer):
    start = StartPointSerializer(required=False)
    horizon = serializers.IntegerField(min_value=1, default=60)
    N = serializers.IntegerField(min_value=1, default=10_000)
    beta = serializers.FloatField(min_value=0.0, max_value=1.0, default=1.0)
    reference = serializers.ChoiceField(choices=('haar', 'self'), default='haar')
    step = serializers.IntegerField(min_value=1, allow_null=True, default=None)
    dictionary_size = serializers.IntegerField(min_value=1, default=256)


class BootstrapSerializer(WalkParamsSerializer):
    input = InputMeasureSerializer(required=False)
    delta = serializers.FloatField(min_value=0.0, max_value=1.0, default=2.0 ** -8)
    epsilon = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.25)
    alpha = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.3)
    tau = serializers.FloatField(min_value=0.0, default=0.5)
    kappa = serializers.FloatField(min_value=0.0, max_value=0.5, default=0.05)
    chain = serializers.IntegerField(min_value=0, default=0, help_text='number of chained increments; 0 runs one')


class FiniteOrbitSerializer(WalkParamsSerializer):
    qs = serializers.ListField(child=serializers.IntegerField(min_value=1, max_value=32), min_length=1,
                               default=lambda: [2, 3, 5, 7, 11, 13])
    dictionary_size = serializers.IntegerField(min_value=1, default=512)
    haar_samples = serializers.IntegerField(min_value=1, default=20_000)


class PersistenceSerializer(WalkParamsSerializer):
    input = InputMeasureSerializer(required=False)
    n = serializers.IntegerField(min_value=0, default=10)
    rho = serializers.FloatField(min_value=0.0, max_value=0.5, default=0.1)
    r = serializers.FloatField(min_value=0.0, max_value=0.5, default=0.05)
    s = serializers.FloatField(min_value=0.0, max_value=1.0, allow_null=True, default=None,
                               help_text='drift exponent; fitted from the u0 drift when null')
    lam = serializers.FloatField(min_value=0.0, allow_null=True, default=None)
    slack = serializers.FloatField(min_value=0.0, default=10.0)


class RobustnessSerializer(serializers.Serializer):
    input = InputMeasureSerializer(required=False)
    alpha = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.3)
    rho_min = serializers.FloatField(min_value=0.0, max_value=0.5, default=2.0 ** -6)
    rho_max = serializers.FloatField(min_value=0.0, max_value=0.5, default=2.0 ** -2)
    tau = serializers.FloatField(min_value=0.0, default=0.5)

    def validate(self, attrs):
        if attrs['rho_min'] > attrs['rho_max']:
            raise serializers.ValidationError('rho_min must not exceed rho_max')
        return attrs


class CompositionCaseSerializer(serializers.Serializer):
    polynomial = serializers.CharField(help_text='integer polynomial in X1..Xn')
    alphas = serializers.ListField(child=serializers.CharField(), min_length=1)


def _mahler_examples_default():
    return ['3/2', '1', '2', 'sqrt(2)', '(1 + sqrt(5))/2']


class MahlerSerializer(serializers.Serializer):
    numbers = serializers.ListField(child=serializers.CharField(), default=_mahler_examples_default)
    cases = CompositionCaseSerializer(many=True, required=False)


class SeparationSerializer(serializers.Serializer):
    qs = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2,
                               default=lambda: [2, 4, 8, 16])


class ExperimentConfigSerializer(serializers.Serializer):
    kind = serializers.CharField()
    params = serializers.DictField(default=dict)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, required=False,
                                    help_text='defaults to MULTISLICE_DEFAULT_SEED')
    output_dir = serializers.CharField(required=False)

    def validate_kind(self, value):
        from .services import registered_kinds

        if value not in registered_kinds():
            raise serializers.ValidationError(f'unknown experiment kind {value!r}')
        return value


_JSON_TYPES = {
    serializers.BooleanField: 'boolean',
    serializers.IntegerField: 'integer',
    serializers.FloatField: 'number',
    serializers.ChoiceField: 'string',
    serializers.CharField: 'string',
    serializers.ListField: 'array',
    serializers.DictField: 'object',
    serializers.JSONField: 'object',
}


def _default(field):
    if field.default is empty:
        return None
    value = field.default() if callable(field.default) else field.default
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def field_schema(field) -> dict:
    if isinstance(field, serializers.ListSerializer):
        return {'type': 'array', 'required': field.required, 'items': serializer_schema(field.child)}
    if isinstance(field, serializers.Serializer):
        return {'type': 'object', 'required': field.required, 'properties': serializer_schema(field)['properties']}
    kind = next((name for cls, name in _JSON_TYPES.items() if isinstance(field, cls)), 'string')
    out = {'type': kind, 'required': field.required}
    default = _default(field)
    if default is not None or field.default is None:
        out['default'] = default
    for attr in ('min_value', 'max_value'):
        if getattr(field, attr, None) is not None:
            out[attr.replace('_value', 'imum')] = getattr(field, attr)
    if isinstance(field, serializers.ChoiceField):
        out['enum'] = list(field.choices)
    if isinstance(field, serializers.ListField):
        out['items'] = field_schema(field.child)
    if field.help_text:
        out['description'] = str(field.help_text)
    return out


def serializer_schema(serializer) -> dict:
    """JSON-schema-like description of a serializer's fields."""
    if isinstance(serializer, type):
        serializer = serializer()
    return {
        'type': 'object',
        'properties': {name: field_schema(field) for name, field in serializer.fields.items()},
    }
