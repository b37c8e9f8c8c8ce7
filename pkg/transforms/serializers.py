"""
JSON descriptors for distributions, pcsm functions and W-transforms
Each serializer validates a descriptor dict; save() returns the domain object.
"""

from rest_framework import serializers

from .dist import DISTRIBUTION_KINDS, Bernoulli, Discrete, KumaraswamyLike, ParetoI, PowerLaw, Tabulated, Uniform
from .exceptions import WTransformError
from .fixtures import NAMED_TRANSFORMS, frac_square_tail
from .generalised import build_generalised
from .pcsm import PIECE_FORMS, FracSquareFamily, LazyPcsmFunction, PcsmFunction
from .wtransform import (
    GENERATORS, ExpPowerGenerator, InnTransform, PiecewiseLinearWTransform,
    PssmWTransform, VTransform, build, reflection_transform,
)

LAZY_FAMILIES = {'frac_square': FracSquareFamily}

# parameters each kind requires
REQUIRED_PARAMS = {
    'uniform': [],
    'pareto1': ['shape'],
    'power': ['exponent'],
    'two_sided_exp': [],
    'kumaraswamy_like': ['a'],
    'bernoulli': ['p'],
    'mixed_exp': [],
    'discrete': ['locations', 'masses'],
    'tabulated': ['x', 'cdf'],
}


def _created(serializer_class, data):
    serializer = serializer_class(data=data)
    serializer.is_valid(raise_exception=True)
    try:
        return serializer.save()
    except WTransformError as e:
        raise serializers.ValidationError({'non_field_errors': [str(e)]})


# ============================================================================
# DISTRIBUTIONS
# ============================================================================

class DistributionSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=sorted(DISTRIBUTION_KINDS))
    a = serializers.FloatField(required=False)
    b = serializers.FloatField(required=False)
    shape = serializers.FloatField(required=False, min_value=0.0)
    exponent = serializers.FloatField(required=False, min_value=0.0)
    p = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    locations = serializers.ListField(child=serializers.FloatField(), required=False, min_length=1)
    masses = serializers.ListField(child=serializers.FloatField(min_value=0.0), required=False, min_length=1)
    x = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)
    cdf = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)

    def validate(self, attrs):
        missing = [name for name in REQUIRED_PARAMS[attrs['kind']] if name not in attrs]
        if missing:
            raise serializers.ValidationError(
                f"Distribution kind '{attrs['kind']}' requires: {', '.join(missing)}"
            )
        return attrs

    def create(self, validated_data):
        kind = validated_data['kind']
        if kind == 'uniform':
            return Uniform(validated_data.get('a', 0.0), validated_data.get('b', 1.0))
        if kind == 'pareto1':
            return ParetoI(validated_data['shape'])
        if kind == 'power':
            return PowerLaw(validated_data['exponent'])
        if kind == 'kumaraswamy_like':
            return KumaraswamyLike(validated_data['a'])
        if kind == 'bernoulli':
            return Bernoulli(validated_data['p'])
        if kind == 'discrete':
            return Discrete(validated_data['locations'], validated_data['masses'])
        if kind == 'tabulated':
            return Tabulated(validated_data['x'], validated_data['cdf'])
        return DISTRIBUTION_KINDS[kind]()


def build_distribution(descriptor):
    return _created(DistributionSerializer, descriptor)


# ============================================================================
# PCSM FUNCTIONS
# ============================================================================

class PieceSerializer(serializers.Serializer):
    form = serializers.ChoiceField(choices=sorted(PIECE_FORMS))
    slope = serializers.FloatField(required=False)
    intercept = serializers.FloatField(required=False, default=0.0)
    center = serializers.FloatField(required=False)
    scale = serializers.FloatField(required=False)
    offset = serializers.FloatField(required=False, default=0.0)
    increasing = serializers.BooleanField(required=False, default=True)
    numerator = serializers.FloatField(required=False)
    n = serializers.IntegerField(required=False, min_value=1)

    def validate(self, attrs):
        form = attrs['form']
        if form == 'linear' and not attrs.get('slope'):
            raise serializers.ValidationError("Linear piece needs a nonzero slope")
        if form == 'frac_square' and 'n' not in attrs:
            raise serializers.ValidationError("frac_square piece needs n")
        if form == 'reciprocal' and not attrs.get('numerator', 1.0):
            raise serializers.ValidationError("Reciprocal piece needs a nonzero numerator")
        return attrs

    def create(self, validated_data):
        form = validated_data['form']
        if form == 'linear':
            return PIECE_FORMS[form](validated_data['slope'], validated_data['intercept'])
        if form == 'abs':
            return PIECE_FORMS[form](validated_data.get('center', 0.0), validated_data.get('scale', 1.0),
                                     validated_data['offset'], validated_data['increasing'])
        if form == 'exp_quad':
            return PIECE_FORMS[form](validated_data.get('scale', 3.0), validated_data.get('center', 0.25),
                                     validated_data['increasing'])
        if form == 'reciprocal':
            return PIECE_FORMS[form](validated_data.get('numerator', 1.0), validated_data['offset'])
        return PIECE_FORMS[form](validated_data['n'])


class PcsmSerializer(serializers.Serializer):
    change_points = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)
    pieces = PieceSerializer(many=True, required=False)
    point_values = serializers.DictField(child=serializers.FloatField(), required=False)
    family = serializers.ChoiceField(choices=sorted(LAZY_FAMILIES), required=False)

    def validate(self, attrs):
        if 'family' in attrs:
            return attrs
        if 'change_points' not in attrs or 'pieces' not in attrs:
            raise serializers.ValidationError("pcsm descriptor needs change_points and pieces, or a family")
        if len(attrs['pieces']) != len(attrs['change_points']) - 1:
            raise serializers.ValidationError("One piece per interval between change points")
        return attrs

    def create(self, validated_data):
        if 'family' in validated_data:
            return LazyPcsmFunction(LAZY_FAMILIES[validated_data['family']]())
        pieces = [PieceSerializer().create(piece) for piece in validated_data['pieces']]
        point_values = {float(k): v for k, v in validated_data.get('point_values', {}).items()}
        return PcsmFunction(validated_data['change_points'], pieces, point_values)


def build_pcsm(descriptor):
    return _created(PcsmSerializer, descriptor)


# ============================================================================
# TRANSFORMS
# ============================================================================

class GeneratorSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=sorted(GENERATORS))
    kappa = serializers.FloatField(required=False, default=2.0, min_value=0.0)
    xi = serializers.FloatField(required=False, default=0.5, min_value=0.0)

    def create(self, validated_data):
        if validated_data['kind'] == 'exp_power':
            return ExpPowerGenerator(validated_data['kappa'], validated_data['xi'])
        return GENERATORS[validated_data['kind']]()


TRANSFORM_TYPES = ['generic', 'pssm', 'vtransform', 'inn', 'linear', 'reflection', 'named']


class TransformSerializer(serializers.Serializer):
    type = serializers.ChoiceField(choices=TRANSFORM_TYPES)
    base = serializers.DictField(required=False)
    T = serializers.DictField(required=False)
    t = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)
    r = serializers.ListField(child=serializers.IntegerField(min_value=0, max_value=1), required=False)
    delta = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    generator = GeneratorSerializer(required=False)
    theta = serializers.FloatField(required=False)
    deltas = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)
    slopes = serializers.ListField(child=serializers.FloatField(), required=False, min_length=1)
    intercepts = serializers.ListField(child=serializers.FloatField(), required=False, min_length=1)
    name = serializers.ChoiceField(choices=sorted(NAMED_TRANSFORMS), required=False)
    params = serializers.DictField(required=False)

    required_fields = {
        'generic': ['base', 'T'],
        'pssm': ['t', 'r'],
        'vtransform': ['delta'],
        'inn': ['theta'],
        'linear': ['deltas', 'slopes', 'intercepts'],
        'reflection': ['delta'],
        'named': ['name'],
    }

    def validate_theta(self, value):
        if value <= 0:
            raise serializers.ValidationError("theta must be positive")
        return value

    def validate(self, attrs):
        missing = [name for name in self.required_fields[attrs['type']] if name not in attrs]
        if missing:
            raise serializers.ValidationError(
                f"Transform type '{attrs['type']}' requires: {', '.join(missing)}"
            )
        if attrs['type'] == 'pssm' and len(attrs['r']) != len(attrs['t']) - 1:
            raise serializers.ValidationError("pssm needs len(r) == len(t) - 1")
        return attrs

    def create(self, validated_data):
        kind = validated_data['type']
        if kind == 'generic':
            base = build_distribution(validated_data['base'])
            T = build_pcsm(validated_data['T'])
            if T.lazy:
                tail = frac_square_tail if base.describe() == {'kind': 'pareto1', 'shape': 2.0} else None
                return build(base, T, tail=tail, max_pieces=64 if tail else None)
            return build_generalised(base, T)
        if kind == 'pssm':
            base = build_distribution(validated_data['base']) if 'base' in validated_data else None
            return PssmWTransform(validated_data['t'], validated_data['r'], base)
        if kind == 'vtransform':
            generator = validated_data.get('generator')
            return VTransform(validated_data['delta'],
                              GeneratorSerializer().create(generator) if generator else None)
        if kind == 'inn':
            return InnTransform(validated_data['theta'])
        if kind == 'linear':
            return PiecewiseLinearWTransform(validated_data['deltas'], validated_data['slopes'],
                                             validated_data['intercepts'])
        if kind == 'reflection':
            return reflection_transform(validated_data['delta'])
        try:
            return NAMED_TRANSFORMS[validated_data['name']](**validated_data.get('params', {}))
        except TypeError as e:
            raise serializers.ValidationError({'params': [str(e)]})


def build_transform(descriptor):
    return _created(TransformSerializer, descriptor)
