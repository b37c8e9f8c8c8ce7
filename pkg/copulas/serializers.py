"""
JSON descriptors for copulas and W-transformed copula models

  {"family": "clayton", "tau": 0.7}
  {"family": "ordinal_sum", "breaks": [0, 0.5, 1], "components": [{...}, {...}]}
  {"base": {...}, "margins": [{...}, {...}]}
  {"name": "wos", "params": {"theta": 20}}
"""

from rest_framework import serializers

from transforms.exceptions import WTransformError
from transforms.serializers import build_transform

from .copula import (
    COPULA_FAMILIES, Clayton, Gaussian, Gumbel, Independence, Maltese, OrdinalSum, StudentT,
    SurvivalGumbel, khoudraji,
)
from .fixtures import NAMED_MODELS
from .wcopula import make_model


def _created(serializer_class, data):
    serializer = serializer_class(data=data)
    serializer.is_valid(raise_exception=True)
    try:
        return serializer.save()
    except WTransformError as e:
        raise serializers.ValidationError({'non_field_errors': [str(e)]})


class CopulaSerializer(serializers.Serializer):
    family = serializers.ChoiceField(choices=sorted(COPULA_FAMILIES))
    dim = serializers.IntegerField(required=False, default=2, min_value=2)
    theta = serializers.FloatField(required=False)
    tau = serializers.FloatField(required=False, min_value=0.0, max_value=1.0)
    rho = serializers.FloatField(required=False, min_value=-1.0, max_value=1.0)
    nu = serializers.FloatField(required=False, min_value=0.0)
    breaks = serializers.ListField(child=serializers.FloatField(), required=False, min_length=2)
    components = serializers.ListField(child=serializers.DictField(), required=False)
    base = serializers.DictField(required=False)
    shapes = serializers.ListField(child=serializers.FloatField(min_value=0.0, max_value=1.0),
                                   required=False, min_length=2, max_length=2)

    def validate(self, attrs):
        family = attrs['family']
        if family in ('clayton', 'gumbel', 'survival_gumbel') and 'theta' not in attrs and 'tau' not in attrs:
            raise serializers.ValidationError(f"Family '{family}' requires theta or tau")
        if family in ('gaussian', 'student_t') and 'rho' not in attrs:
            raise serializers.ValidationError(f"Family '{family}' requires rho")
        if family == 'ordinal_sum':
            if 'breaks' not in attrs or 'components' not in attrs:
                raise serializers.ValidationError("Ordinal sums require breaks and components")
            if len(attrs['components']) != len(attrs['breaks']) - 1:
                raise serializers.ValidationError("Ordinal sums need one component per block")
        if family == 'khoudraji' and ('base' not in attrs or 'shapes' not in attrs):
            raise serializers.ValidationError("Khoudraji composites require base and shapes")
        return attrs

    def create(self, validated_data):
        family = validated_data['family']
        dim = validated_data['dim']
        if family == 'independence':
            return Independence(dim)
        if family in ('clayton', 'gumbel', 'survival_gumbel'):
            cls = {'clayton': Clayton, 'gumbel': Gumbel, 'survival_gumbel': SurvivalGumbel}[family]
            if 'theta' in validated_data:
                return cls(validated_data['theta'], dim)
            return cls.from_kendall_tau(validated_data['tau'], dim)
        if family == 'gaussian':
            return Gaussian(validated_data['rho'])
        if family == 'student_t':
            return StudentT(validated_data['rho'], validated_data.get('nu'))
        if family == 'maltese':
            return Maltese()
        if family == 'ordinal_sum':
            components = [build_copula(c) for c in validated_data['components']]
            return OrdinalSum(validated_data['breaks'], components)
        return khoudraji(build_copula(validated_data['base']), validated_data['shapes'])


def build_copula(descriptor):
    return _created(CopulaSerializer, descriptor)


class ModelSerializer(serializers.Serializer):
    base = serializers.DictField(required=False)
    margins = serializers.ListField(child=serializers.DictField(), required=False, min_length=1)
    name = serializers.ChoiceField(choices=sorted(NAMED_MODELS), required=False)
    params = serializers.DictField(required=False)

    def validate(self, attrs):
        if 'name' not in attrs and 'base' not in attrs:
            raise serializers.ValidationError("A model needs a base copula or a name")
        return attrs

    def create(self, validated_data):
        if 'name' in validated_data:
            try:
                return NAMED_MODELS[validated_data['name']](**validated_data.get('params', {}))
            except TypeError as e:
                raise serializers.ValidationError({'params': [str(e)]})
        base = build_copula(validated_data['base'])
        if 'margins' not in validated_data:
            return base
        margins = [build_transform(m) for m in validated_data['margins']]
        if len(margins) == 1:
            margins = margins * base.dim
        return make_model(base, margins)


def build_model(descriptor):
    """A copula or W-transformed copula from its descriptor; a bare copula descriptor is accepted too."""
    if isinstance(descriptor, dict) and 'family' in descriptor:
        return build_copula(descriptor)
    return _created(ModelSerializer, descriptor)
