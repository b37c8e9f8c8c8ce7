import math

import numpy as np
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError
from scipy.special import digamma

from transforms.generalised import GenWTransform
from transforms.serializers import build_distribution, build_pcsm, build_transform
from transforms.wtransform import PssmWTransform, VTransform


class DistributionDescriptorTestCase(SimpleTestCase):
    def test_pareto(self):
        F = build_distribution({'kind': 'pareto1', 'shape': 2})
        self.assertAlmostEqual(F.cdf(2.0), 0.75)

    def test_missing_parameter(self):
        with self.assertRaises(ValidationError):
            build_distribution({'kind': 'pareto1'})

    def test_unknown_kind(self):
        with self.assertRaises(ValidationError):
            build_distribution({'kind': 'cauchy'})

    def test_construction_error_is_reported(self):
        with self.assertRaises(ValidationError):
            build_distribution({'kind': 'discrete', 'locations': [0, 1], 'masses': [0.5, 0.2]})


class PcsmDescriptorTestCase(SimpleTestCase):
    def test_pieces(self):
        T = build_pcsm({
            'change_points': [-1, 0, 1],
            'pieces': [{'form': 'linear', 'slope': -1}, {'form': 'linear', 'slope': 1}],
            'point_values': {'0.0': 0.5},
        })
        self.assertEqual(T.eval(0.0), 0.5)
        self.assertAlmostEqual(T.eval(-0.25), 0.25)

    def test_piece_count_mismatch(self):
        with self.assertRaises(ValidationError):
            build_pcsm({'change_points': [0, 0.5, 1], 'pieces': [{'form': 'linear', 'slope': 1}]})


class TransformDescriptorTestCase(SimpleTestCase):
    def test_pssm(self):
        W = build_transform({
            'type': 'pssm', 't': [0, 0.5, 1], 'r': [0, 1],
            'base': {'kind': 'power', 'exponent': 2},
        })
        self.assertIsInstance(W, PssmWTransform)
        self.assertAlmostEqual(W.eval(0.1), 1 - 2 * math.sqrt(0.1), places=12)

    def test_pssm_needs_directions(self):
        with self.assertRaises(ValidationError):
            build_transform({'type': 'pssm', 't': [0, 0.5, 1]})

    def test_generic_finite(self):
        W = build_transform({
            'type': 'generic',
            'base': {'kind': 'uniform'},
            'T': {
                'change_points': [0, 1 / 3, 2 / 3, 1],
                'pieces': [
                    {'form': 'linear', 'slope': -1, 'intercept': 1},
                    {'form': 'linear', 'slope': 1},
                    {'form': 'linear', 'slope': 1, 'intercept': -2 / 3},
                ],
            },
        })
        np.testing.assert_allclose(W.eval([0.1, 0.5, 0.9]), [0.9, 0.5, 0.9 - 2 / 3], atol=1e-12)

    def test_generic_atomic_base(self):
        W = build_transform({
            'type': 'generic',
            'base': {'kind': 'bernoulli', 'p': 0.3},
            'T': {'change_points': [0, 1], 'pieces': [{'form': 'linear', 'slope': -1, 'intercept': 1}]},
        })
        self.assertIsInstance(W, GenWTransform)
        self.assertAlmostEqual(W.eval(0.2), 0.5)

    def test_generic_countable(self):
        W = build_transform({'type': 'generic', 'base': {'kind': 'pareto1', 'shape': 2},
                             'T': {'family': 'frac_square'}})
        self.assertAlmostEqual(W.eval(0.85), digamma(5 / 3) - digamma(1.0), places=10)

    def test_vtransform_with_generator(self):
        W = build_transform({'type': 'vtransform', 'delta': 0.25, 'generator': {'kind': 'sqrt_mix'}})
        self.assertIsInstance(W, VTransform)
        self.assertAlmostEqual(W.eval(0.1), 1 - 2 * math.sqrt(0.1), places=10)

    def test_named(self):
        self.assertAlmostEqual(build_transform({'type': 'named', 'name': 'tent'}).eval(0.25), 0.5)
        W = build_transform({'type': 'named', 'name': 'theta_linear', 'params': {'theta': 0.4}})
        self.assertAlmostEqual(W.eval(0.2), 0.25)

    def test_named_bad_params(self):
        with self.assertRaises(ValidationError):
            build_transform({'type': 'named', 'name': 'tent', 'params': {'width': 2}})

    def test_not_uniformity_preserving(self):
        with self.assertRaises(ValidationError):
            build_transform({'type': 'linear', 'deltas': [0, 0.5, 1], 'slopes': [1, 1], 'intercepts': [0, -0.5]})

    def test_inn_theta_positive(self):
        with self.assertRaises(ValidationError):
            build_transform({'type': 'inn', 'theta': -1})
