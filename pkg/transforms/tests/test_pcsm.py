import numpy as np
from django.test import SimpleTestCase

from transforms.dist import Uniform
from transforms.exceptions import ConstructionError, DomainError, PreconditionError, RangeError
from transforms.fixtures import (
    mixed_type_T, rotation, shuffle_T, shuffle_linear, tent, zigzag_T,
)
from transforms.pcsm import (
    FracSquareFamily, GenericPiece, LazyPcsmFunction, LinearPiece, PcsmFunction,
    compose, periodicity, validate,
)
from transforms.wtransform import build


class PcsmFunctionTestCase(SimpleTestCase):
    def test_right_endpoint_ownership(self):
        T = zigzag_T()
        self.assertEqual(T.piece_of(0.0), 1)
        self.assertEqual(T.piece_of(0.25), 1)
        self.assertEqual(T.piece_of(0.26), 2)
        self.assertEqual(T.piece_of(1.0), 4)

    def test_eval_outside_domain(self):
        with self.assertRaises(DomainError):
            shuffle_T().eval(1.2)

    def test_piece_inverse_outside_range(self):
        T = shuffle_T()
        with self.assertRaises(RangeError):
            T.piece_inverse(1, 0.5)
        self.assertAlmostEqual(T.piece_inverse(1, 0.8), 0.2)

    def test_clamped_inverse_conventions(self):
        T = shuffle_T()
        # decreasing piece, level below its range: whole interval lies above
        self.assertAlmostEqual(float(T.clamped_inverse(1, 0.5)), 1 / 3)
        # increasing piece, level above its range
        self.assertAlmostEqual(float(T.clamped_inverse(3, 0.5)), 1.0)

    def test_point_values(self):
        T = mixed_type_T(0.5)
        self.assertEqual(T.eval(0.0), 0.5)
        self.assertAlmostEqual(T.eval(-0.3), 0.3)
        self.assertAlmostEqual(T.eval(0.7), 0.7)

    def test_mismatched_pieces(self):
        with self.assertRaises(ConstructionError):
            PcsmFunction([0.0, 0.5, 1.0], [LinearPiece(1.0, 0.0)])
        with self.assertRaises(ConstructionError):
            PcsmFunction([0.0, 0.5, 0.4], [LinearPiece(1.0, 0.0), LinearPiece(1.0, 0.0)])


class ValidateTestCase(SimpleTestCase):
    def test_zigzag_directions(self):
        report = validate(zigzag_T())
        self.assertTrue(report.is_valid)
        self.assertEqual(report.directions, ['dec', 'inc', 'dec', 'dec'])

    def test_wrong_declared_direction(self):
        T = PcsmFunction([0.0, 1.0], [GenericPiece(lambda x: x, increasing=False)])
        report = validate(T)
        self.assertFalse(report.is_valid)
        self.assertIn('not decreasing', report.violations[0])

    def test_constant_plateau(self):
        T = PcsmFunction([0.0, 1.0], [GenericPiece(lambda x: np.minimum(x, 0.5), increasing=True)])
        report = validate(T)
        self.assertFalse(report.is_valid)


class LazyPcsmTestCase(SimpleTestCase):
    def setUp(self):
        self.T = LazyPcsmFunction(FracSquareFamily())

    def test_change_points(self):
        self.assertAlmostEqual(self.T.change_point(0), 1.0)
        self.assertAlmostEqual(self.T.change_point(3), 2.0)
        self.assertIsNone(self.T.n_pieces)

    def test_eval(self):
        self.assertEqual(self.T.piece_of(1.5), 2)
        self.assertAlmostEqual(self.T.eval(1.5), 0.25)
        np.testing.assert_allclose(self.T.eval(np.array([1.5, 2.0, 2.5])), [0.25, 1.0, 0.25], atol=1e-12)

    def test_validate_samples_leading_pieces(self):
        report = validate(self.T, lazy_pieces=8)
        self.assertTrue(report.is_valid)
        self.assertEqual(len(report.directions), 8)


class ComposeTestCase(SimpleTestCase):
    def test_tent_after_tent(self):
        composed = compose(tent(), tent())
        np.testing.assert_allclose(composed.change_points, [0.0, 0.25, 0.5, 0.75, 1.0], atol=1e-12)
        self.assertTrue(validate(composed).is_valid)
        u = np.array([0.1, 0.3, 0.45, 0.6, 0.9])
        np.testing.assert_allclose(composed.eval(u), tent().eval(tent().eval(u)), atol=1e-12)

    def test_composition_over_uniform_base(self):
        W = build(Uniform(0.0, 1.0), compose(tent(), tent()))
        u = np.array([0.1, 0.3, 0.6, 0.9])
        np.testing.assert_allclose(W.eval(u), tent().eval(tent().eval(u)), atol=1e-9)


class PeriodicityTestCase(SimpleTestCase):
    def test_shuffle_is_four_periodic(self):
        self.assertEqual(periodicity(shuffle_linear()), 4)

    def test_rotation_is_not_periodic(self):
        self.assertIsNone(periodicity(rotation(), p_max=64))

    def test_non_unit_slopes(self):
        with self.assertRaises(PreconditionError):
            periodicity(tent())
