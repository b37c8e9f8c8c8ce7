import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import stats

from copulas.copula import (
    Box, Clayton, Gaussian, Gumbel, Independence, Khoudraji, Maltese, OrdinalSum, StudentT,
    SurvivalGumbel, khoudraji, rng_streams, volume,
)
from transforms.exceptions import ConstructionError, DomainError, PreconditionError


def families():
    return {
        'independence': Independence(),
        'clayton': Clayton(14 / 3),
        'gumbel': Gumbel(2.1383),
        'survival_gumbel': SurvivalGumbel(2.0),
        'gaussian': Gaussian(0.7),
        'student_t': StudentT(0.5, 4.0),
        'maltese': Maltese(),
        'ordinal_sum': OrdinalSum([0.0, 0.5, 1.0], [Gumbel(2.0), Clayton(1.0)]),
        'khoudraji': Khoudraji(Gumbel(2.5), (0.6, 0.9)),
    }


def grid(n):
    u = np.linspace(0.0, 1.0, n)
    a, b = np.meshgrid(u, u, indexing='ij')
    return np.column_stack([a.ravel(), b.ravel()])


def mixed_difference(C, u, h):
    u1, u2 = u
    corners = np.array([[u1 + h, u2 + h], [u1 + h, u2 - h], [u1 - h, u2 + h], [u1 - h, u2 - h]])
    c = C.cdf(corners)
    return (c[0] - c[1] - c[2] + c[3]) / (4 * h * h)


def first_difference(C, u, axis, h=1e-3):
    up, down = np.array(u, dtype=float), np.array(u, dtype=float)
    up[axis] += h
    down[axis] -= h
    return (C.cdf(up) - C.cdf(down)) / (2 * h)


class CopulaPropertiesTestCase(SimpleTestCase):
    def test_grounded_with_uniform_margins(self):
        u = np.linspace(0.0, 1.0, 11)
        zeros, ones = np.zeros_like(u), np.ones_like(u)
        for name, C in families().items():
            with self.subTest(family=name):
                np.testing.assert_allclose(C.cdf(np.column_stack([u, zeros])), 0.0, atol=1e-9)
                np.testing.assert_allclose(C.cdf(np.column_stack([zeros, u])), 0.0, atol=1e-9)
                np.testing.assert_allclose(C.cdf(np.column_stack([u, ones])), u, atol=1e-9)
                np.testing.assert_allclose(C.cdf(np.column_stack([ones, u])), u, atol=1e-9)

    def test_frechet_bounds(self):
        pts = grid(21)
        lower = np.maximum(pts.sum(axis=1) - 1.0, 0.0)
        upper = pts.min(axis=1)
        for name, C in families().items():
            with self.subTest(family=name):
                values = C.cdf(pts)
                self.assertTrue(np.all(values >= lower - 1e-9))
                self.assertTrue(np.all(values <= upper + 1e-9))

    def test_two_increasing(self):
        rng = np.random.default_rng(7)
        a = rng.random((200, 2))
        b = np.minimum(a + (1.0 - a) * rng.random((200, 2)), 1.0)
        for name, C in families().items():
            with self.subTest(family=name):
                self.assertTrue(np.all(volume(C, Box(a, b)) >= -1e-9))

    def test_lipschitz(self):
        rng = np.random.default_rng(8)
        u, v = rng.random((200, 2)), rng.random((200, 2))
        for name, C in families().items():
            with self.subTest(family=name):
                gap = np.abs(C.cdf(u) - C.cdf(v))
                self.assertTrue(np.all(gap <= np.abs(u - v).sum(axis=1) + 1e-9))

    def test_argument_checks(self):
        C = Clayton(2.0)
        with self.assertRaises(DomainError):
            C.cdf([0.5, 1.2])
        with self.assertRaises(DomainError):
            C.cdf([0.5, 0.5, 0.5])
        with self.assertRaises(DomainError):
            Box([0.6, 0.1], [0.5, 0.2])


class ValuesTestCase(SimpleTestCase):
    def test_independence(self):
        self.assertAlmostEqual(Independence().cdf([0.3, 0.4]), 0.12)
        self.assertAlmostEqual(Independence().volume(Box([0.2, 0.5], [0.5, 0.8])), 0.09)
        self.assertAlmostEqual(Independence(3).cdf([0.5, 0.5, 0.5]), 0.125)

    def test_maltese(self):
        C = Maltese()
        self.assertAlmostEqual(C.cdf([1 / 3, 1 / 2]), 1 / 9)
        self.assertAlmostEqual(C.cdf([1 / 2, 1 / 3]), 1 / 18)
        self.assertFalse(C.exchangeable)
        self.assertAlmostEqual(C.volume(Box([0.0, 0.0], [0.25, 0.75])), 0.0)
        self.assertAlmostEqual(C.volume(Box([0.25, 0.75], [1.0, 1.0])), 1 / 6)

    def test_ordinal_sum_blocks(self):
        C = OrdinalSum([0.0, 0.5, 1.0], [Gumbel(2.0), Clayton(1.0)])
        self.assertAlmostEqual(C.cdf([0.25, 0.75]), 0.25)
        self.assertAlmostEqual(C.cdf([0.5, 0.5]), 0.5)
        self.assertEqual(C.density([0.25, 0.75]), 0.0)

    def test_ordinal_sum_checks(self):
        with self.assertRaises(ConstructionError):
            OrdinalSum([0.0, 0.6, 0.5, 1.0], [Clayton(1.0)] * 3)
        with self.assertRaises(ConstructionError):
            OrdinalSum([0.0, 0.5, 1.0], [Clayton(1.0)])

    def test_orthant_probability(self):
        # C(1/2, 1/2) = 1/4 + asin(rho)/(2 pi) for every elliptical copula
        for C in (Gaussian(0.7), Gaussian(-0.3), StudentT(0.5, 4.0), StudentT(0.0, 1.0)):
            with self.subTest(C=repr(C)):
                self.assertAlmostEqual(C.cdf([0.5, 0.5]), 0.25 + math.asin(C.rho) / (2 * math.pi), places=8)

    def test_gaussian_matches_bivariate_normal(self):
        rho = 0.7
        rng = np.random.default_rng(3)
        pts = 0.02 + 0.96 * rng.random((20, 2))
        mvn = stats.multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, rho], [rho, 1.0]])
        expected = mvn.cdf(stats.norm.ppf(pts))
        np.testing.assert_allclose(Gaussian(rho).cdf(pts), expected, atol=1e-5)

    def test_clayton_dimension_reduction(self):
        C3, C2 = Clayton(2.0, 3), Clayton(2.0)
        self.assertAlmostEqual(C3.cdf([0.3, 0.6, 1.0]), C2.cdf([0.3, 0.6]), places=12)

    def test_kendall_tau_parameters(self):
        self.assertAlmostEqual(Clayton.from_kendall_tau(0.7).theta, 14 / 3)
        self.assertAlmostEqual(Gumbel.from_kendall_tau(0.5).theta, 2.0)
        self.assertAlmostEqual(Gumbel(2.1383).kendall_tau, 1 - 1 / 2.1383)

    def test_parameter_checks(self):
        with self.assertRaises(ConstructionError):
            Clayton(0.0)
        with self.assertRaises(ConstructionError):
            Gumbel(0.5)
        with self.assertRaises(ConstructionError):
            Gaussian(1.0)
        with self.assertRaises(ConstructionError):
            Khoudraji(Gumbel(2.0), (1.2, 0.5))


class DensityTestCase(SimpleTestCase):
    def test_closed_forms(self):
        self.assertEqual(Independence().density([0.3, 0.8]), 1.0)
        self.assertAlmostEqual(Gaussian(0.7).density([0.5, 0.5]), 1 / math.sqrt(1 - 0.49))
        self.assertAlmostEqual(Maltese().density([0.5, 0.5]), 4 / 3)
        self.assertAlmostEqual(Maltese().density([0.9, 0.1]), 4.0)

    def test_against_mixed_differences(self):
        cases = [
            (Clayton(2.0), 1e-4, 1e-3),
            (Gumbel(2.1383), 1e-4, 1e-3),
            (SurvivalGumbel(2.0), 1e-4, 1e-3),
            (Khoudraji(Gumbel(2.5), (0.6, 0.9)), 1e-4, 1e-3),
            (Gaussian(0.5), 1e-2, 1e-2),
            (StudentT(0.5, 4.0), 1e-2, 1e-2),
        ]
        for C, h, rtol in cases:
            for u in ([0.3, 0.7], [0.4, 0.6], [0.65, 0.55]):
                with self.subTest(C=repr(C), u=u):
                    self.assertAlmostEqual(C.density(u) / mixed_difference(C, u, h), 1.0, delta=rtol)


class ConditionalTestCase(SimpleTestCase):
    def test_independence(self):
        u2 = np.linspace(0.0, 1.0, 5)
        np.testing.assert_allclose(Independence().conditional(u2, 0.3), u2)

    def test_gumbel_against_difference(self):
        C = Gumbel(2.1383)
        self.assertAlmostEqual(C.conditional(0.5, 0.5), first_difference(C, [0.5, 0.5], 0), delta=1e-4)

    def test_partials_against_differences(self):
        cases = [
            Clayton(14 / 3), Gumbel(2.1383), SurvivalGumbel(2.0), Gaussian(0.7), StudentT(0.5, 4.0),
            OrdinalSum([0.0, 0.5, 1.0], [Gumbel(2.0), Clayton(1.0)]),
            Khoudraji(Gumbel(2.5), (0.6, 0.9)),
        ]
        for C in cases:
            for u in ([0.3, 0.7], [0.2, 0.4], [0.6, 0.8]):
                for axis in (0, 1):
                    with self.subTest(C=repr(C), u=u, axis=axis):
                        self.assertAlmostEqual(C.partial(u, axis=axis), first_difference(C, u, axis), delta=1e-4)

    def test_maltese_partials(self):
        C = Maltese()
        for u in ([0.3, 0.6], [0.9, 0.1], [0.5, 0.9], [0.2, 0.1], [0.9, 0.6]):
            for axis in (0, 1):
                with self.subTest(u=u, axis=axis):
                    self.assertAlmostEqual(C.partial(u, axis=axis), first_difference(C, u, axis), delta=1e-6)

    def test_nondecreasing_in_u2(self):
        u2 = np.linspace(0.0, 1.0, 41)
        for name, C in families().items():
            with self.subTest(family=name):
                values = C.conditional(u2, 0.37)
                self.assertTrue(np.all(np.diff(values) >= -1e-9))

    def test_three_dimensional_partial(self):
        with self.assertRaises(PreconditionError):
            Clayton(2.0, 3).partial([0.5, 0.5, 0.5])


class KhoudrajiTestCase(SimpleTestCase):
    def test_reductions(self):
        base = Gumbel(2.0)
        self.assertIs(khoudraji(base, (1.0, 1.0)), base)
        self.assertIsInstance(khoudraji(base, (0.0, 0.0)), Independence)

    def test_cdf(self):
        C = Khoudraji(Gumbel(2.5), (0.6, 0.9))
        u1, u2 = 0.3, 0.7
        expected = u1 ** 0.4 * u2 ** 0.1 * Gumbel(2.5).cdf([u1 ** 0.6, u2 ** 0.9])
        self.assertAlmostEqual(C.cdf([u1, u2]), expected, places=12)

    def test_asymmetric(self):
        C = Khoudraji(Gumbel(2.5), (0.6, 0.9))
        self.assertFalse(C.exchangeable)
        self.assertGreater(abs(C.cdf([0.3, 0.7]) - C.cdf([0.7, 0.3])), 1e-3)


class SamplingTestCase(SimpleTestCase):
    def test_uniform_margins(self):
        n = 5000
        for i, (name, C) in enumerate(families().items()):
            U = C.sample(n, np.random.default_rng(100 + i))
            for j in range(2):
                with self.subTest(family=name, margin=j):
                    self.assertLess(stats.kstest(U[:, j], 'uniform').statistic, 2.0 / math.sqrt(n))

    def test_empirical_cdf(self):
        n = 20000
        pts = grid(5)[1:-1]
        for i, (name, C) in enumerate(families().items()):
            U = C.sample(n, np.random.default_rng(200 + i))
            empirical = np.array([np.mean(np.all(U <= p, axis=1)) for p in pts])
            with self.subTest(family=name):
                np.testing.assert_allclose(empirical, C.cdf(pts), atol=3.0 / math.sqrt(n))

    def test_clayton_kendall_tau(self):
        U = Clayton.from_kendall_tau(0.7).sample(5000, np.random.default_rng(1))
        self.assertAlmostEqual(stats.kendalltau(U[:, 0], U[:, 1]).statistic, 0.7, delta=0.02)

    def test_ordinal_sum_stays_in_blocks(self):
        C = OrdinalSum([0.0, 0.5, 1.0], [SurvivalGumbel(2.0), SurvivalGumbel(2.0)])
        U = C.sample(2000, np.random.default_rng(2))
        np.testing.assert_array_equal(U[:, 0] > 0.5, U[:, 1] > 0.5)

    def test_rng_streams(self):
        first, second = rng_streams(42, 3), rng_streams(42, 3)
        self.assertEqual(len(first), 3)
        self.assertEqual(first[1].random(), second[1].random())
        self.assertNotEqual(first[0].random(), first[2].random())

    @tag('slow')
    def test_box_mass(self):
        n = 200000
        rng = np.random.default_rng(11)
        a = 0.8 * rng.random((20, 2))
        b = np.minimum(a + 0.2 + (0.8 - a) * rng.random((20, 2)), 1.0)
        for i, (name, C) in enumerate(families().items()):
            U = C.sample(n, np.random.default_rng(300 + i))
            mass = np.array([np.mean(np.all((U > lo) & (U <= hi), axis=1)) for lo, hi in zip(a, b)])
            with self.subTest(family=name):
                np.testing.assert_allclose(mass, volume(C, Box(a, b)), atol=3.0 / math.sqrt(n))


class TailTestCase(SimpleTestCase):
    def test_closed_forms(self):
        self.assertAlmostEqual(Clayton(1.0).lower_tail(), 0.5)
        self.assertAlmostEqual(Gumbel(2.0).upper_tail(), 2 - math.sqrt(2))
        self.assertAlmostEqual(SurvivalGumbel(2.0).lower_tail(), 2 - math.sqrt(2))
        self.assertAlmostEqual(StudentT(0.0, 1.0).upper_tail(), 1 - math.sqrt(2) / 2, places=10)
        self.assertAlmostEqual(StudentT(0.0, 1.0).corner_tail(), 1 - math.sqrt(2) / 2, places=10)
        self.assertEqual(Gaussian(0.9).upper_tail(), 0.0)

    def test_ordinal_sum_tails(self):
        C = OrdinalSum([0.0, 0.5, 1.0], [Clayton(1.0), Gumbel(2.0)])
        self.assertAlmostEqual(C.lower_tail(), 0.5)
        self.assertAlmostEqual(C.upper_tail(), 2 - math.sqrt(2))
