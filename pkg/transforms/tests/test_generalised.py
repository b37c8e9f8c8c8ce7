import math

import numpy as np
from django.test import SimpleTestCase
from scipy import stats

from transforms.dist import Uniform
from transforms.fixtures import bernoulli_merge, bernoulli_swap, mixed_type, shuffle_T, three_atoms
from transforms.generalised import GenWTransform, build_generalised
from transforms.wtransform import WTransform

E = math.exp(-0.5)


def mixed_type_expected(u, alpha):
    """Five-branch closed form of the mixed-type transform."""
    u = np.asarray(u, dtype=float)
    b1 = 1.0 - math.exp(0.5 * (alpha - 1.0))
    b4 = 1.0 + E - math.exp(-0.5 * alpha)
    with np.errstate(divide='ignore'):
        return np.select(
            [u <= b1, u < 1.0 - E, u <= E, u <= b4],
            [
                1.0 + E - u - E / (1.0 - u),
                2.0 - E - u - E / (1.0 - u),
                u - math.exp(-0.5 * alpha) + math.exp(0.5 * (alpha - 1.0)),
                u - 2.0 * E + E / (1.0 + E - u),
            ],
            u + E / (1.0 + E - u) - 1.0,
        )


class BernoulliBaseTestCase(SimpleTestCase):
    def setUp(self):
        self.u = np.linspace(0.0, 1.0, 1001)
        self.p = 0.3

    def test_swap(self):
        W = bernoulli_swap(self.p)
        expected = np.where(self.u > 1 - self.p, self.u - 1 + self.p, self.u + self.p)
        np.testing.assert_allclose(W.eval(self.u), expected, atol=1e-12)

    def test_merge(self):
        W = bernoulli_merge(self.p)
        expected = np.where(self.u > 1 - self.p, (self.u - (1 - self.p)) / self.p, self.u / (1 - self.p))
        np.testing.assert_allclose(W.eval(self.u), expected, atol=1e-12)


class MixedTypeTestCase(SimpleTestCase):
    def test_five_branches(self):
        u = np.linspace(0.0, 1.0, 1001)
        for alpha in (0.5, 0.3):
            with self.subTest(alpha=alpha):
                np.testing.assert_allclose(mixed_type(alpha).eval(u), mixed_type_expected(u, alpha), atol=1e-12)

    def test_atom_interval(self):
        jumps = mixed_type(0.5).jump_intervals()
        self.assertEqual(len(jumps), 1)
        self.assertAlmostEqual(jumps[0].lower, 1 - E)
        self.assertAlmostEqual(jumps[0].upper, E)
        self.assertAlmostEqual(jumps[0].slope, 1.0)


class ThreeAtomsTestCase(SimpleTestCase):
    def setUp(self):
        self.W = three_atoms()

    def test_jump_slopes(self):
        jumps = self.W.jump_intervals()
        np.testing.assert_allclose([j.slope for j in jumps], [3.5, 1.0, 1.4])
        np.testing.assert_allclose([(j.lower, j.upper) for j in jumps], [(0.0, 0.2), (0.2, 0.5), (0.5, 1.0)])

    def test_eval(self):
        self.assertAlmostEqual(self.W.eval(0.1), 0.3 + 3.5 * 0.1)
        self.assertAlmostEqual(self.W.eval(0.4), 0.2)
        self.assertAlmostEqual(self.W.eval(0.75), 0.3 + 1.4 * 0.25)


class SampleTestCase(SimpleTestCase):
    def test_samples_are_uniform(self):
        n = 10 ** 4
        for seed, W in enumerate((bernoulli_swap(), bernoulli_merge(), mixed_type(), three_atoms())):
            with self.subTest(base=W.base.kind):
                values = W.sample(n, np.random.default_rng(seed))
                self.assertLess(stats.kstest(values, 'uniform').statistic, 3.0 / math.sqrt(n))


class DeferralTestCase(SimpleTestCase):
    def test_continuous_base_goes_through_build(self):
        W = build_generalised(Uniform(0.0, 1.0), shuffle_T())
        self.assertIsInstance(W, WTransform)
        self.assertNotIsInstance(W, GenWTransform)
