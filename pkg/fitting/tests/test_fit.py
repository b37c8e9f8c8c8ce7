import math

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import optimize

from copulas.copula import Clayton, Gumbel, Khoudraji
from copulas.fixtures import wos
from fitting.fit import (
    FitResult, PseudoSample, _build_wos, fit_gumbel_mple, fit_khoudraji_gumbel, fit_wos, khoudraji_coordinates,
    khoudraji_params, loglik, lr_test, pseudo_obs, wos_coordinates, wos_params,
)
from transforms.exceptions import FitError, PreconditionError


def sample_pseudo(model, n, seed):
    return pseudo_obs(model.sample(n, np.random.default_rng(seed)))


class PseudoObsTestCase(SimpleTestCase):
    def test_ranks_over_n_plus_one(self):
        P = pseudo_obs([[3.0], [1.0], [2.0]])
        np.testing.assert_allclose(P.values[:, 0], [0.75, 0.25, 0.5])
        self.assertEqual(P.tied_columns, [])

    def test_ties_get_average_rank(self):
        P = pseudo_obs([[1.0, 5.0], [1.0, 3.0], [2.0, 4.0]])
        np.testing.assert_allclose(P.values[:, 0], [0.375, 0.375, 0.75])
        self.assertEqual(P.tied_columns, [0])

    def test_uniform_column_maps_to_order_statistics(self):
        x = np.random.default_rng(1).random(50)
        P = pseudo_obs(np.column_stack([x, x[::-1]]))
        np.testing.assert_allclose(np.sort(P.values[:, 0]), np.arange(1, 51) / 51)

    def test_preconditions(self):
        with self.assertRaises(PreconditionError):
            pseudo_obs([[1.0, 2.0]])
        with self.assertRaises(PreconditionError):
            pseudo_obs([[1.0, 2.0], [1.0, 3.0], [1.0, 4.0]])
        with self.assertRaises(PreconditionError):
            pseudo_obs([[1.0, np.nan], [2.0, 3.0]])

    def test_swap(self):
        P = pseudo_obs([[3.0, 10.0], [1.0, 30.0], [2.0, 20.0]])
        np.testing.assert_allclose(P.swapped().values, P.values[:, ::-1])


class GumbelFitTestCase(SimpleTestCase):
    def test_recovers_theta(self):
        result = fit_gumbel_mple(sample_pseudo(Gumbel(3.0), 5000, 31))
        self.assertGreaterEqual(result.params['theta'], 2.8)
        self.assertLessEqual(result.params['theta'], 3.2)
        self.assertFalse(result.boundary)
        self.assertTrue(math.isfinite(result.loglik))

    def test_negative_dependence_hits_the_boundary(self):
        U = Clayton(2.0).sample(2000, np.random.default_rng(32))
        U[:, 1] = 1.0 - U[:, 1]
        result = fit_gumbel_mple(pseudo_obs(U))
        self.assertTrue(result.boundary)
        self.assertLess(result.params['theta'], 1.001)

    def test_needs_two_columns(self):
        with self.assertRaises(PreconditionError):
            fit_gumbel_mple(np.random.default_rng(33).random((20, 3)))

    def test_matches_unconstrained_coordinates(self):
        P = sample_pseudo(Gumbel(2.0), 800, 34)
        bounded = fit_gumbel_mple(P)
        res = optimize.minimize(lambda x: -loglik(Gumbel(1.0 + math.exp(x[0])), P), [0.0],
                                method='Nelder-Mead', options={'xatol': 1e-10, 'fatol': 1e-12})
        self.assertAlmostEqual(bounded.loglik, -res.fun, delta=1e-6)


class WosFitTestCase(SimpleTestCase):
    def test_coordinates_round_trip(self):
        params = wos_params(wos_coordinates(2.5, 2.0, 15.0))
        self.assertAlmostEqual(params['alpha1'], 2.5)
        self.assertAlmostEqual(params['alpha2'], 2.0)
        self.assertAlmostEqual(params['theta'], 15.0)
        P = sample_pseudo(wos(), 300, 35)
        self.assertAlmostEqual(loglik(_build_wos(wos_coordinates(2.5, 2.0, 15.0)), P),
                               loglik(wos(2.5, 2.0, 15.0), P), delta=1e-6)

    def test_small_theta_nests_gumbel(self):
        P = sample_pseudo(Gumbel(2.0), 659, 36)
        for alpha in (1.5, 2.0, 3.0):
            with self.subTest(alpha=alpha):
                self.assertAlmostEqual(loglik(wos(alpha, alpha, 1e-6), P), loglik(Gumbel(alpha), P), delta=0.5)

    def test_objective_increases_along_the_trace(self):
        P = sample_pseudo(wos(), 300, 37)
        result = fit_wos(P, restarts=2, seed=3)
        self.assertGreater(len(result.trace), 1)
        self.assertTrue(np.all(np.diff(result.trace) >= -1e-9))
        self.assertAlmostEqual(result.trace[-1], result.loglik, delta=1e-9)
        self.assertEqual(len(result.restarts), 2)

    def test_fit_beats_the_generating_parameters(self):
        P = sample_pseudo(wos(), 400, 38)
        result = fit_wos(P, restarts=3, seed=4)
        self.assertGreaterEqual(result.loglik, loglik(wos(), P) - 1e-3)
        self.assertEqual(set(result.params), {'alpha1', 'alpha2', 'theta'})

    def test_same_seed_same_fit(self):
        P = sample_pseudo(wos(), 200, 39)
        first = fit_wos(P, restarts=2, seed=5)
        second = fit_wos(P, restarts=2, seed=5, threads=2)
        np.testing.assert_array_equal(first.x, second.x)

    @tag('slow')
    def test_recovers_parameters(self):
        P = sample_pseudo(wos(), 5000, 40)
        result = fit_wos(P, seed=6)
        self.assertAlmostEqual(result.params['alpha1'] / 2.8437, 1.0, delta=0.15)
        self.assertAlmostEqual(result.params['alpha2'] / 2.0412, 1.0, delta=0.15)
        self.assertAlmostEqual(result.params['theta'] / 21.2635, 1.0, delta=0.5)


class KhoudrajiFitTestCase(SimpleTestCase):
    def test_coordinates_round_trip(self):
        params = khoudraji_params(khoudraji_coordinates(3.0, 0.6, 0.9))
        self.assertAlmostEqual(params['theta'], 3.0)
        self.assertAlmostEqual(params['s1'], 0.6)
        self.assertAlmostEqual(params['s2'], 0.9)

    def test_unit_shapes_reduce_to_gumbel(self):
        P = sample_pseudo(Gumbel(2.5), 600, 41)
        gumbel = fit_gumbel_mple(P)
        fixed = fit_khoudraji_gumbel(P, shapes=(1.0, 1.0))
        self.assertAlmostEqual(fixed.params['theta'], gumbel.params['theta'], delta=1e-6)
        self.assertAlmostEqual(fixed.loglik, gumbel.loglik, delta=1e-6)

    def test_fit_beats_the_generating_parameters(self):
        true = Khoudraji(Gumbel(3.0), (0.6, 0.9))
        P = sample_pseudo(true, 1000, 42)
        result = fit_khoudraji_gumbel(P, restarts=3, seed=7)
        self.assertGreaterEqual(result.loglik, loglik(true, P) - 1e-3)
        self.assertTrue(0.0 < result.params['s1'] < 1.0)
        self.assertGreater(result.params['theta'], 1.0)


class LikelihoodRatioTestCase(SimpleTestCase):
    def test_published_logliks(self):
        result = lr_test(284.319, 278.148, df=2)
        self.assertAlmostEqual(result.statistic, 12.342, places=6)
        self.assertAlmostEqual(result.p_value, 0.0021, delta=5e-5)

    def test_chi_square_quantile(self):
        self.assertAlmostEqual(lr_test(5.991 / 2, 0.0, df=2).p_value, 0.05, delta=1e-4)

    def test_identical_logliks(self):
        self.assertEqual(lr_test(100.0, 100.0, df=1).p_value, 1.0)
        self.assertEqual(lr_test(100.0, 100.0 + 1e-9, df=1).statistic, 0.0)

    def test_negative_statistic(self):
        with self.assertRaises(FitError):
            lr_test(270.0, 278.0, df=2)

    def test_fit_results(self):
        nested = FitResult('gumbel', Gumbel(2.0), {'theta': 2.0}, np.array([2.0]), 278.148)
        full = FitResult('wos', wos(), {'alpha1': 2.8437, 'alpha2': 2.0412, 'theta': 21.2635},
                         np.zeros(3), 284.319)
        self.assertAlmostEqual(lr_test(full, nested, full.n_params - nested.n_params).p_value, 0.0021, delta=5e-5)

    def test_pseudo_sample_shape(self):
        P = PseudoSample(np.full((4, 2), 0.5))
        self.assertEqual((P.n, P.dim), (4, 2))
