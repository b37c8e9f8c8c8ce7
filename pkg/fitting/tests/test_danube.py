from pathlib import Path
import tempfile
import unittest

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, override_settings, tag

from fitting.danube import (
    DANUBE_SIZE, PUBLISHED, danube_path, danube_sample, danube_standin, file_sha256, load_danube,
    reproduce_danube,
)
from transforms.exceptions import PreconditionError


class StandinTestCase(SimpleTestCase):
    def test_shape_and_ranks(self):
        P = danube_standin()
        self.assertEqual(P.values.shape, (DANUBE_SIZE, 2))
        for j in range(2):
            np.testing.assert_allclose(np.sort(P.values[:, j]), np.arange(1, DANUBE_SIZE + 1) / (DANUBE_SIZE + 1))
        self.assertTrue(P.source.startswith('stand-in'))

    def test_deterministic(self):
        np.testing.assert_array_equal(danube_standin(5).values, danube_standin(5).values)

    def test_midpoint_rank_is_one_half(self):
        # rank 330 of 659 lands on the change point of both margins
        self.assertIn(0.5, danube_standin().values[:, 0])


class LoadDanubeTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'danube.csv'
        rng = np.random.default_rng(71)
        self.frame = pd.DataFrame({'inn': rng.random(40), 'donau': rng.random(40), 'label': ['x'] * 40})
        self.frame.to_csv(self.path, index=False)

    def tearDown(self):
        self.tmp.cleanup()

    def test_reads_two_numeric_columns(self):
        P = load_danube(self.path, sha256='')
        self.assertEqual(P.values.shape, (40, 2))
        self.assertEqual(P.source, str(self.path))

    def test_swap(self):
        plain = load_danube(self.path, sha256='')
        swapped = load_danube(self.path, swap=True, sha256='')
        np.testing.assert_array_equal(swapped.values, plain.values[:, ::-1])

    def test_checksum(self):
        digest = file_sha256(self.path)
        self.assertEqual(load_danube(self.path, sha256=digest.upper()).n, 40)
        with self.assertRaises(PreconditionError):
            load_danube(self.path, sha256='0' * 64)

    def test_checksum_from_settings(self):
        with override_settings(WTRANS_DANUBE_SHA256='f' * 64):
            with self.assertRaises(PreconditionError):
                load_danube(self.path)

    def test_missing_file(self):
        with self.assertRaises(PreconditionError):
            load_danube(Path(self.tmp.name) / 'absent.csv')

    def test_single_column(self):
        self.frame[['inn']].to_csv(self.path, index=False)
        with self.assertRaises(PreconditionError):
            load_danube(self.path, sha256='')

    def test_fallback_to_standin(self):
        with override_settings(WTRANS_DATA_DIR=Path(self.tmp.name) / 'empty'):
            P = danube_sample()
        self.assertTrue(P.source.startswith('stand-in'))
        with override_settings(WTRANS_DATA_DIR=Path(self.tmp.name), WTRANS_DANUBE_SHA256=''):
            self.assertEqual(danube_sample().n, 40)


class ReproduceTestCase(SimpleTestCase):
    @tag('slow')
    def test_standin_report(self):
        report = reproduce_danube(danube_standin(), replicates=100, seed=1)
        self.assertTrue(report.standin)
        quantities = {row['quantity'] for row in report.rows}
        self.assertTrue(set(PUBLISHED) <= quantities)
        self.assertGreaterEqual(report.value('wos_loglik'), report.value('gumbel_loglik'))
        self.assertAlmostEqual(report.value('lr_statistic'),
                               2 * (report.value('wos_loglik') - report.value('gumbel_loglik')), places=9)
        self.assertEqual(len(report.qq), DANUBE_SIZE)
        self.assertEqual(set(report.fits), {'gumbel', 'wos', 'khoudraji'})


@tag('slow')
@unittest.skipUnless(danube_path().exists(), 'Danube data file not found in WTRANS_DATA_DIR')
class DanubeDataTestCase(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.report = reproduce_danube(load_danube(), replicates=1000, seed=1)

    def test_gumbel(self):
        self.assertAlmostEqual(self.report.value('gumbel_theta'), 2.1383, delta=0.01)
        self.assertAlmostEqual(self.report.value('gumbel_loglik'), 278.148, delta=0.5)

    def test_ordinal_sum(self):
        for name in ('wos_alpha1', 'wos_alpha2', 'wos_theta'):
            with self.subTest(parameter=name):
                self.assertAlmostEqual(self.report.value(name) / PUBLISHED[name], 1.0, delta=0.02)
        self.assertAlmostEqual(self.report.value('wos_loglik'), 284.319, delta=0.5)

    def test_khoudraji(self):
        self.assertAlmostEqual(self.report.value('khoudraji_loglik'), 281.902, delta=0.5)

    def test_tests(self):
        self.assertAlmostEqual(self.report.value('lr_p_value'), 0.0021, delta=0.001)
        self.assertGreaterEqual(self.report.value('gof_gumbel_p_value'), 0.005)
        self.assertLessEqual(self.report.value('gof_gumbel_p_value'), 0.06)
        self.assertGreater(self.report.value('gof_wos_p_value'), 0.05)
        self.assertLess(self.report.value('exch_p_value'), 0.01)
