from io import StringIO
from pathlib import Path
import json
import tempfile

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from copulas.copula import Gumbel
from fitting.models import FitRecord, RunLog
from fitting.runner import RunConfig, config_hash, run
from transforms.conf import get_setting
from transforms.exceptions import PreconditionError
from wlab import __version__


class WorkspaceMixin:
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_json(self, name, payload):
        path = self.dir / name
        path.write_text(json.dumps(payload), encoding='utf-8')
        return str(path)

    def write_csv(self, name, frame):
        path = self.dir / name
        frame.to_csv(path, index=False)
        return str(path)

    def gumbel_data(self, n=300, seed=81):
        U = Gumbel(2.0).sample(n, np.random.default_rng(seed))
        return self.write_csv('data.csv', pd.DataFrame(U, columns=['x', 'y']))

    def execute(self, **kwargs):
        out = StringIO()
        run(RunConfig(**kwargs), out)
        return out.getvalue()


class RunConfigTestCase(SimpleTestCase):
    def test_hash_ignores_output_path(self):
        a = RunConfig('sample', model='m.json', n=10, seed=1, out='a.csv')
        b = RunConfig('sample', model='m.json', n=10, seed=1, out='b.csv')
        self.assertEqual(config_hash(a), config_hash(b))
        self.assertNotEqual(config_hash(a), config_hash(RunConfig('sample', model='m.json', n=10, seed=2)))
        self.assertEqual(len(config_hash(a)), 64)

    def test_stochastic_commands_need_a_seed(self):
        for command in ('sample', 'fit', 'gof', 'exch'):
            with self.subTest(command=command):
                with self.assertRaises(PreconditionError):
                    RunConfig(command).validate()
        RunConfig('eval').validate()

    def test_reproduce_target(self):
        with self.assertRaises(PreconditionError):
            RunConfig('reproduce', seed=1).validate()
        RunConfig('reproduce', seed=1, target='danube').validate()


class CommandsTestCase(WorkspaceMixin, SimpleTestCase):
    def test_sample_is_deterministic(self):
        model = self.write_json('model.json', {'name': 'wos'})
        first = self.execute(command='sample', model=model, n=200, seed=7)
        second = self.execute(command='sample', model=model, n=200, seed=7)
        self.assertEqual(first, second)
        lines = first.splitlines()
        self.assertEqual(lines[0], 'u1,u2')
        self.assertEqual(len(lines), 201)
        self.assertNotEqual(first, self.execute(command='sample', model=model, n=200, seed=8))

    def test_sample_to_file(self):
        model = self.write_json('model.json', {'family': 'clayton', 'theta': 2})
        out = self.dir / 'sample.csv'
        self.execute(command='sample', model=model, n=50, seed=1, out=str(out))
        frame = pd.read_csv(out)
        self.assertEqual(frame.shape, (50, 2))
        self.assertTrue(((frame > 0) & (frame < 1)).all().all())

    def test_eval_cdf(self):
        model = self.write_json('model.json', {'family': 'independence'})
        points = self.write_csv('points.csv', pd.DataFrame({'u1': [0.5, 0.2], 'u2': [0.5, 1.0]}))
        frame = pd.read_csv(StringIO(self.execute(command='eval', model=model, points=points, what='cdf')))
        np.testing.assert_allclose(frame['cdf'], [0.25, 0.2])

    def test_eval_volume(self):
        model = self.write_json('model.json', {'family': 'independence'})
        points = self.write_csv('boxes.csv', pd.DataFrame({'a1': [0.0, 0.2], 'a2': [0.0, 0.5],
                                                            'b1': [0.5, 0.4], 'b2': [0.5, 1.0]}))
        frame = pd.read_csv(StringIO(self.execute(command='eval', model=model, points=points, what='volume')))
        np.testing.assert_allclose(frame['volume'], [0.25, 0.1])

    def test_wmap(self):
        descriptor = self.write_json('pssm.json', {'type': 'pssm', 't': [0, 0.1, 0.3, 0.5, 0.7, 1],
                                                   'r': [0, 1, 0, 0, 1], 'base': {'kind': 'uniform'}})
        table = pd.read_csv(StringIO(self.execute(command='wmap', model=descriptor, grid=21)))
        self.assertEqual(list(table.columns), ['u', 'w', 'piece'])
        self.assertEqual(len(table), 21)
        self.assertAlmostEqual(table.loc[1, 'w'], 0.5, places=12)
        self.assertTrue(table['w'].between(0.0, 1.0).all())
        self.assertEqual(table['piece'].max(), 5)

    def test_measure(self):
        model = self.write_json('model.json', {'name': 'tail_designer'})
        envelope = json.loads(self.execute(command='measure', model=model, what='upper-tail'))
        self.assertAlmostEqual(envelope['result']['estimate'], 0.8, places=6)
        self.assertEqual(envelope['result']['measure'], 'upper-tail')

    def test_measure_fields(self):
        model = self.write_json('model.json', {'family': 'clayton', 'theta': 2})
        for what in ('lower-tail', 'mtcm', 'rho'):
            with self.subTest(what=what):
                result = json.loads(self.execute(command='measure', model=model, what=what, n=2000,
                                                 seed=11))['result']
                self.assertTrue({'estimate', 'stderr', 'method', 'seed'} <= set(result))
                self.assertEqual(result['seed'], 11)
        result = json.loads(self.execute(command='measure', model=model, what='rho', n=2000, seed=11))['result']
        self.assertGreater(result['stderr'], 0.0)
        self.assertEqual(result['method'], 'sample')

    def test_fit_envelope(self):
        data = self.gumbel_data()
        config = dict(command='fit', data=data, family='gumbel', seed=3)
        envelope = json.loads(self.execute(**config))
        self.assertEqual(envelope['version'], __version__)
        self.assertEqual(envelope['seed'], 3)
        self.assertEqual(envelope['config_hash'], config_hash(RunConfig(**config)))
        self.assertGreater(envelope['result']['params']['theta'], 1.5)

    def test_swap_flag(self):
        data = self.gumbel_data()
        plain = json.loads(self.execute(command='exch', data=data, replicates=100, seed=4))
        swapped = json.loads(self.execute(command='exch', data=data, replicates=100, seed=4, swap=True))
        self.assertAlmostEqual(plain['result']['statistic'], swapped['result']['statistic'], places=12)
        self.assertNotEqual(plain['config_hash'], swapped['config_hash'])

    def test_rosenblatt(self):
        model = self.write_json('model.json', {'family': 'gumbel', 'theta': 2})
        table = pd.read_csv(StringIO(self.execute(command='rosenblatt', model=model, data=self.gumbel_data())))
        self.assertEqual(list(table.columns), ['theoretical', 'empirical'])
        self.assertEqual(len(table), 300)

    def test_tolerance_override_is_scoped(self):
        model = self.write_json('model.json', {'family': 'independence'})
        points = self.write_csv('points.csv', pd.DataFrame({'u1': [0.5], 'u2': [0.5]}))
        before = get_setting('NUDGE')
        self.execute(command='eval', model=model, points=points, tol={'NUDGE': before * 100})
        self.assertEqual(get_setting('NUDGE'), before)


class ManagementCommandTestCase(WorkspaceMixin, SimpleTestCase):
    def test_sample(self):
        model = self.write_json('model.json', {'name': 'cauchy_v'})
        out = StringIO()
        call_command('wtrans', 'sample', '--model', model, '--n', '5', '--seed', '1', stdout=out)
        self.assertEqual(len(out.getvalue().splitlines()), 6)

    def test_schema_violation(self):
        model = self.write_json('model.json', {'family': 'gumbel'})
        points = self.write_csv('points.csv', pd.DataFrame({'u1': [0.5], 'u2': [0.5]}))
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('wtrans', 'eval', '--model', model, '--points', points, stdout=out)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertEqual(json.loads(out.getvalue())['error'], 'validation')

    def test_missing_seed(self):
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('wtrans', 'exch', '--data', self.gumbel_data(), stdout=out)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertEqual(json.loads(out.getvalue())['error'], 'PreconditionError')

    def test_bad_tolerance(self):
        with self.assertRaises(CommandError):
            call_command('wtrans', 'eval', '--tol', 'SPEED=3', stdout=StringIO())


class RunLogTestCase(WorkspaceMixin, TestCase):
    def test_successful_fit_is_recorded(self):
        self.execute(command='fit', data=self.gumbel_data(), family='gumbel', seed=5, record=True)
        log = RunLog.objects.get()
        self.assertEqual(log.status, 'success')
        self.assertIsNotNone(log.completed_at)
        self.assertEqual(log.config_hash, config_hash(RunConfig('fit', data=self.gumbel_data(), family='gumbel',
                                                               seed=5)))
        record = FitRecord.objects.get(run=log)
        self.assertEqual(record.model_name, 'gumbel')
        self.assertIn('theta', record.parameters)

    def test_failure_is_recorded_and_raised(self):
        with self.assertRaises(PreconditionError):
            self.execute(command='sample', model=str(self.dir / 'absent.json'), n=0, seed=1, record=True)
        log = RunLog.objects.get()
        self.assertEqual(log.status, 'failed')
        self.assertIn('--n', log.error_message)
        self.assertIn('Traceback', log.error_traceback)

    def test_nothing_recorded_by_default(self):
        self.execute(command='fit', data=self.gumbel_data(), family='gumbel', seed=6)
        self.assertEqual(RunLog.objects.count(), 0)
