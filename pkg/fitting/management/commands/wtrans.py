"""
wtrans: sampling, evaluation, measures, fitting and diagnostics

    python manage.py wtrans sample --model model.json --n 2000 --seed 7 --out sample.csv
    python manage.py wtrans fit --data danube.csv --family wos --seed 1
    python manage.py wtrans reproduce danube --seed 1 --out report.xlsx
"""

import json

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from fitting.fit import FITTERS
from fitting.runner import COMMANDS, EVAL_WHAT, MEASURE_WHAT, RunConfig, run
from transforms.conf import DEFAULTS
from transforms.exceptions import FitError, WTransformError

EXIT_USAGE = 2
EXIT_FAILURE = 1


def _tolerance(text):
    key, sep, value = text.partition('=')
    if not sep or key not in DEFAULTS:
        raise ValueError(f"expected KEY=VALUE with KEY in {', '.join(DEFAULTS)}")
    return key, float(value)


class Command(BaseCommand):
    help = 'W-transformed copulas: sample, eval, wmap, measure, fit, gof, exch, rosenblatt, reproduce'

    def add_arguments(self, parser):
        parser.add_argument('subcommand', choices=COMMANDS)
        parser.add_argument('target', nargs='?', help="Dataset for 'reproduce' (danube)")
        parser.add_argument('--model', help='Model or transform descriptor (JSON file)')
        parser.add_argument('--data', help='CSV with one column per coordinate')
        parser.add_argument('--n', type=int, help='Sample size')
        parser.add_argument('--seed', type=int, help='Seed; required by stochastic subcommands')
        parser.add_argument('--out', help='Output path; stdout when omitted')
        parser.add_argument('--threads', type=int, default=1)
        parser.add_argument('--swap', action='store_true', help='Exchange the two data columns')
        parser.add_argument('--replicates', type=int, default=1000, help='Bootstrap or permutation count')
        parser.add_argument('--what', choices=EVAL_WHAT + MEASURE_WHAT)
        parser.add_argument('--points', help='CSV of evaluation points')
        parser.add_argument('--grid', type=int, default=201, help='Grid size for wmap')
        parser.add_argument('--family', choices=sorted(FITTERS), default='wos')
        parser.add_argument('--tol', action='append', default=[], metavar='KEY=VALUE',
                            help='Tolerance override for this run')
        parser.add_argument('--record', action='store_true', help='Store the run in the run log')

    def handle(self, *args, **options):
        try:
            tol = dict(_tolerance(t) for t in options['tol'])
        except ValueError as e:
            self._fail('usage', f"--tol: {str(e)}", EXIT_USAGE)

        config = RunConfig(
            command=options['subcommand'],
            model=options['model'],
            data=options['data'],
            n=options['n'],
            seed=options['seed'],
            out=options['out'],
            threads=options['threads'],
            swap=options['swap'],
            replicates=options['replicates'],
            what=options['what'],
            points=options['points'],
            grid=options['grid'],
            family=options['family'],
            target=options['target'],
            tol=tol,
            record=options['record'],
        )

        try:
            run(config, self.stdout)
        except ValidationError as e:
            self._fail('validation', e.detail, EXIT_USAGE)
        except (WTransformError, OSError, json.JSONDecodeError) as e:
            self._fail(type(e).__name__, str(e), EXIT_USAGE)
        except FitError as e:
            self._fail('FitError', str(e), EXIT_FAILURE)

    def _fail(self, kind, detail, code):
        self.stdout.write(json.dumps({'error': kind, 'detail': detail}, sort_keys=True, default=str))
        raise CommandError(f"{kind}: {detail}", returncode=code)
