"""
Command runner
Executes one wtrans subcommand from a RunConfig and writes its artifact:
CSV tables through pandas, JSON envelopes carrying version, seed and config
hash, or the xlsx Danube report. Optionally records the run in RunLog.
"""

from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Dict, Optional
import hashlib
import json
import logging
import math
import sys
import traceback

import numpy as np
import pandas as pd
from django.utils import timezone

from copulas.copula import Box
from copulas.measures import kendall_tau, mtcm, spearman_rho, tail_coeff
from copulas.serializers import build_model
from transforms.conf import override_tolerances
from transforms.exceptions import PreconditionError
from transforms.serializers import build_transform
from wlab import __version__

from .danube import danube_sample, reproduce_danube
from .diagnostics import exch_test, gof_bootstrap, rosenblatt
from .excel_export import ReportExporter
from .fit import FITTERS, fit_family, pseudo_obs
from .models import FitRecord, RunLog

logger = logging.getLogger(__name__)

COMMANDS = ['sample', 'eval', 'wmap', 'measure', 'fit', 'gof', 'exch', 'rosenblatt', 'reproduce']
STOCHASTIC = {'sample', 'fit', 'gof', 'exch', 'reproduce'}
EVAL_WHAT = ['cdf', 'density', 'volume']
MEASURE_WHAT = ['lower-tail', 'upper-tail', 'mtcm', 'rho', 'tau']
FLOAT_FORMAT = '%.17g'
MEASURE_SAMPLE_SIZE = 100000


@dataclass
class RunConfig:
    command: str
    model: Optional[str] = None
    data: Optional[str] = None
    n: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    threads: int = 1
    swap: bool = False
    replicates: int = 1000
    what: Optional[str] = None
    points: Optional[str] = None
    grid: int = 201
    family: str = 'wos'
    target: Optional[str] = None
    tol: Dict[str, float] = field(default_factory=dict)
    record: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise PreconditionError(f"Unknown command {self.command!r}")
        if self.command in STOCHASTIC and self.seed is None:
            raise PreconditionError(f"'{self.command}' is stochastic and needs --seed")
        if self.command == 'measure' and self.what in ('rho', 'tau') and self.seed is None:
            raise PreconditionError("Sampled measures need --seed")
        if self.threads < 1:
            raise PreconditionError("--threads must be at least 1")
        if self.command == 'reproduce' and self.target != 'danube':
            raise PreconditionError("reproduce supports the target 'danube'")
        if self.family not in FITTERS:
            raise PreconditionError(f"Unknown family {self.family!r}")

    def as_dict(self) -> Dict:
        return asdict(self)


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON of the config, without the output path and record flag."""
    payload = {k: v for k, v in config.as_dict().items() if k not in ('out', 'record')}
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def load_json(path) -> Dict:
    with open(path, 'r', encoding='utf-8') as fh:
        return json.load(fh)


def read_table(path) -> pd.DataFrame:
    frame = pd.read_csv(path).select_dtypes(include='number')
    if frame.empty:
        raise PreconditionError(f"{path} has no numeric columns")
    return frame


class CommandRunner:
    """
    Runs one RunConfig. Artifacts go to config.out or the given stream.
    """

    def __init__(self, config: RunConfig, stdout=None):
        self.config = config
        self.stdout = stdout or sys.stdout
        self.hash = config_hash(config)
        self.fits = []

    # ------------------------------------------------------------------
    def run(self) -> int:
        config = self.config
        config.validate()

        log = None
        if config.record:
            log = RunLog.objects.create(command=config.command, seed=config.seed, config_hash=self.hash,
                                        config=_jsonable(config.as_dict()), status='running')
        start_time = timezone.now()

        try:
            with override_tolerances(config.tol):
                handler = getattr(self, f'_{config.command}')
                handler()

            end_time = timezone.now()
            duration = (end_time - start_time).total_seconds()
            if log:
                log.status = 'success'
                log.completed_at = end_time
                log.duration_seconds = Decimal(str(round(duration, 2)))
                log.save()
                self._record_fits(log)
            logger.info(f"{config.command} finished in {duration:.2f}s")
            return 0

        except Exception as e:
            logger.error(f"{config.command} failed: {str(e)}")

            if log:
                end_time = timezone.now()
                duration = (end_time - start_time).total_seconds()
                log.status = 'failed'
                log.completed_at = end_time
                log.duration_seconds = Decimal(str(round(duration, 2)))
                log.error_message = str(e)
                log.error_traceback = traceback.format_exc()
                log.save()

            raise

    def _record_fits(self, log):
        for fit in self.fits:
            FitRecord.objects.create(run=log, model_name=fit.family, parameters=_jsonable(fit.params),
                                     log_likelihood=fit.loglik, converged=fit.converged,
                                     iterations=fit.iterations)

    # ------------------------------------------------------------------
    # Artifact writers
    # ------------------------------------------------------------------
    def write_csv(self, frame: pd.DataFrame):
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        self._emit(text)

    def write_json(self, result):
        envelope = {
            'version': __version__,
            'command': self.config.command,
            'seed': self.config.seed,
            'config_hash': self.hash,
            'result': _jsonable(result),
        }
        self._emit(json.dumps(envelope, indent=2, sort_keys=True) + '\n')

    def _emit(self, text: str):
        if self.config.out:
            with open(self.config.out, 'w', encoding='utf-8', newline='') as fh:
                fh.write(text)
        else:
            self.stdout.write(text)

    # ------------------------------------------------------------------
    # Inputs
    # ------------------------------------------------------------------
    def _rng(self):
        return np.random.default_rng(self.config.seed)

    def _model(self):
        if not self.config.model:
            raise PreconditionError(f"'{self.config.command}' needs --model")
        return build_model(load_json(self.config.model))

    def _pseudo(self):
        if not self.config.data:
            raise PreconditionError(f"'{self.config.command}' needs --data")
        sample = pseudo_obs(read_table(self.config.data), source=self.config.data)
        return sample.swapped() if self.config.swap else sample

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------
    def _sample(self):
        if not self.config.n or self.config.n < 1:
            raise PreconditionError("'sample' needs --n >= 1")
        model = self._model()
        U = model.sample(self.config.n, self._rng())
        self.write_csv(pd.DataFrame(U, columns=[f'u{j + 1}' for j in range(U.shape[1])]))

    def _eval(self):
        what = self.config.what or 'cdf'
        if what not in EVAL_WHAT:
            raise PreconditionError(f"--what for eval must be one of {', '.join(EVAL_WHAT)}")
        if not self.config.points:
            raise PreconditionError("'eval' needs --points")
        model = self._model()
        frame = read_table(self.config.points)
        pts = frame.to_numpy(dtype=float)
        if what == 'volume':
            d = model.dim
            if pts.shape[1] != 2 * d:
                raise PreconditionError(f"Volume points need {2 * d} columns (lower then upper corners)")
            values = model.volume(Box(pts[:, :d], pts[:, d:]))
        else:
            values = getattr(model, what)(pts)
        out = frame.copy()
        out[what] = np.atleast_1d(values)
        self.write_csv(out)

    def _wmap(self):
        if not self.config.model:
            raise PreconditionError("'wmap' needs --model (a transform descriptor)")
        W = build_transform(load_json(self.config.model))
        u = np.linspace(0.0, 1.0, max(int(self.config.grid), 2))
        table = pd.DataFrame({'u': u, 'w': np.atleast_1d(W.eval(u))})
        if hasattr(W, 'piece_of'):
            table['piece'] = np.atleast_1d(W.piece_of(u))
        self.write_csv(table)

    def _measure(self):
        what = self.config.what or 'lower-tail'
        if what not in MEASURE_WHAT:
            raise PreconditionError(f"--what for measure must be one of {', '.join(MEASURE_WHAT)}")
        model = self._model()
        if what in ('lower-tail', 'upper-tail'):
            result = tail_coeff(model, what.split('-')[0], 'analytic').as_dict()
        elif what == 'mtcm':
            result = mtcm(model).as_dict()
        else:
            n = self.config.n or MEASURE_SAMPLE_SIZE
            estimator = spearman_rho if what == 'rho' else kendall_tau
            result = estimator(model, n, self._rng()).as_dict()
        result['measure'] = what
        result['seed'] = self.config.seed
        self.write_json(result)

    def _fit(self):
        P = self._pseudo()
        kwargs = {} if self.config.family == 'gumbel' else {'seed': self.config.seed, 'threads': self.config.threads}
        fit = fit_family(self.config.family, P, **kwargs)
        self.fits.append(fit)
        self.write_json(fit.as_dict())

    def _gof(self):
        P = self._pseudo()
        result = gof_bootstrap(self.config.family, P, self.config.replicates, self.config.seed,
                               self.config.threads)
        self.write_json(result.as_dict())

    def _exch(self):
        result = exch_test(self._pseudo(), self.config.replicates, self.config.seed, self.config.threads)
        self.write_json(result.as_dict())

    def _rosenblatt(self):
        model = self._model()
        result = rosenblatt(model, self._pseudo())
        self.write_csv(result.qq)

    def _reproduce(self):
        P = danube_sample(self.config.data, self.config.swap)
        report = reproduce_danube(P, self.config.replicates, self.config.seed, self.config.threads)
        if self.config.out and Path(self.config.out).suffix.lower() == '.xlsx':
            ReportExporter().save(report, self.config.out)
            return
        self.write_json(report.as_dict())


def run(config: RunConfig, stdout=None) -> int:
    return CommandRunner(config, stdout).run()
