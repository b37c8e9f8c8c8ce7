"""
Pseudo-observations and maximum pseudo-likelihood fitting
Gumbel (bounded scalar search), the W-transformed ordinal sum of two Gumbel
copulas and the Khoudraji-Gumbel composite (Nelder-Mead in unconstrained
coordinates from Latin hypercube starts), plus the likelihood ratio test.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence
import logging
import math

import numpy as np
import pandas as pd
from scipy import optimize, stats
from scipy.special import expit, logit
from scipy.stats import qmc

from copulas.copula import Gumbel, Khoudraji
from copulas.fixtures import wos
from copulas.wcopula import WTransformedCopula, nearest_valid
from transforms.conf import active_overrides, get_setting, override_tolerances
from transforms.exceptions import FitError, NonDifferentiablePointError, PreconditionError

logger = logging.getLogger(__name__)

GUMBEL_BOUNDS = (1.0, 50.0)
MAX_SCALAR_ITER = 200
SIMPLEX_TOL = 1e-6
# boxes the Latin hypercube starts are drawn from
WOS_START_BOX = [(math.log(0.2), math.log(5.0)), (math.log(0.2), math.log(5.0)), (0.0, math.log(50.0))]
KHOUDRAJI_START_BOX = [(math.log(0.2), math.log(5.0)), (-2.0, 2.0), (-2.0, 2.0)]
PENALTY = 1e10


@dataclass
class PseudoSample:
    values: np.ndarray
    ties: str = 'average'
    tied_columns: List[int] = field(default_factory=list)
    source: str = ''

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def swapped(self) -> 'PseudoSample':
        return PseudoSample(self.values[:, ::-1].copy(), self.ties, [self.dim - 1 - j for j in self.tied_columns],
                            self.source)


def pseudo_obs(data, source: str = '') -> PseudoSample:
    """Columnwise ranks over n + 1; ties get their average rank."""
    if isinstance(data, pd.DataFrame):
        data = data.to_numpy(dtype=float)
    X = np.asarray(data, dtype=float)
    if X.ndim != 2:
        raise PreconditionError(f"Expected an n x d matrix, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise PreconditionError("Pseudo-observations need n >= 2")
    if np.any(~np.isfinite(X)):
        raise PreconditionError("Data contain missing or non-finite values")
    constant = [j + 1 for j in range(X.shape[1]) if np.all(X[:, j] == X[0, j])]
    if constant:
        raise PreconditionError(f"Constant column(s) {constant} have no ranks")
    ranks = stats.rankdata(X, method='average', axis=0)
    tied = [j for j in range(X.shape[1]) if len(np.unique(X[:, j])) < n]
    if tied:
        logger.info(f"Ties in column(s) {[j + 1 for j in tied]} resolved by average rank")
    return PseudoSample(ranks / (n + 1.0), 'average', tied, source)


def _as_array(P) -> np.ndarray:
    return P.values if isinstance(P, PseudoSample) else np.asarray(P, dtype=float)


def _require_bivariate(U):
    if U.ndim != 2 or U.shape[1] != 2:
        raise PreconditionError("Fitting is implemented for d = 2")


# ============================================================================
# LOG-LIKELIHOOD
# ============================================================================

def nudge(model, U):
    """
    Move levels in the exception set of a margin to the closest level whose
    preimage weights sum to one.
    """
    if not isinstance(model, WTransformedCopula):
        return U
    out = np.array(U, dtype=float, copy=True)
    tol = get_setting('SUM_TOL')
    for j, W in enumerate(model.margins):
        pre = W.preimages(out[:, j])
        for i in np.flatnonzero(np.abs(pre.weight_sums - 1.0) > tol):
            candidates = nearest_valid(W, float(out[i, j]))
            if candidates:
                out[i, j] = min(candidates, key=lambda c: abs(c - out[i, j]))
    return out


def log_density(model, U) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    try:
        dens = model.density(U)
    except NonDifferentiablePointError as e:
        logger.debug(f"Nudging levels in the exception set: {str(e)}")
        dens = model.density(nudge(model, U))
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.log(np.atleast_1d(dens))


def loglik(model, P) -> float:
    values = log_density(model, _as_array(P))
    total = float(np.sum(values))
    return total if np.isfinite(total) else -math.inf


# ============================================================================
# RESULTS
# ============================================================================

@dataclass
class FitResult:
    family: str
    model: object
    params: Dict[str, float]
    x: np.ndarray
    loglik: float
    iterations: int = 0
    converged: bool = True
    boundary: bool = False
    seed: Optional[int] = None
    trace: List[float] = field(default_factory=list)
    restarts: List[Dict] = field(default_factory=list)

    @property
    def n_params(self) -> int:
        return len(self.params)

    def as_dict(self) -> Dict:
        return {
            'family': self.family,
            'model': self.model.describe(),
            'params': self.params,
            'loglik': self.loglik,
            'iterations': self.iterations,
            'converged': self.converged,
            'boundary': self.boundary,
            'seed': self.seed,
            'restarts': self.restarts,
        }


# ============================================================================
# OPTIMIZERS
# ============================================================================

def _scalar_fit(family: str, build: Callable, U, bounds=GUMBEL_BOUNDS, param: str = 'theta') -> FitResult:
    evaluations = []

    def objective(theta):
        value = loglik(build(theta), U)
        evaluations.append((float(theta), value))
        return -value if np.isfinite(value) else PENALTY

    res = optimize.minimize_scalar(objective, bounds=bounds, method='bounded',
                                   options={'maxiter': MAX_SCALAR_ITER, 'xatol': 1e-8})
    if not res.success:
        raise FitError(f"{family} fit did not converge after {res.nfev} evaluations: {res.message}",
                       traces=[evaluations])
    theta = float(res.x)
    boundary = theta - bounds[0] < 1e-3 or bounds[1] - theta < 1e-3
    if boundary:
        logger.warning(f"{family} estimate {param}={theta:.6g} sits on the boundary of {bounds}")
    return FitResult(family, build(theta), {param: theta}, np.array([theta]), -float(res.fun),
                     iterations=int(res.nfev), converged=True, boundary=boundary,
                     trace=[value for _, value in evaluations])


def _nelder_mead(objective: Callable, start: np.ndarray, max_iter: int):
    """One Nelder-Mead run; the trace holds the best log-likelihood after each iteration."""
    trace = []

    def record(intermediate_result):
        trace.append(-float(intermediate_result.fun))

    res = optimize.minimize(objective, start, method='Nelder-Mead', callback=record,
                            options={'xatol': SIMPLEX_TOL, 'fatol': 1e-8, 'maxiter': max_iter})
    return res, trace


def latin_starts(box: Sequence, count: int, seed) -> np.ndarray:
    sampler = qmc.LatinHypercube(d=len(box), seed=np.random.default_rng(seed))
    lower, upper = zip(*box)
    return qmc.scale(sampler.random(count), lower, upper)


def _multistart(family: str, build: Callable, unpack: Callable, U, box, restarts: int,
                seed, start=None, threads: int = 1, max_iter: int = 4000) -> FitResult:
    def objective(x):
        try:
            model = build(x)
        except (ValueError, OverflowError):
            return PENALTY
        value = loglik(model, U)
        return -value if np.isfinite(value) else PENALTY

    starts = np.atleast_2d(start) if start is not None else latin_starts(box, restarts, seed)
    overrides = active_overrides()

    def run_one(x0):
        try:
            with override_tolerances(overrides):
                return _nelder_mead(objective, np.asarray(x0, dtype=float), max_iter)
        except Exception as e:
            logger.error(f"{family} restart from {np.round(x0, 4).tolist()} failed: {str(e)}")
            return None, []

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(run_one, starts))
    else:
        runs = [run_one(x0) for x0 in starts]

    records, traces, best = [], [], None
    for x0, (res, trace) in zip(starts, runs):
        traces.append(trace)
        if res is None or not res.fun < PENALTY:
            records.append({'start': x0.tolist(), 'converged': False, 'loglik': None})
            continue
        records.append({'start': x0.tolist(), 'converged': bool(res.success), 'loglik': -float(res.fun),
                        'iterations': int(res.nit)})
        if best is None or res.fun < best[0].fun:
            best = (res, trace)
    if best is None:
        raise FitError(f"All {len(starts)} {family} restarts failed", traces=traces)

    res, trace = best
    if not res.success:
        logger.warning(f"{family} best restart stopped before the simplex shrank: {res.message}")
    model = build(res.x)
    logger.info(f"{family} fit: loglik {-res.fun:.3f} after {res.nit} iterations")
    return FitResult(family, model, unpack(res.x), np.asarray(res.x, dtype=float), -float(res.fun),
                     iterations=int(res.nit), converged=bool(res.success), seed=seed, trace=trace,
                     restarts=records)


# ============================================================================
# FAMILIES
# ============================================================================

def fit_gumbel_mple(P, **kwargs) -> FitResult:
    U = _as_array(P)
    _require_bivariate(U)
    return _scalar_fit('gumbel', Gumbel, U)


def wos_params(x) -> Dict[str, float]:
    a1, a2, th = np.exp(np.asarray(x, dtype=float))
    return {'alpha1': 1.0 + float(a1), 'alpha2': 1.0 + float(a2), 'theta': float(th)}


def wos_coordinates(alpha1: float, alpha2: float, theta: float) -> np.ndarray:
    return np.log([alpha1 - 1.0, alpha2 - 1.0, theta])


def _build_wos(x):
    p = wos_params(x)
    return wos(p['alpha1'], p['alpha2'], p['theta'])


def fit_wos(P, restarts: int = 5, seed=0, start=None, threads: int = 1) -> FitResult:
    """
    Ordinal sum of Gumbel(alpha1) and Gumbel(alpha2) at 1/2, with
    2u - ceil(2u - 1) on the first margin and the Inn transform on the second.
    Optimised over (log(alpha1 - 1), log(alpha2 - 1), log theta).
    """
    U = _as_array(P)
    _require_bivariate(U)
    return _multistart('wos', _build_wos, wos_params, U, WOS_START_BOX, restarts, seed, start, threads)


def khoudraji_params(x) -> Dict[str, float]:
    x = np.asarray(x, dtype=float)
    return {'theta': 1.0 + float(np.exp(x[0])), 's1': float(expit(x[1])), 's2': float(expit(x[2]))}


def khoudraji_coordinates(theta: float, s1: float, s2: float) -> np.ndarray:
    return np.array([math.log(theta - 1.0), float(logit(s1)), float(logit(s2))])


def _build_khoudraji(x):
    p = khoudraji_params(x)
    return Khoudraji(Gumbel(p['theta']), (p['s1'], p['s2']))


def fit_khoudraji_gumbel(P, restarts: int = 5, seed=0, start=None, threads: int = 1,
                         shapes: Sequence[float] = None) -> FitResult:
    """
    C(u1, u2) = u1^(1 - s1) u2^(1 - s2) Gumbel_theta(u1^s1, u2^s2).
    Fixed shapes reduce the fit to a bounded search over theta.
    """
    U = _as_array(P)
    _require_bivariate(U)
    if shapes is not None:
        s = tuple(float(v) for v in shapes)
        result = _scalar_fit('khoudraji', lambda th: Khoudraji(Gumbel(th), s), U)
        result.params.update({'s1': s[0], 's2': s[1]})
        return result
    return _multistart('khoudraji', _build_khoudraji, khoudraji_params, U, KHOUDRAJI_START_BOX,
                       restarts, seed, start, threads)


FITTERS = {
    'gumbel': fit_gumbel_mple,
    'wos': fit_wos,
    'khoudraji': fit_khoudraji_gumbel,
}


def fit_family(family: str, P, **kwargs) -> FitResult:
    if family not in FITTERS:
        raise PreconditionError(f"Unknown family {family!r}; choose from {', '.join(FITTERS)}")
    return FITTERS[family](P, **kwargs)


# ============================================================================
# LIKELIHOOD RATIO
# ============================================================================

@dataclass
class LikelihoodRatio:
    statistic: float
    df: int
    p_value: float

    def as_dict(self) -> Dict:
        return {'statistic': self.statistic, 'df': self.df, 'p_value': self.p_value}


def lr_test(full, nested, df: int) -> LikelihoodRatio:
    """p = P(chi2_df > 2 (l_full - l_nested)); accepts FitResults or log-likelihoods."""
    l_full = full.loglik if isinstance(full, FitResult) else float(full)
    l_nested = nested.loglik if isinstance(nested, FitResult) else float(nested)
    if df < 1:
        raise PreconditionError("Likelihood ratio test needs df >= 1")
    statistic = 2.0 * (l_full - l_nested)
    if statistic < -1e-6:
        raise FitError(f"Nested model fits better than the full one (statistic {statistic:.6g})")
    statistic = max(statistic, 0.0)
    return LikelihoodRatio(statistic, int(df), float(stats.chi2.sf(statistic, df)))
