"""
Diagnostics for fitted copulas
Parametric bootstrap goodness of fit with the Cramer-von Mises statistic,
a permutation test of exchangeability, the Rosenblatt transform with its
chi-square Q-Q table and a grid chi-square test of independence.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional
import logging

import numpy as np
import pandas as pd
from scipy import stats
from scipy.special import ndtri

from transforms.conf import active_overrides, override_tolerances
from transforms.exceptions import FitError, PreconditionError

from .fit import FitResult, _as_array, fit_family, pseudo_obs

logger = logging.getLogger(__name__)

MIN_REPLICATES = 100
EXCH_GRID = 32


@dataclass
class TestResult:
    name: str
    statistic: float
    p_value: float
    replicates: int = 0
    seed: Optional[int] = None
    null_statistics: List[float] = field(default_factory=list, repr=False)

    def as_dict(self) -> Dict:
        return {'test': self.name, 'statistic': self.statistic, 'p_value': self.p_value,
                'N': self.replicates, 'seed': self.seed}


def _p_value(observed: float, null) -> float:
    null = np.asarray(null, dtype=float)
    return float((1 + np.count_nonzero(null >= observed)) / (len(null) + 1))


def _replicate_streams(rng, count: int):
    if isinstance(rng, np.random.Generator):
        return rng.spawn(count)
    return [np.random.default_rng(s) for s in np.random.SeedSequence(rng).spawn(count)]


def _map(fn, items, threads: int):
    """Ordered map; results do not depend on the thread count."""
    if threads <= 1:
        return [fn(item) for item in items]
    overrides = active_overrides()

    def scoped(item):
        with override_tolerances(overrides):
            return fn(item)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(scoped, items))


# ============================================================================
# GOODNESS OF FIT
# ============================================================================

def empirical_copula(U, points) -> np.ndarray:
    """C_n(u) = (1/n) #{i: U_i <= u componentwise} at each row of points."""
    U = np.asarray(U, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    below = np.ones((len(points), len(U)), dtype=bool)
    for j in range(U.shape[1]):
        below &= U[None, :, j] <= points[:, None, j]
    return below.mean(axis=1)


def cramer_von_mises(U, model) -> float:
    """S_n = sum_i (C_n(U_i) - C(U_i))^2."""
    U = np.asarray(U, dtype=float)
    return float(np.sum((empirical_copula(U, U) - np.atleast_1d(model.cdf(U))) ** 2))


def gof_bootstrap(family: str, P, replicates: int, rng, threads: int = 1,
                  fitted: FitResult = None) -> TestResult:
    """
    Refit the family on each of `replicates` samples drawn from the fitted
    model; p = (1 + #{S* >= S_n}) / (N + 1). Replicate i draws from stream i.
    """
    if replicates < MIN_REPLICATES:
        raise PreconditionError(f"Bootstrap needs at least {MIN_REPLICATES} replicates, got {replicates}")
    U = _as_array(P)
    n = len(U)
    fit = fitted or fit_family(family, U)
    observed = cramer_von_mises(U, fit.model)
    logger.info(f"GoF {family}: S_n={observed:.6g}, running {replicates} replicates")

    def replicate(stream):
        sample = pseudo_obs(fit.model.sample(n, stream))
        try:
            refit = fit_family(family, sample, start=fit.x)
        except FitError as e:
            logger.warning(f"Bootstrap refit failed, keeping the fitted parameters: {str(e)}")
            refit = fit
        return cramer_von_mises(sample.values, refit.model)

    null = _map(replicate, _replicate_streams(rng, replicates), threads)
    seed = rng if isinstance(rng, int) else None
    return TestResult(f'gof-{family}', observed, _p_value(observed, null), replicates, seed, list(null))


# ============================================================================
# EXCHANGEABILITY
# ============================================================================

def _asymmetry(U, grid: int) -> float:
    g = (np.arange(grid) + 0.5) / grid
    A = (U[:, 0][:, None] <= g[None, :]).astype(float)
    B = (U[:, 1][:, None] <= g[None, :]).astype(float)
    C = A.T @ B / len(U)
    return float(np.mean((C - C.T) ** 2))


def exch_test(P, replicates: int, rng, threads: int = 1, grid: int = EXCH_GRID) -> TestResult:
    """
    T = mean over a grid x grid midpoint lattice of (C_n(u, v) - C_n(v, u))^2;
    null draws swap the coordinates of each row with probability 1/2.
    """
    U = _as_array(P)
    if U.ndim != 2 or U.shape[1] != 2:
        raise PreconditionError("Exchangeability test is implemented for d = 2")
    observed = _asymmetry(U, grid)

    def replicate(stream):
        swap = stream.random(len(U)) < 0.5
        return _asymmetry(np.where(swap[:, None], U[:, ::-1], U), grid)

    null = _map(replicate, _replicate_streams(rng, replicates), threads)
    seed = rng if isinstance(rng, int) else None
    result = TestResult('exchangeability', observed, _p_value(observed, null), replicates, seed, list(null))
    logger.info(f"Exchangeability: T={observed:.6g}, p={result.p_value:.4g}")
    return result


# ============================================================================
# ROSENBLATT
# ============================================================================

@dataclass
class RosenblattResult:
    transformed: np.ndarray
    qq: pd.DataFrame


def rosenblatt(model, P, eps: float = 1e-12) -> RosenblattResult:
    """
    (U1, C(U2 | U1)) and the Q-Q table of r = Phi^-1(U1')^2 + Phi^-1(U2')^2
    against chi-square(2) quantiles at (i - 0.5) / n.
    """
    U = _as_array(P)
    if U.ndim != 2 or U.shape[1] != 2:
        raise PreconditionError("Rosenblatt transform is implemented for d = 2")
    second = np.atleast_1d(model.conditional(U[:, 1], U[:, 0]))
    transformed = np.column_stack([U[:, 0], second])
    clipped = np.clip(transformed, eps, 1.0 - eps)
    r = np.sort(np.sum(ndtri(clipped) ** 2, axis=1))
    n = len(r)
    qq = pd.DataFrame({
        'theoretical': stats.chi2.ppf((np.arange(1, n + 1) - 0.5) / n, 2),
        'empirical': r,
    })
    return RosenblattResult(transformed, qq)


def independence_grid_test(U, bins: int = 5) -> TestResult:
    """Pearson chi-square of the counts on a bins x bins grid against equal cells."""
    U = _as_array(U)
    counts, _, _ = np.histogram2d(U[:, 0], U[:, 1], bins=bins, range=[[0.0, 1.0], [0.0, 1.0]])
    statistic, p_value = stats.chisquare(counts.ravel())
    return TestResult('independence-grid', float(statistic), float(p_value))
