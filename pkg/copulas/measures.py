"""
Dependence Measures
Tail dependence coefficients (analytic or as extrapolated limits), the
maximal tail concordance measure, Spearman's rho and Kendall's tau for base
and W-transformed copulas, and the per-piece bounds of W-transforms.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional
import logging
import math

import numpy as np
from scipy import stats

from transforms.conf import get_setting
from transforms.exceptions import DomainError, PreconditionError
from transforms.wtransform import BaseWTransform

from .copula import BaseCopula
from .wcopula import WTransformedOrdinalSum

logger = logging.getLogger(__name__)

TAIL_STEPS = [10.0 ** -m for m in range(1, 5)]


@dataclass
class TailEstimate:
    side: str
    value: float
    method: str
    grid: List[float] = field(default_factory=list)
    warning: bool = False
    # None for closed forms; the last extrapolation step for limits
    stderr: Optional[float] = None

    def as_dict(self) -> Dict:
        return {'side': self.side, 'estimate': self.value, 'stderr': self.stderr, 'method': self.method,
                'grid': self.grid, 'warning': self.warning}


@dataclass
class MtcmEstimate:
    value: float
    b_star: float
    grid: np.ndarray
    p: float
    method: str = 'copula'

    def as_dict(self) -> Dict:
        return {'estimate': self.value, 'stderr': None, 'method': self.method, 'b_star': self.b_star,
                'p': self.p, 'grid_size': int(len(self.grid))}


@dataclass
class ConcordanceEstimate:
    value: float
    stderr: float
    method: str
    n: int

    def as_dict(self) -> Dict:
        return {'estimate': self.value, 'stderr': self.stderr, 'method': self.method, 'n': self.n}


def _check_side(side: str):
    if side not in ('lower', 'upper'):
        raise DomainError(f"Tail side must be 'lower' or 'upper', got {side!r}")


def _richardson(values: List[float]):
    """
    Extrapolate quotients taken at steps shrinking tenfold, assuming an error
    series in powers of the step. Returns (limit, oscillating).
    """
    diffs = np.diff(values)
    diffs = np.where(np.abs(diffs) > 1e-12, diffs, 0.0)
    oscillating = bool(np.any(diffs[:-1] * diffs[1:] < 0)) if len(diffs) > 1 else False
    table = list(values)
    level = 1
    while len(table) > 1:
        factor = 10.0 ** level
        table = [(factor * fine - coarse) / (factor - 1.0) for coarse, fine in zip(table[:-1], table[1:])]
        level += 1
    return table[0], oscillating


def _limit_error(quotients: List[float], limit: float, oscillating: bool) -> float:
    if oscillating:
        return abs(quotients[-1] - quotients[-2])
    return abs(limit - quotients[-1])


def _diagonal_quotients(C, side: str, steps):
    t = np.asarray(steps, dtype=float)
    if side == 'lower':
        diag = np.atleast_1d(C.cdf(np.column_stack([t, t])))
        return (diag / t).tolist()
    s = 1.0 - t
    diag = np.atleast_1d(C.cdf(np.column_stack([s, s])))
    return ((1.0 - 2.0 * s + diag) / t).tolist()


def tail_coeff(C, side: str, method: str = 'empirical-limit') -> TailEstimate:
    """
    lambda_l = lim C(t, t)/t and lambda_u = lim (1 - 2t + C(t, t))/(1 - t).
    'analytic' dispatches per family and falls back to the limit when the
    family has no closed form.
    """
    _check_side(side)
    if method == 'analytic':
        if isinstance(C, WTransformedOrdinalSum):
            return ordinal_sum_tail(C, side)
        if isinstance(C, BaseCopula):
            value = C.lower_tail() if side == 'lower' else C.upper_tail()
            if value is not None:
                return TailEstimate(side, float(value), 'analytic')
        logger.info(f"No closed-form {side} tail for {type(C).__name__}; using the extrapolated limit")
    elif method != 'empirical-limit':
        raise DomainError(f"Unknown tail method {method!r}")

    quotients = _diagonal_quotients(C, side, TAIL_STEPS)
    limit, oscillating = _richardson(quotients)
    if oscillating:
        logger.warning(f"{side} tail quotients oscillate ({np.round(quotients, 6).tolist()}); reporting the last one")
        value = quotients[-1]
    else:
        value = limit
    return TailEstimate(side, float(np.clip(value, 0.0, 1.0)), 'empirical-limit', list(TAIL_STEPS), oscillating,
                        _limit_error(quotients, limit, oscillating))


def tail_coeff_sample(sample: np.ndarray, side: str, q: float) -> float:
    """Share of points in the q-corner of the diagonal, divided by q."""
    _check_side(side)
    U = np.asarray(sample, dtype=float)
    if side == 'lower':
        hits = np.all(U <= q, axis=1)
    else:
        hits = np.all(U > 1.0 - q, axis=1)
    return float(hits.mean() / q)


def boundary_weights(W: BaseWTransform, end: int) -> np.ndarray:
    """Limits of |(W^{-1}_{|k})'| at level 0+ (end=0) or 1- (end=1)."""
    if hasattr(W, 'boundary_weights'):
        return np.asarray(W.boundary_weights(end), dtype=float)
    eps = get_setting('NUDGE')
    level = eps if end == 0 else 1.0 - eps
    return W.preimages(level).weights[:, 0]


def ordinal_sum_tail(model: WTransformedOrdinalSum, side: str) -> TailEstimate:
    """lambda_l = sum alpha_k lambda_{l,k}, lambda_u = sum beta_k lambda_{u,k} with boundary weights alpha, beta."""
    _check_side(side)
    if not isinstance(model, WTransformedOrdinalSum):
        raise PreconditionError("Expected a W-transformed ordinal sum")
    if not model.homogeneous:
        raise PreconditionError("Tail weights need the same transform on every margin")
    W = model.margins[0]
    if not W.piecewise_increasing:
        raise PreconditionError("Margins with decreasing pieces are outside the ordinal-sum tail formula")
    weights = boundary_weights(W, 0 if side == 'lower' else 1)
    total = float(weights.sum())
    if abs(total - 1.0) > get_setting('SUM_TOL'):
        raise PreconditionError(f"Boundary weights sum to {total:.9g}, not 1")
    coeffs = []
    for C in model.components:
        value = C.lower_tail() if side == 'lower' else C.upper_tail()
        if value is None:
            value = tail_coeff(C, side).value
        coeffs.append(value)
    return TailEstimate(side, float(np.clip(np.dot(weights, coeffs), 0.0, 1.0)), 'analytic')


def vtransform_upper_tail(C: BaseCopula, V: BaseWTransform) -> TailEstimate:
    """
    Upper tail of C under a v-transform on both margins. With s = -V'_{|1}(0+):
      lambda_u = lambda_l/s + (1 - 1/s) lambda_u
    when C is tail independent in the off-diagonal corners; otherwise the
    corner term 2/s - lim [C(x_R, x_L) + C(x_L, x_R)]/(1 - t) is added, where
    x_L, x_R are the two preimages of t.
    """
    if V.n_pieces != 2 or V.piece_dirs != ['dec', 'inc']:
        raise PreconditionError("Expected a v-transform (decreasing then increasing piece)")
    slope = -float(np.atleast_1d(V.piece_derivative(1, np.array([0.0])))[0])
    inv_slope = 0.0 if not np.isfinite(slope) else 1.0 / slope
    lam_l = tail_coeff(C, 'lower', 'analytic').value
    lam_u = tail_coeff(C, 'upper', 'analytic').value
    value = lam_l * inv_slope + (1.0 - inv_slope) * lam_u
    if C.corner_tail_independent:
        return TailEstimate('upper', float(np.clip(value, 0.0, 1.0)), 'analytic')

    steps = [10.0 ** -m for m in range(2, 5)]
    quotients = []
    for h in steps:
        t = 1.0 - h
        x_left = float(V.piece_inverse(1, t))
        x_right = float(V.piece_inverse(2, t))
        pair = np.atleast_1d(C.cdf(np.array([[x_right, x_left], [x_left, x_right]])))
        quotients.append(float(pair.sum()) / h)
    limit, oscillating = _richardson(quotients)
    error = _limit_error(quotients, limit, oscillating)
    if oscillating:
        logger.warning(f"Corner quotients oscillate ({np.round(quotients, 6).tolist()})")
        limit = quotients[-1]
    value += 2.0 * inv_slope - limit
    return TailEstimate('upper', float(np.clip(value, 0.0, 1.0)), 'analytic+corner-limit', steps, oscillating, error)


# ============================================================================
# MAXIMAL TAIL CONCORDANCE
# ============================================================================

def mtcm(source, p: float = None, grid: np.ndarray = None) -> MtcmEstimate:
    """
    max over b of Lambda(b, 1/b) with Lambda(x, y) ~ C(px, py)/p. A sample
    uses its empirical copula and p = ceil(sqrt(n))/n by default; a copula
    uses p = 1e-4.
    """
    b = np.geomspace(1.0 / 50.0, 50.0, 101) if grid is None else np.asarray(grid, dtype=float)
    if isinstance(source, np.ndarray):
        U = np.asarray(source, dtype=float)
        n = len(U)
        p = math.ceil(math.sqrt(n)) / n if p is None else p
        values = np.array([np.mean((U[:, 0] <= p * bi) & (U[:, 1] <= p / bi)) for bi in b]) / p
        method = 'empirical'
    else:
        p = 1e-4 if p is None else p
        pts = np.column_stack([np.minimum(p * b, 1.0), np.minimum(p / b, 1.0)])
        values = np.atleast_1d(source.cdf(pts)) / p
        method = 'copula'
    best = int(np.argmax(values))
    return MtcmEstimate(float(values[best]), float(b[best]), b, float(p), method)


def flipped_v_mtcm(estimate: MtcmEstimate, V1: BaseWTransform, V2: BaseWTransform) -> MtcmEstimate:
    """
    MTCM of C under flipped v-transforms from the MTCM of C: b* scales by
    sqrt(a2/a1) and lambda* by sqrt(a1 a2), with a_j the slope of the first
    piece inverse of V_j at 0+.
    """
    eps = get_setting('NUDGE')
    a1 = float(np.atleast_1d(V1.piece_inverse_derivative(1, np.array([eps])))[0])
    a2 = float(np.atleast_1d(V2.piece_inverse_derivative(1, np.array([eps])))[0])
    return MtcmEstimate(math.sqrt(a1 * a2) * estimate.value, math.sqrt(a2 / a1) * estimate.b_star,
                        estimate.grid, estimate.p, estimate.method)


# ============================================================================
# CONCORDANCE
# ============================================================================

def _batched(statistic, U: np.ndarray, batches: int = 20):
    chunks = np.array_split(U, batches)
    values = np.array([statistic(c[:, 0], c[:, 1]) for c in chunks])
    return float(values.std(ddof=1) / math.sqrt(batches))


def spearman_rho(C, n_mc: int, rng: np.random.Generator) -> ConcordanceEstimate:
    """Rank correlation of n_mc draws; the standard error comes from 20 batch estimates."""
    U = C.sample(n_mc, rng)

    def rho(x, y):
        return stats.spearmanr(x, y).statistic

    return ConcordanceEstimate(float(rho(U[:, 0], U[:, 1])), _batched(rho, U), 'sample', n_mc)


def kendall_tau(C, n_mc: int, rng: np.random.Generator) -> ConcordanceEstimate:
    U = C.sample(n_mc, rng)

    def tau(x, y):
        return stats.kendalltau(x, y).statistic

    return ConcordanceEstimate(float(tau(U[:, 0], U[:, 1])), _batched(tau, U), 'sample', n_mc)


def spearman_rho_quadrature(C, grid: int = 201) -> float:
    """12 times the midpoint-rule integral of C over the unit square, minus 3."""
    mid = (np.arange(grid) + 0.5) / grid
    u1, u2 = np.meshgrid(mid, mid, indexing='ij')
    values = np.atleast_1d(C.cdf(np.column_stack([u1.ravel(), u2.ravel()])))
    return float(12.0 * values.mean() - 3.0)


# ============================================================================
# PIECE BOUNDS
# ============================================================================

@dataclass
class PieceBoundsReport:
    passed: bool
    violations: List[Dict] = field(default_factory=list)

    @property
    def worst(self) -> Optional[Dict]:
        if not self.violations:
            return None
        return max(self.violations, key=lambda item: item['excess'])


def piece_bounds_check(W: BaseWTransform, points: int = 1000, tol: float = 1e-9) -> PieceBoundsReport:
    """
    Increasing piece k: W_{|k}(u) <= u/d_k and W^{-1}_{|k}(v) >= d_k v.
    Decreasing piece k: W_{|k}(u) <= (1 - u)/(1 - d_{k-1}) and
    W^{-1}_{|k}(v) <= 1 - (1 - d_{k-1}) v.
    """
    if getattr(W, 'lazy', False):
        raise PreconditionError("Piece bounds are checked for finitely many pieces")
    v = np.linspace(0.0, 1.0, points)
    violations = []
    for k in range(1, W.n_pieces + 1):
        a, b = float(W.deltas[k - 1]), float(W.deltas[k])
        u = np.linspace(a, b, points + 1)[1:]
        values = np.asarray(W.piece_eval(k, u), dtype=float)
        inverse = np.atleast_1d(W.piece_inverse(k, v))
        if W.increasing[k - 1]:
            checks = [('value', u, values - u / b), ('inverse', v, b * v - inverse)]
        else:
            checks = [('value', u, values - (1.0 - u) / (1.0 - a)), ('inverse', v, inverse - (1.0 - (1.0 - a) * v))]
        for kind, where, excess in checks:
            i = int(np.argmax(excess))
            if excess[i] > tol:
                violations.append({'piece': k, 'kind': kind, 'point': float(where[i]), 'excess': float(excess[i])})
    report = PieceBoundsReport(not violations, violations)
    if violations:
        logger.warning(f"Piece bounds violated; worst {report.worst}")
    return report
