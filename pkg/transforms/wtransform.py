"""
W-transforms
Uniformity-preserving maps W(u) = F_{T(X)}(T(F_X^{-1}(u))) and the
explicit families used as model margins (piecewise linear, v-transforms,
pssm, Inn).

Piece inverses follow one convention everywhere:
  increasing piece k: inf{u in (d_{k-1}, d_k]: W(u) >= v}, empty set -> d_k
  decreasing piece k: sup{u in (d_{k-1}, d_k]: W(u) >= v}, empty set -> d_{k-1}
With it, the part of piece k lying below level v is (d_{k-1}, inv] or
(inv, d_k] for every v, in or out of the piece's range.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence
import logging

import numpy as np

from .conf import get_setting
from .dist import BaseDistribution, Uniform
from .exceptions import ConstructionError, DomainError
from .pcsm import (
    GenericPiece, LinearPiece, PcsmFunction, PieceSpec, bisect_monotone,
)

logger = logging.getLogger(__name__)


def _check_unit(u):
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("Argument outside [0, 1]")
    return arr


@dataclass
class Preimages:
    """Piece preimages of v: arrays shaped (K, n) for n query levels."""
    v: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    active: np.ndarray

    @property
    def weight_sums(self):
        return self.weights.sum(axis=0)


class BaseWTransform:
    """
    Shared machinery. Subclasses set `deltas` and `increasing` and implement
    piece_eval plus either piece_inverse or a faster override.
    """

    deltas: np.ndarray
    increasing: np.ndarray

    @property
    def n_pieces(self) -> int:
        return len(self.increasing)

    @property
    def piece_dirs(self) -> List[str]:
        return ['inc' if inc else 'dec' for inc in self.increasing]

    @property
    def increasing_pieces(self) -> List[int]:
        """Index set I of increasing pieces (1-based)."""
        return [k + 1 for k, inc in enumerate(self.increasing) if inc]

    @property
    def piecewise_increasing(self) -> bool:
        return bool(np.all(self.increasing))

    # ------------------------------------------------------------------
    def piece_of(self, u):
        arr = _check_unit(u)
        k = np.clip(np.searchsorted(self.deltas, arr, side='left'), 1, self.n_pieces)
        return int(k) if arr.ndim == 0 else k

    def eval(self, u):
        arr = _check_unit(u)
        flat = np.atleast_1d(arr)
        k = np.atleast_1d(self.piece_of(flat))
        out = np.empty_like(flat)
        for piece in np.unique(k):
            mask = k == piece
            out[mask] = self.piece_eval(int(piece), flat[mask])
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def __call__(self, u):
        return self.eval(u)

    def piece_eval(self, k: int, u):
        raise NotImplementedError

    def piece_value_range(self, k: int):
        """Closure of W's values on piece k, as (low, high)."""
        a = float(self.piece_eval(k, np.float64(self.deltas[k - 1])))
        b = float(self.piece_eval(k, np.float64(self.deltas[k])))
        return (a, b) if a <= b else (b, a)

    def piece_inverse(self, k: int, v):
        """Bisection on piece_eval; subclasses override with closed forms."""
        arr = np.asarray(v, dtype=float)
        a, b = float(self.deltas[k - 1]), float(self.deltas[k])
        lo, hi = self.piece_value_range(k)
        vc = np.clip(arr, lo, hi)
        inc = bool(self.increasing[k - 1])
        u = bisect_monotone(lambda x: self.piece_eval(k, x), vc, a, b, inc, tol=1e-15)
        start, end = (a, b) if inc else (b, a)
        u = np.where(arr <= lo, start, np.where(arr >= hi, end, u))
        return float(u) if arr.ndim == 0 else u

    def piece_inverses(self, v):
        """Every clamped piece inverse at once, shape (K, n)."""
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        return np.array([np.atleast_1d(self.piece_inverse(k, arr)) for k in range(1, self.n_pieces + 1)])

    def piece_derivative(self, k: int, u):
        """Central difference clamped inside the piece."""
        u = np.asarray(u, dtype=float)
        a, b = float(self.deltas[k - 1]), float(self.deltas[k])
        h = get_setting('DERIVATIVE_STEP')
        up = np.minimum(u + h, b)
        down = np.maximum(u - h, a)
        return (self.piece_eval(k, up) - self.piece_eval(k, down)) / (up - down)

    def derivative(self, u):
        arr = _check_unit(u)
        flat = np.atleast_1d(arr)
        k = np.atleast_1d(self.piece_of(flat))
        out = np.empty_like(flat)
        for piece in np.unique(k):
            mask = k == piece
            out[mask] = self.piece_derivative(int(piece), flat[mask])
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def piece_inverse_derivative(self, k: int, v):
        """|d/dv W^{-1}_{|k}(v)| = 1 / |W'_{|k}| at the preimage."""
        u = self.piece_inverse(k, v)
        with np.errstate(divide='ignore'):
            return 1.0 / np.abs(self.piece_derivative(k, u))

    # ------------------------------------------------------------------
    def preimages(self, v) -> Preimages:
        """
        Preimages, active set and weights p_k for each level in v.
        Piece k is active when v lies strictly inside its range.
        """
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        K = self.n_pieces
        weights = np.zeros((K, arr.size))
        active = np.zeros((K, arr.size), dtype=bool)
        values = self.piece_inverses(arr)
        for k in range(1, K + 1):
            lo, hi = self.piece_value_range(k)
            slack = 1e-12
            on = (arr > lo + slack) & (arr < hi - slack)
            active[k - 1] = on
            if np.any(on):
                with np.errstate(divide='ignore', invalid='ignore'):
                    w = 1.0 / np.abs(self.piece_derivative(k, values[k - 1][on]))
                weights[k - 1, on] = w
        return Preimages(arr, values, weights, active)

    def preimage_lengths(self, v):
        """Lebesgue measure of S_k(v) = {u in piece k: W(u) <= v}, shape (K, n)."""
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        out = np.empty((self.n_pieces, arr.size))
        for k in range(1, self.n_pieces + 1):
            inv = self.piece_inverse(k, arr)
            if self.increasing[k - 1]:
                out[k - 1] = inv - self.deltas[k - 1]
            else:
                out[k - 1] = self.deltas[k] - inv
        return out

    def transformed_cdf(self, y):
        """P(W(U) <= y) assembled from the preimage lengths; equals y for uniformity-preserving maps."""
        arr = np.asarray(y, dtype=float)
        out = self.preimage_lengths(np.clip(np.atleast_1d(arr), 0.0, 1.0)).sum(axis=0)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def sample(self, n: int, rng: np.random.Generator):
        return self.eval(rng.random(n))

    def describe(self) -> Dict:
        return {'type': type(self).__name__, 'deltas': np.asarray(self.deltas).tolist()}


# ============================================================================
# GENERIC (F_X, T) TRANSFORMS
# ============================================================================

class WTransform(BaseWTransform):
    """
    W built from a continuous base F_X and a pcsm T.
    F_{T(X)}(y) is the sum over pieces of the F_X-mass below level y,
    computed from the analytic piece inverses of T.
    """

    def __init__(self, base: BaseDistribution, transform: PcsmFunction,
                 tail: Callable = None, max_pieces: int = None):
        self.base = base
        self.transform = transform
        self.tail = tail
        if transform.lazy:
            if max_pieces is not None:
                self._sum_pieces = list(range(1, max_pieces + 1))
                remaining = 1.0 - float(base.cdf(transform.change_point(max_pieces)))
            else:
                self._sum_pieces, remaining = transform.summation_pieces(base)
            if tail is None and remaining > get_setting('TRUNCATION_TOL'):
                logger.warning(
                    f"Truncating countable T after {len(self._sum_pieces)} pieces; "
                    f"remaining F_X mass {remaining:.3g}"
                )
            count = len(self._sum_pieces)
        else:
            self._sum_pieces = list(range(1, transform.n_pieces + 1))
            count = transform.n_pieces
        points = np.array([transform.change_point(k) for k in range(count + 1)])
        deltas = np.asarray(base.cdf(points), dtype=float)
        deltas[0] = 0.0
        if not transform.lazy:
            deltas[-1] = 1.0
        if np.any(np.diff(deltas) <= 0):
            raise ConstructionError("Change points must carry positive F_X mass between them")
        self.deltas = deltas
        self.increasing = np.array([transform.piece(k).increasing for k in range(1, count + 1)])
        ranges = [transform.piece_range(k) for k in self._sum_pieces]
        self._y_low = min(r[0] for r in ranges)
        self._y_high = max(r[1] for r in ranges)

    @property
    def lazy(self) -> bool:
        return self.transform.lazy

    # ------------------------------------------------------------------
    def transformed_cdf(self, y):
        """F_{T(X)}(y)."""
        arr = np.asarray(y, dtype=float)
        flat = np.atleast_1d(arr)
        T, F = self.transform, self.base
        total = np.zeros_like(flat)
        for k in self._sum_pieces:
            a, b = T.interval(k)
            x = T.clamped_inverse(k, flat)
            if T.piece(k).increasing:
                total += F.cdf(x) - F.cdf(a)
            else:
                total += F.cdf(b) - F.cdf(x)
        if self.tail is not None:
            total += self.tail(flat, len(self._sum_pieces))
        out = np.clip(total, 0.0, 1.0)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def transformed_quantile(self, v):
        """Smallest y with F_{T(X)}(y) >= v, by bisection to machine precision."""
        v = np.asarray(v, dtype=float)
        lo = np.full(v.shape, self._y_low)
        hi = np.full(v.shape, self._y_high)
        if not np.isfinite(self._y_low):
            lo = np.full(v.shape, -1.0)
            for _ in range(2000):
                low_side = self.transformed_cdf(lo) >= v
                if not np.any(low_side & (v > 0)):
                    break
                lo = np.where(low_side, 2.0 * lo - 1.0, lo)
        if not np.isfinite(self._y_high):
            hi = np.full(v.shape, 1.0)
            for _ in range(2000):
                short = self.transformed_cdf(hi) < v
                if not np.any(short):
                    break
                hi = np.where(short, 2.0 * hi + 1.0, hi)
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            below = self.transformed_cdf(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return hi

    def piece_eval(self, k: int, u):
        T = self.transform
        a, b = T.interval(k)
        u = np.asarray(u, dtype=float)
        # Definition 1 limit at u = 0
        x = np.clip(self.base.quantile(np.maximum(u, 1e-12)), a, b)
        with np.errstate(all='ignore'):
            y = T.piece(k)(x)
        return self.transformed_cdf(y)

    def eval(self, u):
        arr = _check_unit(u)
        if not self.lazy:
            return super().eval(arr)
        x = self.base.quantile(np.clip(arr, 1e-12, 1.0 - 1e-16))
        return self.transformed_cdf(self.transform.eval(x))

    def _inverse_at_level(self, k: int, v, y):
        x = self.transform.clamped_inverse(k, y)
        u = np.asarray(self.base.cdf(x), dtype=float)
        a, b = float(self.deltas[k - 1]), float(self.deltas[k])
        start, end = (a, b) if self.increasing[k - 1] else (b, a)
        return np.where(v <= 0.0, start, np.where(v >= 1.0, end, np.clip(u, a, b)))

    def piece_inverse(self, k: int, v):
        arr = np.asarray(v, dtype=float)
        y = self.transformed_quantile(np.clip(arr, 0.0, 1.0))
        u = self._inverse_at_level(k, arr, y)
        return float(u) if arr.ndim == 0 else u

    def piece_inverses(self, v):
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        y = self.transformed_quantile(np.clip(arr, 0.0, 1.0))
        return np.array([self._inverse_at_level(k, arr, y) for k in range(1, self.n_pieces + 1)])

    def preimage_lengths(self, v):
        """
        One level search serves every piece. For countable T an extra last
        row holds the mass of the pieces beyond the truncation index (zero
        without a tail hook).
        """
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        y = self.transformed_quantile(np.clip(arr, 0.0, 1.0))
        rows = self.n_pieces + (1 if self.lazy else 0)
        out = np.zeros((rows, arr.size))
        for k in range(1, self.n_pieces + 1):
            inv = self._inverse_at_level(k, arr, y)
            if self.increasing[k - 1]:
                out[k - 1] = inv - self.deltas[k - 1]
            else:
                out[k - 1] = self.deltas[k] - inv
        if self.lazy and self.tail is not None:
            out[-1] = self.tail(y, len(self._sum_pieces))
        return out

    def _transformed_density(self, y):
        """f_{T(X)}(y), counting every piece whose closed range holds y."""
        T, F = self.transform, self.base
        total = np.zeros_like(y)
        for j in self._sum_pieces:
            lo, hi = T.piece_range(j)
            slack = 1e-12 * np.maximum(1.0, np.abs(y))
            inside = (y >= lo - slack) & (y <= hi + slack)
            if not np.any(inside):
                continue
            xj = T.clamped_inverse(j, y[inside])
            with np.errstate(divide='ignore', invalid='ignore'):
                total[inside] += F.pdf(xj) / np.abs(T.piece_derivative(j, xj))
        return total

    def piece_derivative(self, k: int, u):
        """Chain rule f_{T(X)}(y) T'(x) / f_X(x); finite differences where it breaks down."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.lazy:
            return super().piece_derivative(k, u)
        T = self.transform
        a, b = T.interval(k)
        x = np.clip(self.base.quantile(u), a, b)
        with np.errstate(all='ignore'):
            y = T.piece(k)(x)
            out = self._transformed_density(y) * T.piece_derivative(k, x) / self.base.pdf(x)
        bad = ~np.isfinite(out) | (out == 0)
        if np.any(bad):
            out[bad] = super().piece_derivative(k, u[bad])
        return out

    @property
    def n_pieces(self) -> int:
        return len(self.increasing)

    def describe(self):
        return {'type': 'generic', 'base': self.base.describe(), 'T': self.transform.describe()}


def _same_end(a, b):
    return a == b or abs(a - b) <= 1e-12


def build(F_X: BaseDistribution, T: PcsmFunction, tail: Callable = None,
          max_pieces: int = None) -> WTransform:
    """
    W-transform of (F_X, T). F_X must be continuous with support [t_0, t_K].
    tail(y, n) may supply the exact F_X-mass below y of pieces beyond n.
    """
    if not F_X.is_continuous:
        raise ConstructionError(
            "F_X has atoms and W would not preserve uniformity; use build_generalised"
        )
    lo, hi = F_X.support
    t0, tK = T.domain
    if not (_same_end(lo, t0) and _same_end(hi, tK)):
        raise ConstructionError(
            f"Support [{lo}, {hi}] of F_X does not match the domain [{t0}, {tK}] of T"
        )
    W = WTransform(F_X, T, tail=tail, max_pieces=max_pieces)
    logger.debug(f"Built W-transform with {W.n_pieces} pieces, deltas={np.round(W.deltas, 6).tolist()}")
    return W


# ============================================================================
# EXPLICIT TRANSFORMS
# ============================================================================

class ExplicitWTransform(BaseWTransform):
    """
    A uniformity-preserving map given directly by its pieces on [0, 1].
    It coincides with build(U(0, 1), T) for T = the same pieces.
    """

    def __init__(self, deltas: Sequence[float], pieces: Sequence[PieceSpec], check: bool = True):
        self.map = PcsmFunction(deltas, pieces)
        self.deltas = np.asarray(deltas, dtype=float)
        if self.deltas[0] != 0.0 or self.deltas[-1] != 1.0:
            raise ConstructionError("Explicit W-transforms live on [0, 1]")
        self.increasing = np.array([p.increasing for p in pieces])
        if check:
            levels = np.linspace(0.05, 0.95, 19)
            total = self.preimage_lengths(levels).sum(axis=0)
            worst = float(np.max(np.abs(total - levels)))
            if worst > 1e-8:
                raise ConstructionError(f"Map is not uniformity-preserving (partition defect {worst:.3g})")

    def piece_eval(self, k: int, u):
        with np.errstate(all='ignore'):
            return np.clip(self.map.piece(k)(u), 0.0, 1.0)

    def piece_inverse(self, k: int, v):
        arr = np.asarray(v, dtype=float)
        out = self.map.clamped_inverse(k, arr)
        return float(out) if arr.ndim == 0 else out

    def piece_derivative(self, k: int, u):
        return np.asarray(self.map.piece_derivative(k, np.asarray(u, dtype=float)), dtype=float)

    def as_pcsm(self) -> PcsmFunction:
        return self.map

    def describe(self):
        return {'type': 'explicit', **self.map.describe()}


class PiecewiseLinearWTransform(ExplicitWTransform):
    """Piecewise linear W-transform; the self-maps handled by `periodicity`."""

    def __init__(self, deltas, slopes, intercepts, check: bool = True):
        self.slopes = np.asarray(slopes, dtype=float)
        self.intercepts = np.asarray(intercepts, dtype=float)
        pieces = [LinearPiece(s, c) for s, c in zip(self.slopes, self.intercepts)]
        super().__init__(deltas, pieces, check=check)

    def piece_inverse_derivative(self, k: int, v):
        return np.full(np.shape(v), 1.0 / abs(self.slopes[k - 1]))

    def describe(self):
        return {'type': 'linear', 'deltas': self.deltas.tolist(),
                'slopes': self.slopes.tolist(), 'intercepts': self.intercepts.tolist()}


def reflection_transform(delta: float) -> PiecewiseLinearWTransform:
    """W(u; delta): 1 - u/delta then (u - delta)/(1 - delta); identity at 0, 1 - u at 1."""
    if delta <= 0.0:
        return PiecewiseLinearWTransform([0.0, 1.0], [1.0], [0.0])
    if delta >= 1.0:
        return PiecewiseLinearWTransform([0.0, 1.0], [-1.0], [1.0])
    return PiecewiseLinearWTransform(
        [0.0, delta, 1.0],
        [-1.0 / delta, 1.0 / (1.0 - delta)],
        [1.0, -delta / (1.0 - delta)],
    )


def flipped_v_transform(delta: float) -> PiecewiseLinearWTransform:
    """1 - V for the linear v-transform: u/delta then (1 - u)/(1 - delta)."""
    return PiecewiseLinearWTransform(
        [0.0, delta, 1.0],
        [1.0 / delta, -1.0 / (1.0 - delta)],
        [0.0, 1.0 / (1.0 - delta)],
    )


# ============================================================================
# V-TRANSFORMS FROM GENERATORS
# ============================================================================

class Generator:
    """Continuous strictly increasing cdf G on [0, 1]."""

    name = None

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, p):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def describe(self):
        return {'kind': self.name}


class LinearGenerator(Generator):
    name = 'linear'

    def cdf(self, x):
        return np.asarray(x, dtype=float)

    def quantile(self, p):
        return np.asarray(p, dtype=float)

    def pdf(self, x):
        return np.ones(np.shape(x))


class ExpPowerGenerator(Generator):
    """G(x) = exp(-kappa (-ln x)^xi)."""

    name = 'exp_power'

    def __init__(self, kappa: float = 2.0, xi: float = 0.5):
        if kappa <= 0 or xi <= 0:
            raise ConstructionError("exp_power generator needs kappa > 0 and xi > 0")
        self.kappa, self.xi = float(kappa), float(xi)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.exp(-self.kappa * np.power(-np.log(x), self.xi))
        return np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, out))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.exp(-np.power(-np.log(p) / self.kappa, 1.0 / self.xi))
        return np.where(p <= 0.0, 0.0, np.where(p >= 1.0, 1.0, out))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore', invalid='ignore'):
            s = -np.log(x)
            return self.cdf(x) * self.kappa * self.xi * np.power(s, self.xi - 1.0) / x

    def describe(self):
        return {'kind': self.name, 'kappa': self.kappa, 'xi': self.xi}


class SqrtMixGenerator(Generator):
    """G(x) = (4 sqrt(x) - x) / 3, the generator of the squared-base v-transform."""

    name = 'sqrt_mix'

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return (4.0 * np.sqrt(x) - x) / 3.0

    def quantile(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        return np.square(2.0 - np.sqrt(4.0 - 3.0 * p))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore'):
            return (2.0 / np.sqrt(x) - 1.0) / 3.0


GENERATORS = {cls.name: cls for cls in (LinearGenerator, ExpPowerGenerator, SqrtMixGenerator)}


class VTransform(ExplicitWTransform):
    """
    v-transform with fulcrum delta from its generator:
      V(x) = (1 - x) - (1 - delta) G(x / delta)      on [0, delta]
      V(x) = x - delta G^{-1}((1 - x) / (1 - delta))  on (delta, 1]
    """

    def __init__(self, delta: float, generator: Generator = None):
        if not 0.0 < delta < 1.0:
            raise ConstructionError("Fulcrum delta must lie in (0, 1)")
        self.delta = float(delta)
        self.generator = generator or LinearGenerator()
        d, G = self.delta, self.generator

        left = GenericPiece(
            lambda x: (1.0 - x) - (1.0 - d) * G.cdf(x / d),
            increasing=False,
            derivative=lambda x: -1.0 - (1.0 - d) / d * G.pdf(x / d),
            bounds=(0.0, d),
        )
        right = GenericPiece(
            lambda x: x - d * G.quantile((1.0 - x) / (1.0 - d)),
            increasing=True,
            derivative=lambda x: 1.0 + d / ((1.0 - d) * G.pdf(G.quantile((1.0 - x) / (1.0 - d)))),
            bounds=(d, 1.0),
        )
        super().__init__([0.0, d, 1.0], [left, right], check=False)

    def left_inverse(self, v):
        """Inverse of the left branch, V^{-1}: (0, 1] -> [0, delta)."""
        return self.piece_inverse(1, v)

    def describe(self):
        return {'type': 'vtransform', 'delta': self.delta, 'generator': self.generator.describe()}


# ============================================================================
# PSSM FAMILY
# ============================================================================

@dataclass
class BoundaryDerivative:
    value: float
    applicable: bool
    converged: bool
    message: str = ''


class PssmWTransform(BaseWTransform):
    """
    Piecewise surjective strictly monotone W-transforms on [0, 1].
    Each piece of T is the linear bijection of (t_{k-1}, t_k] onto [0, 1],
    increasing when r_k = 1 and decreasing when r_k = 0.
    """

    def __init__(self, t: Sequence[float], r: Sequence[int], base: BaseDistribution = None):
        self.t = np.asarray(t, dtype=float)
        self.r = np.asarray(r, dtype=int)
        self.base = base or Uniform(0.0, 1.0)
        if self.t[0] != 0.0 or self.t[-1] != 1.0 or np.any(np.diff(self.t) <= 0):
            raise ConstructionError("pssm knots must satisfy 0 = t_0 < ... < t_K = 1")
        if self.r.size != self.t.size - 1 or np.any((self.r != 0) & (self.r != 1)):
            raise ConstructionError("pssm needs one direction flag in {0, 1} per piece")
        if self.base.support != (0.0, 1.0) or not self.base.is_continuous:
            raise ConstructionError("pssm base must be continuous on [0, 1]")
        self.lengths = np.diff(self.t)
        self.deltas = np.asarray(self.base.cdf(self.t), dtype=float)
        self.deltas[0], self.deltas[-1] = 0.0, 1.0
        self.increasing = self.r == 1
        self._F_lo = np.asarray(self.base.cdf(self.t[:-1]), dtype=float)
        self._F_hi = np.asarray(self.base.cdf(self.t[1:]), dtype=float)

    def level_cdf(self, tau):
        """
        F_{T(X)}(tau): the two-factor product form, one factor active per piece.
        """
        tau = np.asarray(tau, dtype=float)[..., None]
        t_lo, t_hi, r = self.t[:-1], self.t[1:], self.r
        F = self.base.cdf
        rising = np.asarray(F(tau * t_hi + (1.0 - tau) * t_lo), dtype=float) - self._F_lo
        falling = self._F_hi - np.asarray(F(tau * t_lo + (1.0 - tau) * t_hi), dtype=float)
        terms = np.power(np.maximum(rising, 0.0), r) * np.power(np.maximum(falling, 0.0), 1 - r)
        return terms.sum(axis=-1)

    def level_density(self, tau):
        tau = np.asarray(tau, dtype=float)[..., None]
        t_lo, t_hi = self.t[:-1], self.t[1:]
        x = np.where(self.r == 1, t_lo + tau * self.lengths, t_hi - tau * self.lengths)
        with np.errstate(invalid='ignore'):
            return (np.asarray(self.base.pdf(x), dtype=float) * self.lengths).sum(axis=-1)

    def level(self, k: int, u):
        """tau = T(F_X^{-1}(u)) on piece k."""
        x = np.clip(self.base.quantile(np.asarray(u, dtype=float)), self.t[k - 1], self.t[k])
        L = self.lengths[k - 1]
        return (x - self.t[k - 1]) / L if self.r[k - 1] == 1 else (self.t[k] - x) / L

    def pssm_eval(self, u):
        arr = _check_unit(u)
        flat = np.atleast_1d(arr)
        k = np.atleast_1d(self.piece_of(flat))
        tau = np.empty_like(flat)
        for piece in np.unique(k):
            mask = k == piece
            tau[mask] = self.level(int(piece), flat[mask])
        out = np.clip(self.level_cdf(tau), 0.0, 1.0)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    eval = pssm_eval

    def piece_eval(self, k: int, u):
        return np.clip(self.level_cdf(self.level(k, u)), 0.0, 1.0)

    def level_quantile(self, v):
        v = np.asarray(v, dtype=float)
        lo, hi = np.zeros(v.shape), np.ones(v.shape)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.level_cdf(mid) < v
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return hi

    def piece_inverse(self, k: int, v):
        arr = np.asarray(v, dtype=float)
        tau = self.level_quantile(np.clip(arr, 0.0, 1.0))
        tau = np.where(arr <= 0.0, 0.0, tau)
        L = self.lengths[k - 1]
        x = self.t[k - 1] + tau * L if self.r[k - 1] == 1 else self.t[k] - tau * L
        u = np.clip(np.asarray(self.base.cdf(x), dtype=float), self.deltas[k - 1], self.deltas[k])
        return float(u) if arr.ndim == 0 else u

    def piece_inverses(self, v):
        arr = np.atleast_1d(np.asarray(v, dtype=float))
        tau = np.where(arr <= 0.0, 0.0, self.level_quantile(np.clip(arr, 0.0, 1.0)))
        x = np.where((self.r == 1)[:, None],
                     self.t[:-1, None] + tau * self.lengths[:, None],
                     self.t[1:, None] - tau * self.lengths[:, None])
        u = np.asarray(self.base.cdf(x), dtype=float)
        return np.clip(u, self.deltas[:-1, None], self.deltas[1:, None])

    def piece_derivative(self, k: int, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        tau = self.level(k, u)
        x = np.clip(self.base.quantile(u), self.t[k - 1], self.t[k])
        sign = 1.0 if self.r[k - 1] == 1 else -1.0
        with np.errstate(all='ignore'):
            out = sign * self.level_density(tau) / (self.lengths[k - 1] * self.base.pdf(x))
        bad = ~np.isfinite(out) | (out == 0)
        if np.any(bad):
            out[bad] = super().piece_derivative(k, u[bad])
        return out

    def to_generic(self) -> WTransform:
        """The same map through the generic (F_X, T) path."""
        pieces = []
        for k, (a, b) in enumerate(zip(self.t[:-1], self.t[1:])):
            L = b - a
            if self.r[k] == 1:
                pieces.append(LinearPiece(1.0 / L, -a / L))
            else:
                pieces.append(LinearPiece(-1.0 / L, b / L))
        return build(self.base, PcsmFunction(self.t, pieces))

    def boundary_weights(self, end: int):
        """
        Limits of (W^{-1}_{|k})' at level 0 (end=0) or 1 (end=1) for all pieces;
        infinite densities share the whole weight.
        """
        x = self.t[:-1] if end == 0 else self.t[1:]
        x = np.where(self.r == 1, x, self.t[1:] if end == 0 else self.t[:-1])
        with np.errstate(invalid='ignore'):
            dens = np.asarray(self.base.pdf(x), dtype=float) * self.lengths
        if np.any(np.isinf(dens)):
            dens = np.where(np.isinf(dens), 1.0, 0.0)
        return dens / dens.sum()

    def describe(self):
        return {'type': 'pssm', 't': self.t.tolist(), 'r': self.r.tolist(), 'base': self.base.describe()}


def pssm_boundary_derivative(P: PssmWTransform, end: int) -> BoundaryDerivative:
    """
    One-sided derivative of W at 0 or 1 as a Richardson-extrapolated limit of
    difference quotients. When every piece increases and f_X diverges at the
    endpoint while staying finite inside, the limit is 1.
    """
    if end not in (0, 1):
        raise DomainError("end must be 0 or 1")
    K = P.n_pieces
    if end == 0:
        anchor = float(P.piece_eval(1, 0.0))

        def quotient(h):
            return abs(float(P.piece_eval(1, h)) - anchor) / h
    else:
        anchor = float(P.piece_eval(K, 1.0))

        def quotient(h):
            return abs(anchor - float(P.piece_eval(K, 1.0 - h))) / h

    steps = [10.0 ** -m for m in range(2, 8)]
    table = [quotient(h) for h in steps]
    while len(table) > 1:
        table = [(10.0 * fine - coarse) / 9.0 for coarse, fine in zip(table[:-1], table[1:])]
    value = table[0]

    inside = np.linspace(0.01, 0.99, 99)
    with np.errstate(divide='ignore'):
        edge_density = float(P.base.pdf(np.float64(end)))
    diverges = np.isinf(edge_density)
    finite_inside = bool(np.all(np.isfinite(P.base.pdf(inside))))
    applicable = bool(np.all(P.r == 1)) and diverges and finite_inside
    if not applicable:
        return BoundaryDerivative(value, False, False, 'lemma inapplicable')
    converged = abs(value - 1.0) <= 1e-3
    if not converged:
        logger.warning(f"Boundary derivative at {end} extrapolates to {value:.6g}, expected 1")
    return BoundaryDerivative(value, True, converged, '')


# ============================================================================
# INN TRANSFORM
# ============================================================================

class InnTransform(ExplicitWTransform):
    """
    Two increasing pieces on [0, 1/2] and (1/2, 1]:
      W(u) = (sqrt(theta u + 1) - 1) / D                 u <= 1/2
      W(u) = theta (2u - 1) / (A + sqrt(A^2 + 2 theta D^2 (1 - 2u)))   u > 1/2
    with D = sqrt(theta/2 + 1) - 1 and A = theta - 2D. The second branch is
    the rationalised form of (theta - 2D - sqrt(...)) / (2 D^2); as theta -> 0
    the map tends to 2u - ceil(2u - 1).
    """

    def __init__(self, theta: float):
        if not theta > 0:
            raise ConstructionError("Inn transform needs theta > 0")
        self.theta = float(theta)
        th = self.theta
        D = np.expm1(0.5 * np.log1p(0.5 * th))
        A = th - 2.0 * D
        self.D, self.A = D, A

        def left(u):
            return np.expm1(0.5 * np.log1p(th * u)) / D

        def left_inv(v):
            return D * v * (D * v + 2.0) / th

        def left_der(u):
            return th / (2.0 * D * np.sqrt(1.0 + th * u))

        def right(u):
            root = np.sqrt(np.maximum(A * A + 2.0 * th * D * D * (1.0 - 2.0 * u), 0.0))
            return th * (2.0 * u - 1.0) / (A + root)

        def right_inv(v):
            return 0.5 + v * (A - D * D * v) / th

        def right_der(u):
            root = np.sqrt(np.maximum(A * A + 2.0 * th * D * D * (1.0 - 2.0 * u), 0.0))
            return th / root

        pieces = [
            GenericPiece(left, True, inverse=left_inv, derivative=left_der, bounds=(0.0, 0.5)),
            GenericPiece(right, True, inverse=right_inv, derivative=right_der, bounds=(0.5, 1.0)),
        ]
        super().__init__([0.0, 0.5, 1.0], pieces, check=False)

    def component_maps(self, v):
        """
        G_k(v) = (W^{-1}_{|k}(v) - d_{k-1}) / (d_k - d_{k-1}) and their derivatives g_k(v).
        """
        v = np.asarray(v, dtype=float)
        th, D, A = self.theta, self.D, self.A
        G1 = 2.0 * D * v * (D * v + 2.0) / th
        g1 = 4.0 * D * (D * v + 1.0) / th
        G2 = 2.0 * v * (A - D * D * v) / th
        g2 = 2.0 * (A - 2.0 * D * D * v) / th
        return (G1, G2), (g1, g2)

    def piece_inverse_derivative(self, k: int, v):
        _, (g1, g2) = self.component_maps(v)
        return 0.5 * (g1 if k == 1 else g2)

    def describe(self):
        return {'type': 'inn', 'theta': self.theta}


def ceiling_transform(pieces: int = 2) -> PiecewiseLinearWTransform:
    """K u - ceil(K u) + 1: K increasing linear pieces (2u - ceil(2u - 1) for K = 2)."""
    deltas = np.linspace(0.0, 1.0, pieces + 1)
    slopes = np.full(pieces, float(pieces))
    intercepts = -np.arange(pieces, dtype=float)
    return PiecewiseLinearWTransform(deltas, slopes, intercepts)
