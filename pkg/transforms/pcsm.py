"""
Piecewise continuous strictly monotone (pcsm) functions T
Pieces own their right endpoint: piece k lives on (t_{k-1}, t_k], t_0 belongs to piece 1.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence
import logging
import math

import numpy as np

from .conf import get_setting
from .exceptions import ConstructionError, DomainError, PreconditionError, RangeError

logger = logging.getLogger(__name__)


# ============================================================================
# PIECE FORMS
# ============================================================================

class PieceSpec:
    """
    One monotone branch. __call__ evaluates the closed form on the whole
    closed interval, so limits at the change points come for free.
    """

    form = None
    has_inverse = True

    def __init__(self, increasing: bool):
        self.increasing = bool(increasing)

    def __call__(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def derivative(self, x):
        h = 1e-7 * np.maximum(1.0, np.abs(x))
        return (self(x + h) - self(x - h)) / (2.0 * h)

    def describe(self) -> Dict:
        raise NotImplementedError


class LinearPiece(PieceSpec):
    form = 'linear'

    def __init__(self, slope: float, intercept: float):
        self.slope = float(slope)
        self.intercept = float(intercept)
        super().__init__(self.slope > 0)

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept

    def inverse(self, y):
        with np.errstate(divide='ignore', invalid='ignore'):
            return (np.asarray(y, dtype=float) - self.intercept) / self.slope

    def derivative(self, x):
        return np.full(np.shape(x), self.slope)

    def describe(self):
        return {'form': self.form, 'slope': self.slope, 'intercept': self.intercept}


class AbsPiece(PieceSpec):
    """scale * |x - center| + offset on one side of the kink."""

    form = 'abs'

    def __init__(self, center: float = 0.0, scale: float = 1.0, offset: float = 0.0, increasing: bool = True):
        self.center = float(center)
        self.scale = float(scale)
        self.offset = float(offset)
        super().__init__(increasing)
        # right branch increases iff scale > 0
        self._side = 1.0 if (self.increasing == (self.scale > 0)) else -1.0

    def __call__(self, x):
        return self.scale * np.abs(np.asarray(x, dtype=float) - self.center) + self.offset

    def inverse(self, y):
        return self.center + self._side * np.abs((np.asarray(y, dtype=float) - self.offset) / self.scale)

    def derivative(self, x):
        return np.full(np.shape(x), self._side * self.scale)

    def describe(self):
        return {'form': self.form, 'center': self.center, 'scale': self.scale,
                'offset': self.offset, 'increasing': self.increasing}


class ExpQuadPiece(PieceSpec):
    """exp(scale * (x - center)^2) on one side of center."""

    form = 'exp_quad'

    def __init__(self, scale: float = 3.0, center: float = 0.25, increasing: bool = True):
        self.scale = float(scale)
        self.center = float(center)
        super().__init__(increasing)
        self._side = 1.0 if self.increasing == (self.scale > 0) else -1.0

    def __call__(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return np.exp(self.scale * d * d)

    def inverse(self, y):
        with np.errstate(invalid='ignore', divide='ignore'):
            r = np.sqrt(np.maximum(np.log(np.asarray(y, dtype=float)) / self.scale, 0.0))
        return self.center + self._side * r

    def derivative(self, x):
        d = np.asarray(x, dtype=float) - self.center
        return 2.0 * self.scale * d * np.exp(self.scale * d * d)

    def describe(self):
        return {'form': self.form, 'scale': self.scale, 'center': self.center, 'increasing': self.increasing}


class ReciprocalPiece(PieceSpec):
    """numerator / x + offset, for x on one side of zero."""

    form = 'reciprocal'

    def __init__(self, numerator: float = 1.0, offset: float = 0.0):
        self.numerator = float(numerator)
        self.offset = float(offset)
        super().__init__(self.numerator < 0)

    def __call__(self, x):
        with np.errstate(divide='ignore'):
            return self.numerator / np.asarray(x, dtype=float) + self.offset

    def inverse(self, y):
        with np.errstate(divide='ignore'):
            return self.numerator / (np.asarray(y, dtype=float) - self.offset)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore'):
            return -self.numerator / (x * x)

    def describe(self):
        return {'form': self.form, 'numerator': self.numerator, 'offset': self.offset}


class FracSquarePiece(PieceSpec):
    """x^2 - n on (sqrt(n), sqrt(n+1)], i.e. x^2 - ceil(x^2) + 1 there."""

    form = 'frac_square'

    def __init__(self, n: int):
        self.n = int(n)
        super().__init__(True)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x * x - self.n

    def inverse(self, y):
        return np.sqrt(np.asarray(y, dtype=float) + self.n)

    def derivative(self, x):
        return 2.0 * np.asarray(x, dtype=float)

    def describe(self):
        return {'form': self.form, 'n': self.n}


class GenericPiece(PieceSpec):
    """
    Arbitrary callable with a declared direction. Without an inverse the
    piece is inverted by bisection inside `bounds` (or the piece interval).
    """

    form = 'generic'

    def __init__(self, func: Callable, increasing: bool, inverse: Callable = None,
                 derivative: Callable = None, bounds: Sequence[float] = None):
        super().__init__(increasing)
        self.func = func
        self._inverse = inverse
        self._derivative = derivative
        self.bounds = tuple(bounds) if bounds is not None else None
        self.has_inverse = inverse is not None

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def inverse(self, y):
        if self._inverse is None:
            raise NotImplementedError("Generic piece without closed-form inverse")
        return np.asarray(self._inverse(np.asarray(y, dtype=float)), dtype=float)

    def derivative(self, x):
        if self._derivative is not None:
            return np.asarray(self._derivative(np.asarray(x, dtype=float)), dtype=float)
        return super().derivative(x)

    def describe(self):
        return {'form': self.form, 'increasing': self.increasing}


PIECE_FORMS = {
    'linear': LinearPiece,
    'abs': AbsPiece,
    'exp_quad': ExpQuadPiece,
    'reciprocal': ReciprocalPiece,
    'frac_square': FracSquarePiece,
}


def bisect_monotone(func, y, lo, hi, increasing, tol=None):
    """
    Vectorised bisection for func(x) = y on [lo, hi], func monotone.
    Stops when the bracket is below tol * max(1, hi - lo).
    """
    y = np.asarray(y, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), y.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), y.shape).copy()
    tol = get_setting('BISECTION_TOL') if tol is None else tol
    width = tol * np.maximum(1.0, hi - lo)
    for _ in range(200):
        if not np.any(hi - lo > width):
            break
        mid = 0.5 * (lo + hi)
        fm = func(mid)
        below = fm < y if increasing else fm > y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _finite_bracket(a, b):
    """Finite stand-ins for infinite interval ends, used by bisection and sampling."""
    if np.isfinite(a) and np.isfinite(b):
        return a, b
    if not np.isfinite(a) and not np.isfinite(b):
        return -1e12, 1e12
    if not np.isfinite(b):
        return a, a + 1e12
    return b - 1e12, b


# ============================================================================
# PCSM FUNCTIONS
# ============================================================================

@dataclass
class ValidationReport:
    n_pieces: Optional[int]
    directions: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.violations


class PcsmFunction:
    """
    T with finitely many pieces.

    point_values overrides T at single change points; a pcsm function may
    take any value there.
    """

    lazy = False

    def __init__(self, change_points: Sequence[float], pieces: Sequence[PieceSpec],
                 point_values: Dict[float, float] = None):
        self.change_points = np.asarray(change_points, dtype=float)
        self.pieces = list(pieces)
        if self.change_points.ndim != 1 or self.change_points.size < 2:
            raise ConstructionError("Need at least two change points")
        if np.any(np.diff(self.change_points) <= 0):
            raise ConstructionError("Change points must be strictly increasing")
        if len(self.pieces) != self.change_points.size - 1:
            raise ConstructionError(
                f"{self.change_points.size - 1} intervals but {len(self.pieces)} pieces"
            )
        self.point_values = {float(k): float(v) for k, v in (point_values or {}).items()}

    # ------------------------------------------------------------------
    @property
    def n_pieces(self) -> Optional[int]:
        return len(self.pieces)

    @property
    def domain(self):
        return float(self.change_points[0]), float(self.change_points[-1])

    @property
    def directions(self) -> List[bool]:
        return [p.increasing for p in self.pieces]

    def change_point(self, k: int) -> float:
        return float(self.change_points[k])

    def piece(self, k: int) -> PieceSpec:
        return self.pieces[k - 1]

    def interval(self, k: int):
        return self.change_point(k - 1), self.change_point(k)

    # ------------------------------------------------------------------
    def _check_domain(self, x):
        lo, hi = self.domain
        if np.any(np.isnan(x)) or np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"x outside the domain [{lo}, {hi}] of T")

    def piece_of(self, x):
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        k = np.maximum(np.searchsorted(self.change_points, arr, side='left'), 1)
        return int(k) if arr.ndim == 0 else k

    def eval(self, x):
        arr = np.asarray(x, dtype=float)
        k = np.atleast_1d(self.piece_of(arr))
        flat = np.atleast_1d(arr)
        out = np.empty_like(flat)
        for piece_index in np.unique(k):
            mask = k == piece_index
            with np.errstate(all='ignore'):
                out[mask] = self.piece(int(piece_index))(flat[mask])
        for loc, value in self.point_values.items():
            out = np.where(flat == loc, value, out)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def __call__(self, x):
        return self.eval(x)

    def piece_range(self, k: int):
        """Closure of the range of piece k as (low, high)."""
        a, b = self.interval(k)
        with np.errstate(all='ignore'):
            ya, yb = float(self.piece(k)(a)), float(self.piece(k)(b))
        return (ya, yb) if ya <= yb else (yb, ya)

    def piece_inverse(self, k: int, y):
        arr = np.asarray(y, dtype=float)
        lo, hi = self.piece_range(k)
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(arr < lo - slack) or np.any(arr > hi + slack):
            raise RangeError(f"y outside the range [{lo}, {hi}] of piece {k}")
        out = self.clamped_inverse(k, arr)
        return float(out) if arr.ndim == 0 else out

    def clamped_inverse(self, k: int, y):
        """
        Inverse of piece k extended to all y: values beyond the range map to
        the interval endpoint where the piece attains that side.
        """
        piece = self.piece(k)
        a, b = self.interval(k)
        lo, hi = self.piece_range(k)
        yc = np.clip(np.asarray(y, dtype=float), lo, hi)
        if piece.has_inverse:
            with np.errstate(all='ignore'):
                x = piece.inverse(yc)
        else:
            bounds = piece.bounds or _finite_bracket(a, b)
            x = bisect_monotone(piece, yc, max(bounds[0], a), min(bounds[1], b), piece.increasing)
        x = np.clip(x, a, b)
        # exact endpoints at the range ends
        at_low = yc <= lo
        at_high = yc >= hi
        start, end = (a, b) if piece.increasing else (b, a)
        x = np.where(at_low, start, np.where(at_high, end, x))
        return x

    def piece_derivative(self, k: int, x):
        return self.piece(k).derivative(x)

    def describe(self) -> Dict:
        out = {
            'change_points': self.change_points.tolist(),
            'pieces': [p.describe() for p in self.pieces],
        }
        if self.point_values:
            out['point_values'] = {repr(k): v for k, v in self.point_values.items()}
        return out

    def summation_pieces(self, base=None):
        """Pieces contributing to F_{T(X)}; finite functions use all of them."""
        return list(range(1, self.n_pieces + 1)), None


class PieceFamily:
    """
    Countable family of pieces generated on demand.
    Subclasses provide change_point(k) for k >= 0 and piece(k) for k >= 1;
    locate(x) and the vectorised evaluate/inverse are optional speed-ups.
    """

    def change_point(self, k: int) -> float:
        raise NotImplementedError

    def piece(self, k: int) -> PieceSpec:
        raise NotImplementedError

    def locate(self, x):
        return None


class FracSquareFamily(PieceFamily):
    """T(x) = x^2 - ceil(x^2) + 1 on [1, inf), change points sqrt(k+1)."""

    def change_point(self, k: int) -> float:
        return math.sqrt(k + 1)

    def piece(self, k: int) -> PieceSpec:
        return FracSquarePiece(k)

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(invalid='ignore'):
            k = np.ceil(x * x) - 1.0
        return np.maximum(k, 1).astype(np.int64)

    def evaluate(self, k, x):
        x = np.asarray(x, dtype=float)
        return x * x - k


class LazyPcsmFunction(PcsmFunction):
    """
    T with countably many pieces. Consumers sum over pieces until the
    remaining F_X mass is below TRUNCATION_TOL or MAX_LAZY_PIECES is hit.
    """

    lazy = True

    def __init__(self, family: PieceFamily, upper: float = np.inf):
        self.family = family
        self.upper = float(upper)
        self.point_values = {}
        self._cache: Dict[int, PieceSpec] = {}
        self._points = [family.change_point(0)]

    @property
    def n_pieces(self):
        return None

    @property
    def domain(self):
        return float(self._points[0]), self.upper

    @property
    def directions(self):
        return [self.piece(k).increasing for k in range(1, 17)]

    @property
    def change_points(self):
        return np.asarray(self._points)

    def _extend_to(self, k: int):
        while len(self._points) <= k:
            self._points.append(self.family.change_point(len(self._points)))

    def change_point(self, k: int) -> float:
        self._extend_to(k)
        return float(self._points[k])

    def piece(self, k: int) -> PieceSpec:
        if k not in self._cache:
            self._cache[k] = self.family.piece(k)
        return self._cache[k]

    def piece_of(self, x):
        arr = np.asarray(x, dtype=float)
        self._check_domain(arr)
        k = self.family.locate(arr)
        if k is None:
            flat = np.atleast_1d(arr)
            top = np.max(flat[np.isfinite(flat)], initial=self._points[0])
            while self._points[-1] < top:
                self._extend_to(2 * len(self._points))
            k = np.maximum(np.searchsorted(np.asarray(self._points), flat, side='left'), 1)
            k = k.reshape(arr.shape)
        return int(k) if arr.ndim == 0 else k

    def eval(self, x):
        evaluate = getattr(self.family, 'evaluate', None)
        if evaluate is None:
            return super().eval(x)
        arr = np.asarray(x, dtype=float)
        out = evaluate(self.piece_of(arr), arr)
        return float(out) if arr.ndim == 0 else out

    def summation_pieces(self, base=None):
        """
        First K pieces with 1 - F_X(t_K) below the truncation tolerance,
        capped at MAX_LAZY_PIECES. Returns (indices, remaining tail bound).
        """
        cap = int(get_setting('MAX_LAZY_PIECES'))
        tol = get_setting('TRUNCATION_TOL')
        count = cap
        tail = 0.0
        if base is not None:
            for k in range(1, cap + 1):
                tail = 1.0 - float(base.cdf(self.change_point(k)))
                if tail < tol:
                    count = k
                    break
        return list(range(1, count + 1)), tail

    def describe(self):
        return {'lazy': type(self.family).__name__}


# ============================================================================
# OPERATIONS
# ============================================================================

def _sample_points(a, b, n=256):
    a, b = _finite_bracket(a, b)
    s = (np.arange(1, n + 1) - 0.5) / n
    return a + s * (b - a)


def validate(T: PcsmFunction, samples: int = 256, lazy_pieces: int = 64) -> ValidationReport:
    """
    Sample-based check that every piece is strictly monotone in its declared
    direction and never constant. Empty violations means valid.
    """
    count = T.n_pieces if T.n_pieces is not None else lazy_pieces
    report = ValidationReport(n_pieces=T.n_pieces)
    for k in range(1, count + 1):
        piece = T.piece(k)
        a, b = T.interval(k)
        report.directions.append('inc' if piece.increasing else 'dec')
        x = _sample_points(a, b, samples)
        with np.errstate(all='ignore'):
            values = np.asarray(piece(x), dtype=float)
        if not np.all(np.isfinite(values)):
            report.violations.append(f"piece {k}: non-finite values inside ({a}, {b})")
            continue
        steps = np.diff(values)
        flat = np.flatnonzero(steps == 0)
        if flat.size:
            report.violations.append(f"piece {k}: constant plateau near x={x[flat[0]]:.6g}")
        wrong = np.flatnonzero(steps < 0) if piece.increasing else np.flatnonzero(steps > 0)
        if wrong.size:
            direction = 'increasing' if piece.increasing else 'decreasing'
            report.violations.append(
                f"piece {k}: not {direction} between x={x[wrong[0]]:.6g} and x={x[wrong[0] + 1]:.6g}"
            )
    if report.violations:
        logger.info(f"pcsm validation found {len(report.violations)} violation(s)")
    return report


def compose(outer, inner) -> PcsmFunction:
    """
    outer o inner for two transforms on [0, 1], as a pcsm function on [0, 1].
    Change points are inner's deltas plus inner's preimages of outer's deltas.
    """
    points = set(float(d) for d in inner.deltas)
    for k in range(1, inner.n_pieces + 1):
        for d in outer.deltas[1:-1]:
            u = float(inner.piece_inverse(k, d))
            a, b = inner.deltas[k - 1], inner.deltas[k]
            if a < u < b:
                points.add(u)
    cuts = np.array(sorted(points))
    cuts = cuts[np.concatenate([[True], np.diff(cuts) > 1e-13])]

    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        k_in = int(np.searchsorted(inner.deltas, mid, side='left'))
        k_out = int(np.searchsorted(outer.deltas, float(inner.piece_eval(k_in, mid)), side='left'))
        k_out = max(k_out, 1)
        increasing = inner.increasing[k_in - 1] == outer.increasing[k_out - 1]

        def func(x, k_in=k_in, k_out=k_out):
            return outer.piece_eval(k_out, inner.piece_eval(k_in, x))

        pieces.append(GenericPiece(func, increasing, bounds=(a, b)))
    logger.info(f"Composed transform has {len(pieces)} pieces")
    return PcsmFunction(cuts, pieces)


def periodicity(W, p_max: int = 64, grid_size: int = 10007, tol: float = 1e-8) -> Optional[int]:
    """
    Least p <= p_max with W^p = id off the breakpoints, or None.
    W must be a bijective piecewise linear map with unit slopes; any other
    map cannot be periodic.
    """
    slopes = np.asarray(W.slopes, dtype=float)
    if np.any(np.abs(np.abs(slopes) - 1.0) > 1e-12):
        raise PreconditionError("Periodic piecewise linear maps need |slope| = 1 on every piece")
    deltas = np.asarray(W.deltas, dtype=float)
    images = np.array([sorted((float(W.piece_eval(k, deltas[k - 1])), float(W.piece_eval(k, deltas[k]))))
                       for k in range(1, deltas.size)])
    images = images[np.argsort(images[:, 0])]
    if (abs(images[0, 0]) > 1e-12 or abs(images[-1, 1] - 1.0) > 1e-12
            or np.any(np.abs(images[1:, 0] - images[:-1, 1]) > 1e-12)):
        raise PreconditionError("Map is not a bijection of [0, 1]; it cannot be periodic")

    x = (np.arange(grid_size) + 0.5) / grid_size
    for d in deltas:
        close = np.abs(x - d) < 1e-9
        x = np.where(close, d + 2e-9, x)
    y = x.copy()
    for p in range(1, p_max + 1):
        y = W.eval(y)
        if np.max(np.abs(y - x)) < tol:
            return p
    return None
