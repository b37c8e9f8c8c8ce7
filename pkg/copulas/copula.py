"""
Base Copulas
Independence, Clayton, Gumbel and its survival copula, Gaussian and Student t,
the Maltese non-exchangeability fixture, ordinal sums and Khoudraji composites.

Points are arrays of shape (d,) or (n, d); a single point returns a float.
"""

from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Sequence
import logging
import math

import numpy as np
from scipy import stats
from scipy.integrate import quad_vec
from scipy.special import ndtr, ndtri

from transforms.conf import get_setting
from transforms.exceptions import ConstructionError, DomainError, PreconditionError

logger = logging.getLogger(__name__)


def _points(u, dim: int):
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 1
    pts = np.atleast_2d(arr)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise DomainError(f"Expected points with {dim} coordinates, got shape {arr.shape}")
    if np.any(np.isnan(pts)) or np.any(pts < 0.0) or np.any(pts > 1.0):
        raise DomainError("Copula argument outside [0, 1]^d")
    return pts, scalar


def _finish(values, scalar: bool):
    values = np.asarray(values, dtype=float)
    return float(values[0]) if scalar else values


def rng_streams(seed, count: int) -> List[np.random.Generator]:
    """Generator i is stream i of SeedSequence(seed); used for replicate i regardless of thread count."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


@dataclass
class Box:
    """Half-open box (a, b]; lower and upper are (d,) or (n, d) arrays."""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise DomainError("Box corners must have the same shape")
        if np.any(self.lower < 0.0) or np.any(self.upper > 1.0) or np.any(self.lower > self.upper):
            raise DomainError("Box needs 0 <= a <= b <= 1 componentwise")

    @property
    def dim(self) -> int:
        return self.lower.shape[-1]


def volume(C, box: Box):
    """C-volume of the box by inclusion-exclusion over its 2^d corners."""
    lower, upper = np.atleast_2d(box.lower), np.atleast_2d(box.upper)
    d = box.dim
    total = np.zeros(len(lower))
    for corner in product((False, True), repeat=d):
        pick = np.array(corner)
        sign = -1.0 if (d - pick.sum()) % 2 else 1.0
        total += sign * np.atleast_1d(C.cdf(np.where(pick, upper, lower)))
    return float(total[0]) if box.lower.ndim == 1 else total


class BaseCopula:
    """
    Subclasses implement _cdf, _density and _h (dC/du1 for d = 2) on
    validated (n, d) point arrays.
    """

    family = None
    dim = 2
    absolutely_continuous = True
    exchangeable = True
    corner_tail_independent = True

    def cdf(self, u):
        pts, scalar = _points(u, self.dim)
        return _finish(np.clip(self._cdf(pts), 0.0, 1.0), scalar)

    def __call__(self, u):
        return self.cdf(u)

    def density(self, u):
        if not self.absolutely_continuous:
            raise PreconditionError(f"{type(self).__name__} has no density")
        pts, scalar = _points(u, self.dim)
        return _finish(self._density(pts), scalar)

    def partial(self, u, axis: int = 0):
        """dC/du_axis, i.e. P(U_other <= u_other | U_axis = u_axis)."""
        if self.dim != 2:
            raise PreconditionError("Partial derivatives are implemented for d = 2")
        if axis not in (0, 1):
            raise DomainError("axis must be 0 or 1")
        pts, scalar = _points(u, 2)
        return _finish(np.clip(self._partial(pts, axis), 0.0, 1.0), scalar)

    def _partial(self, pts, axis):
        if axis == 0:
            return self._h(pts)
        if self.exchangeable:
            return self._h(pts[:, ::-1])
        raise PreconditionError(f"{type(self).__name__} has no partial derivative in u2")

    def conditional(self, u2, u1):
        """P(U2 <= u2 | U1 = u1)."""
        a, b = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        out = np.atleast_1d(self.partial(np.column_stack([a.ravel(), b.ravel()]), axis=0))
        return float(out[0]) if a.ndim == 0 else out.reshape(a.shape)

    def volume(self, box: Box):
        return volume(self, box)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def lower_tail(self):
        """Analytic lower tail coefficient, None when unknown."""
        return None

    def upper_tail(self):
        return None

    def _cdf(self, pts):
        raise NotImplementedError

    def _density(self, pts):
        raise NotImplementedError

    def _h(self, pts):
        raise PreconditionError(f"{type(self).__name__} has no closed-form conditional")

    def describe(self) -> Dict:
        return {'family': self.family, 'dim': self.dim}

    def __repr__(self):
        params = ', '.join(f"{k}={v}" for k, v in self.describe().items() if k != 'family')
        return f"{type(self).__name__}({params})"


class Independence(BaseCopula):
    family = 'independence'

    def __init__(self, dim: int = 2):
        self.dim = int(dim)

    def _cdf(self, pts):
        return np.prod(pts, axis=1)

    def _density(self, pts):
        return np.ones(len(pts))

    def _h(self, pts):
        return pts[:, 1].copy()

    def sample(self, n, rng):
        return rng.random((n, self.dim))

    def lower_tail(self):
        return 0.0

    def upper_tail(self):
        return 0.0


# ============================================================================
# ARCHIMEDEAN
# ============================================================================

class Clayton(BaseCopula):
    """C(u) = (sum u_j^-theta - d + 1)^(-1/theta), theta > 0."""

    family = 'clayton'

    def __init__(self, theta: float, dim: int = 2):
        if not theta > 0:
            raise ConstructionError("Clayton needs theta > 0")
        self.theta = float(theta)
        self.dim = int(dim)

    @classmethod
    def from_kendall_tau(cls, tau: float, dim: int = 2):
        if not 0.0 < tau < 1.0:
            raise ConstructionError("Clayton Kendall's tau must lie in (0, 1)")
        return cls(2.0 * tau / (1.0 - tau), dim)

    @property
    def kendall_tau(self) -> float:
        return self.theta / (self.theta + 2.0)

    def _sum(self, pts):
        with np.errstate(divide='ignore'):
            return np.power(pts, -self.theta).sum(axis=1) - pts.shape[1] + 1.0

    def _cdf(self, pts):
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.power(self._sum(pts), -1.0 / self.theta)
        return np.where(np.any(pts <= 0.0, axis=1), 0.0, out)

    def _density(self, pts):
        th, d = self.theta, pts.shape[1]
        scale = np.prod(1.0 + th * np.arange(d))
        with np.errstate(divide='ignore', invalid='ignore'):
            return scale * np.prod(np.power(pts, -th - 1.0), axis=1) * np.power(self._sum(pts), -1.0 / th - d)

    def _h(self, pts):
        th = self.theta
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.power(pts[:, 0], -th - 1.0) * np.power(self._sum(pts), -1.0 / th - 1.0)
        return np.where(pts[:, 1] <= 0.0, 0.0, np.where(pts[:, 1] >= 1.0, 1.0, out))

    def sample(self, n, rng):
        # gamma frailty
        V = rng.gamma(1.0 / self.theta, 1.0, size=n)
        E = rng.exponential(size=(n, self.dim))
        return np.power(1.0 + E / V[:, None], -1.0 / self.theta)

    def lower_tail(self):
        return 2.0 ** (-1.0 / self.theta)

    def upper_tail(self):
        return 0.0

    def describe(self):
        return {'family': self.family, 'theta': self.theta, 'dim': self.dim}


class Gumbel(BaseCopula):
    """C(u) = exp(-(sum (-ln u_j)^theta)^(1/theta)), theta >= 1."""

    family = 'gumbel'

    def __init__(self, theta: float, dim: int = 2):
        if not theta >= 1.0:
            raise ConstructionError("Gumbel needs theta >= 1")
        self.theta = float(theta)
        self.dim = int(dim)

    @classmethod
    def from_kendall_tau(cls, tau: float, dim: int = 2):
        if not 0.0 <= tau < 1.0:
            raise ConstructionError("Gumbel Kendall's tau must lie in [0, 1)")
        return cls(1.0 / (1.0 - tau), dim)

    @property
    def kendall_tau(self) -> float:
        return 1.0 - 1.0 / self.theta

    def _parts(self, pts):
        with np.errstate(divide='ignore'):
            x = -np.log(pts)
        w = np.power(x, self.theta).sum(axis=1)
        return x, w

    def _cdf(self, pts):
        _, w = self._parts(pts)
        return np.exp(-np.power(w, 1.0 / self.theta))

    def _density(self, pts):
        if pts.shape[1] != 2:
            raise PreconditionError("Gumbel density is implemented for d = 2")
        th = self.theta
        x, w = self._parts(pts)
        A = np.power(w, 1.0 / th)
        with np.errstate(divide='ignore', invalid='ignore'):
            out = (np.exp(-A) * np.power(x[:, 0] * x[:, 1], th - 1.0) * np.power(w, 1.0 / th - 2.0)
                   * (A + th - 1.0) / (pts[:, 0] * pts[:, 1]))
        return np.nan_to_num(out, nan=0.0, posinf=np.inf)

    def _h(self, pts):
        th = self.theta
        x, w = self._parts(pts)
        with np.errstate(divide='ignore', invalid='ignore'):
            out = np.exp(-np.power(w, 1.0 / th)) * np.power(w, 1.0 / th - 1.0) * np.power(x[:, 0], th - 1.0) / pts[:, 0]
        return np.where(pts[:, 1] <= 0.0, 0.0, np.where(pts[:, 1] >= 1.0, 1.0, out))

    def sample(self, n, rng):
        # positive stable frailty with Laplace transform exp(-t^(1/theta))
        alpha = 1.0 / self.theta
        angle = rng.uniform(0.0, np.pi, size=n)
        E0 = rng.exponential(size=n)
        with np.errstate(divide='ignore', invalid='ignore'):
            S = (np.sin(alpha * angle) / np.power(np.sin(angle), 1.0 / alpha)
                 * np.power(np.sin((1.0 - alpha) * angle) / E0, (1.0 - alpha) / alpha))
        E = rng.exponential(size=(n, self.dim))
        return np.exp(-np.power(E / S[:, None], alpha))

    def lower_tail(self):
        return 0.0

    def upper_tail(self):
        return 2.0 - 2.0 ** (1.0 / self.theta)

    def describe(self):
        return {'family': self.family, 'theta': self.theta, 'dim': self.dim}


class SurvivalGumbel(BaseCopula):
    """Survival copula of Gumbel(theta): the distribution of 1 - U."""

    family = 'survival_gumbel'

    def __init__(self, theta: float, dim: int = 2):
        self.gumbel = Gumbel(theta, dim)
        self.theta = self.gumbel.theta
        self.dim = int(dim)

    @classmethod
    def from_kendall_tau(cls, tau: float, dim: int = 2):
        return cls(Gumbel.from_kendall_tau(tau, dim).theta, dim)

    def _cdf(self, pts):
        total = np.zeros(len(pts))
        for subset in product((False, True), repeat=self.dim):
            flip = np.array(subset)
            corner = np.where(flip, 1.0 - pts, 1.0)
            sign = -1.0 if flip.sum() % 2 else 1.0
            total += sign * self.gumbel._cdf(corner)
        return total

    def _density(self, pts):
        return self.gumbel._density(1.0 - pts)

    def _h(self, pts):
        return 1.0 - self.gumbel._h(1.0 - pts)

    def sample(self, n, rng):
        return 1.0 - self.gumbel.sample(n, rng)

    def lower_tail(self):
        return self.gumbel.upper_tail()

    def upper_tail(self):
        return 0.0

    def describe(self):
        return {'family': self.family, 'theta': self.theta, 'dim': self.dim}


# ============================================================================
# ELLIPTICAL (d = 2)
# ============================================================================

class _BivariateElliptical(BaseCopula):
    """
    cdf through the arcsine form of Plackett's identity:
      F(x, y; rho) = F(x, y; -1) + (1/2pi) int_{-pi/2}^{asin rho} k(q(phi)) dphi,
      q = (x^2 - 2 sin(phi) x y + y^2) / cos(phi)^2,
    integrated adaptively for all points at once.
    """

    dim = 2

    def __init__(self, rho: float):
        if not -1.0 < rho < 1.0:
            raise ConstructionError("Correlation must lie in (-1, 1)")
        self.rho = float(rho)

    def _ppf(self, u):
        raise NotImplementedError

    def _kernel(self, q):
        raise NotImplementedError

    def _cdf(self, pts):
        u1, u2 = pts[:, 0], pts[:, 1]
        out = np.where(u1 >= 1.0, u2, np.where(u2 >= 1.0, u1, 0.0))
        inner = (u1 > 0.0) & (u2 > 0.0) & (u1 < 1.0) & (u2 < 1.0)
        if np.any(inner):
            x, y = self._ppf(u1[inner]), self._ppf(u2[inner])
            floor = np.maximum(u1[inner] + u2[inner] - 1.0, 0.0)

            def integrand(phi):
                s, c = math.sin(phi), math.cos(phi)
                return self._kernel((x * x - 2.0 * s * x * y + y * y) / (c * c))

            value, _ = quad_vec(integrand, -0.5 * np.pi, math.asin(self.rho),
                                epsabs=get_setting('QUAD_ABS_TOL'), epsrel=0.0, norm='max')
            out[inner] = np.clip(floor + value / (2.0 * np.pi), floor, np.minimum(u1[inner], u2[inner]))
        return out


class Gaussian(_BivariateElliptical):
    family = 'gaussian'

    def _ppf(self, u):
        return ndtri(u)

    def _kernel(self, q):
        return np.exp(-0.5 * q)

    def _density(self, pts):
        r = self.rho
        x, y = ndtri(pts[:, 0]), ndtri(pts[:, 1])
        with np.errstate(invalid='ignore'):
            expo = -(r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * (1.0 - r * r))
        return np.exp(expo) / math.sqrt(1.0 - r * r)

    def _h(self, pts):
        r = self.rho
        x = ndtri(np.clip(pts[:, 0], 1e-15, 1.0 - 1e-15))
        y = ndtri(pts[:, 1])
        return ndtr((y - r * x) / math.sqrt(1.0 - r * r))

    def sample(self, n, rng):
        z = rng.standard_normal((n, 2))
        z[:, 1] = self.rho * z[:, 0] + math.sqrt(1.0 - self.rho ** 2) * z[:, 1]
        return ndtr(z)

    def lower_tail(self):
        return 0.0

    def upper_tail(self):
        return 0.0

    def describe(self):
        return {'family': self.family, 'rho': self.rho, 'dim': 2}


class StudentT(_BivariateElliptical):
    """t copula; nu = 1 is the Cauchy copula. nu defaults to the STUDENT_T_NU setting."""

    family = 'student_t'
    corner_tail_independent = False

    def __init__(self, rho: float, nu: float = None):
        super().__init__(rho)
        self.nu = float(nu if nu is not None else get_setting('STUDENT_T_NU'))
        if not self.nu > 0:
            raise ConstructionError("Degrees of freedom must be positive")

    def _ppf(self, u):
        return stats.t.ppf(u, self.nu)

    def _kernel(self, q):
        return np.power(1.0 + q / self.nu, -0.5 * self.nu)

    def _density(self, pts):
        r, nu = self.rho, self.nu
        x, y = self._ppf(pts[:, 0]), self._ppf(pts[:, 1])
        with np.errstate(invalid='ignore'):
            q = (x * x - 2.0 * r * x * y + y * y) / (1.0 - r * r)
            joint = np.power(1.0 + q / nu, -0.5 * (nu + 2.0)) / (2.0 * np.pi * math.sqrt(1.0 - r * r))
            return joint / (stats.t.pdf(x, nu) * stats.t.pdf(y, nu))

    def _h(self, pts):
        r, nu = self.rho, self.nu
        x = self._ppf(np.clip(pts[:, 0], 1e-15, 1.0 - 1e-15))
        y = self._ppf(pts[:, 1])
        scale = np.sqrt((nu + x * x) * (1.0 - r * r) / (nu + 1.0))
        return stats.t.cdf((y - r * x) / scale, nu + 1.0)

    def sample(self, n, rng):
        z = rng.standard_normal((n, 2))
        z[:, 1] = self.rho * z[:, 0] + math.sqrt(1.0 - self.rho ** 2) * z[:, 1]
        w = rng.chisquare(self.nu, size=n) / self.nu
        return stats.t.cdf(z / np.sqrt(w)[:, None], self.nu)

    def _tail(self, rho):
        return float(2.0 * stats.t.cdf(-math.sqrt((self.nu + 1.0) * (1.0 - rho) / (1.0 + rho)), self.nu + 1.0))

    def lower_tail(self):
        return self._tail(self.rho)

    def upper_tail(self):
        return self._tail(self.rho)

    def corner_tail(self):
        """Coefficient of the upper-left and lower-right corners."""
        return self._tail(-self.rho)

    def describe(self):
        return {'family': self.family, 'rho': self.rho, 'nu': self.nu, 'dim': 2}


# ============================================================================
# FIXTURES AND CONSTRUCTIONS
# ============================================================================

class Maltese(BaseCopula):
    """
    Uniform mass 3/4 on [0, 3/4] x [1/4, 1] and 1/4 on [3/4, 1] x [0, 1/4].
    Not exchangeable: C(1/3, 1/2) = 1/9 while C(1/2, 1/3) = 1/18.
    """

    family = 'maltese'
    exchangeable = False

    def _cdf(self, pts):
        u1, u2 = pts[:, 0], pts[:, 1]
        low = np.maximum(0.0, 4.0 * u1 * u2 - 3.0 * u2)
        high = np.minimum(4.0 / 3.0 * u1 * u2 - u1 / 3.0, u2 - 0.25) + np.maximum(0.0, u1 - 0.75)
        return np.where(u2 <= 0.25, low, high)

    def _density(self, pts):
        u1, u2 = pts[:, 0], pts[:, 1]
        return np.where((u1 < 0.75) & (u2 > 0.25), 4.0 / 3.0, np.where((u1 > 0.75) & (u2 < 0.25), 4.0, 0.0))

    def _partial(self, pts, axis):
        u1, u2 = pts[:, 0], pts[:, 1]
        if axis == 0:
            right = np.minimum(4.0 * u2, 1.0)
            left = np.maximum(4.0 / 3.0 * (u2 - 0.25), 0.0)
            return np.where(u1 > 0.75, right, left)
        bottom = np.clip(4.0 * u1 - 3.0, 0.0, 1.0)
        top = np.minimum(4.0 / 3.0 * u1, 1.0)
        return np.where(u2 < 0.25, bottom, top)

    def sample(self, n, rng):
        out = rng.random((n, 2))
        corner = rng.random(n) < 0.25
        out[:, 0] = np.where(corner, 0.75 + 0.25 * out[:, 0], 0.75 * out[:, 0])
        out[:, 1] = np.where(corner, 0.25 * out[:, 1], 0.25 + 0.75 * out[:, 1])
        return out

    def lower_tail(self):
        return 0.0

    def upper_tail(self):
        return 0.0


class OrdinalSum(BaseCopula):
    """
    C(u) = sum_k (d_k - d_{k-1}) C_k(clip((u - d_{k-1}) / (d_k - d_{k-1}), 0, 1)):
    component k lives on (d_{k-1}, d_k]^d, blocks are coupled comonotonically.
    """

    family = 'ordinal_sum'

    def __init__(self, breaks: Sequence[float], components: Sequence[BaseCopula]):
        self.breaks = np.asarray(breaks, dtype=float)
        self.components = list(components)
        if self.breaks[0] != 0.0 or self.breaks[-1] != 1.0 or np.any(np.diff(self.breaks) <= 0):
            raise ConstructionError("Ordinal sum breaks must satisfy 0 = d_0 < ... < d_K = 1")
        if len(self.components) != len(self.breaks) - 1:
            raise ConstructionError("Ordinal sum needs one component per block")
        dims = {C.dim for C in self.components}
        if len(dims) != 1:
            raise ConstructionError("Ordinal sum components must share one dimension")
        self.dim = dims.pop()
        self.widths = np.diff(self.breaks)
        self.exchangeable = all(C.exchangeable for C in self.components)
        self.absolutely_continuous = all(C.absolutely_continuous for C in self.components)

    def _scaled(self, k, pts):
        return np.clip((pts - self.breaks[k]) / self.widths[k], 0.0, 1.0)

    def _block(self, x):
        return np.clip(np.searchsorted(self.breaks, x, side='left') - 1, 0, len(self.components) - 1)

    def _cdf(self, pts):
        total = np.zeros(len(pts))
        for k, C in enumerate(self.components):
            total += self.widths[k] * np.atleast_1d(C.cdf(self._scaled(k, pts)))
        return total

    def _density(self, pts):
        out = np.zeros(len(pts))
        blocks = self._block(pts)
        same = np.all(blocks == blocks[:, :1], axis=1)
        for k, C in enumerate(self.components):
            mask = same & (blocks[:, 0] == k)
            if np.any(mask):
                out[mask] = np.atleast_1d(C.density(self._scaled(k, pts[mask]))) / self.widths[k]
        return out

    def _partial(self, pts, axis):
        # only the block holding u_axis depends on it
        out = np.zeros(len(pts))
        blocks = self._block(pts[:, axis])
        for k, C in enumerate(self.components):
            mask = blocks == k
            if np.any(mask):
                out[mask] = np.atleast_1d(C.partial(self._scaled(k, pts[mask]), axis=axis))
        return out

    def sample(self, n, rng):
        blocks = rng.choice(len(self.components), size=n, p=self.widths)
        out = np.empty((n, self.dim))
        for k, C in enumerate(self.components):
            mask = blocks == k
            if np.any(mask):
                out[mask] = self.breaks[k] + self.widths[k] * C.sample(int(mask.sum()), rng)
        return out

    def lower_tail(self):
        return self.components[0].lower_tail()

    def upper_tail(self):
        return self.components[-1].upper_tail()

    def describe(self):
        return {'family': self.family, 'breaks': self.breaks.tolist(),
                'components': [C.describe() for C in self.components]}


class Khoudraji(BaseCopula):
    """C(u1, u2) = u1^(1 - s1) u2^(1 - s2) C_base(u1^s1, u2^s2), s_j in [0, 1]."""

    family = 'khoudraji'

    def __init__(self, base: BaseCopula, shapes: Sequence[float]):
        if base.dim != 2:
            raise ConstructionError("Khoudraji composites are bivariate")
        s1, s2 = (float(s) for s in shapes)
        if not (0.0 <= s1 <= 1.0 and 0.0 <= s2 <= 1.0):
            raise ConstructionError("Khoudraji shapes must lie in [0, 1]")
        self.base = base
        self.shapes = (s1, s2)
        self.exchangeable = base.exchangeable and s1 == s2
        self.absolutely_continuous = base.absolutely_continuous

    def _inner(self, pts):
        s = np.array(self.shapes)
        return np.power(pts, s)

    def _cdf(self, pts):
        s1, s2 = self.shapes
        B = np.atleast_1d(self.base.cdf(self._inner(pts)))
        return np.power(pts[:, 0], 1.0 - s1) * np.power(pts[:, 1], 1.0 - s2) * B

    def _density(self, pts):
        s1, s2 = self.shapes
        u1, u2 = pts[:, 0], pts[:, 1]
        inner = self._inner(pts)
        B = np.atleast_1d(self.base.cdf(inner))
        B1 = np.atleast_1d(self.base.partial(inner, axis=0))
        B2 = np.atleast_1d(self.base.partial(inner, axis=1))
        B12 = np.atleast_1d(self.base.density(inner))
        with np.errstate(divide='ignore', invalid='ignore'):
            a1 = (1.0 - s1) * np.power(u1, -s1)
            a2 = (1.0 - s2) * np.power(u2, -s2)
            return a2 * (a1 * B + s1 * B1) + s2 * (a1 * B2 + s1 * B12)

    def _partial(self, pts, axis):
        s1, s2 = self.shapes
        u1, u2 = pts[:, 0], pts[:, 1]
        inner = self._inner(pts)
        B = np.atleast_1d(self.base.cdf(inner))
        Bj = np.atleast_1d(self.base.partial(inner, axis=axis))
        with np.errstate(divide='ignore', invalid='ignore'):
            if axis == 0:
                out = np.power(u2, 1.0 - s2) * ((1.0 - s1) * np.power(u1, -s1) * B + s1 * Bj)
            else:
                out = np.power(u1, 1.0 - s1) * ((1.0 - s2) * np.power(u2, -s2) * B + s2 * Bj)
        return np.nan_to_num(out, nan=0.0)

    def sample(self, n, rng):
        s = np.array(self.shapes)
        V = self.base.sample(n, rng)
        W = rng.random((n, 2))
        with np.errstate(divide='ignore'):
            left = np.power(V, 1.0 / s)
            right = np.power(W, 1.0 / (1.0 - s))
        return np.maximum(left, right)

    def describe(self):
        return {'family': self.family, 'base': self.base.describe(), 'shapes': list(self.shapes)}


def khoudraji(base: BaseCopula, shapes: Sequence[float]) -> BaseCopula:
    """Khoudraji composite; shapes (1, 1) give the base and (0, 0) the independence copula."""
    s1, s2 = (float(s) for s in shapes)
    if s1 == 1.0 and s2 == 1.0:
        return base
    if s1 == 0.0 and s2 == 0.0:
        return Independence(2)
    return Khoudraji(base, (s1, s2))


COPULA_FAMILIES = {
    cls.family: cls for cls in
    (Independence, Clayton, Gumbel, SurvivalGumbel, Gaussian, StudentT, Maltese, OrdinalSum, Khoudraji)
}
