"""
Base distributions F_X
Continuous kinds, the two atomic kinds used by generalised transforms,
and a tabulated kind for user-supplied cdfs
"""

from typing import Dict, List, Tuple
import logging

import numpy as np
from scipy import stats

from .conf import get_setting
from .exceptions import ConstructionError, DomainError

logger = logging.getLogger(__name__)


def _asarray(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _result(arr, scalar):
    return float(arr) if scalar else arr


def _check_probability(p):
    if np.any(np.isnan(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise DomainError("Probability outside [0, 1]")


class BaseDistribution:
    """
    Common interface: cdf, cdf_left, quantile, pdf, support, atoms.
    Subclasses implement the _cdf/_quantile/_pdf hooks on float arrays.
    """

    kind = None

    def __init__(self, support: Tuple[float, float], atoms: List[Tuple[float, float]] = None):
        self.support = (float(support[0]), float(support[1]))
        self.atoms = [(float(loc), float(mass)) for loc, mass in (atoms or [])]
        locations = [loc for loc, _ in self.atoms]
        if any(b <= a for a, b in zip(locations, locations[1:])):
            raise ConstructionError("Atoms must be sorted strictly increasing")
        if sum(mass for _, mass in self.atoms) > 1.0 + 1e-12:
            raise ConstructionError("Atom masses sum to more than one")

    @property
    def is_continuous(self) -> bool:
        return not self.atoms

    def cdf(self, x):
        arr, scalar = _asarray(x)
        out = np.clip(self._cdf(arr), 0.0, 1.0)
        out = np.where(arr == -np.inf, 0.0, np.where(arr == np.inf, 1.0, out))
        return _result(out, scalar)

    def cdf_left(self, x):
        """F_X(x-); equals cdf off the atoms."""
        arr, scalar = _asarray(x)
        out = np.asarray(self.cdf(arr), dtype=float).copy()
        for loc, mass in self.atoms:
            out = np.where(arr == loc, out - mass, out)
        return _result(np.clip(out, 0.0, 1.0), scalar)

    def continuous_cdf(self, x):
        """F_X(x) with the atoms removed; nondecreasing, total mass 1 - sum of atoms."""
        arr, scalar = _asarray(x)
        out = np.asarray(self.cdf(arr), dtype=float).copy()
        for loc, mass in self.atoms:
            out = out - mass * (arr >= loc)
        return _result(np.maximum(out, 0.0), scalar)

    def quantile(self, p):
        arr, scalar = _asarray(p)
        _check_probability(arr)
        return _result(self._quantile(arr), scalar)

    def pdf(self, x):
        arr, scalar = _asarray(x)
        for loc, _ in self.atoms:
            if np.any(arr == loc):
                raise DomainError(f"atom has no density (x={loc})")
        out = np.where((arr < self.support[0]) | (arr > self.support[1]), 0.0, self._pdf(arr))
        return _result(out, scalar)

    def atom_mass(self, x):
        for loc, mass in self.atoms:
            if loc == x:
                return mass
        return 0.0

    def sample(self, n: int, rng: np.random.Generator):
        return self.quantile(rng.random(n))

    def describe(self) -> Dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"

    # hooks
    def _cdf(self, x):
        raise NotImplementedError

    def _quantile(self, p):
        raise NotImplementedError

    def _pdf(self, x):
        raise NotImplementedError


class _FrozenDistribution(BaseDistribution):
    """Kinds with an exact scipy.stats counterpart."""

    def __init__(self, frozen, support):
        super().__init__(support)
        self._frozen = frozen

    def _cdf(self, x):
        return self._frozen.cdf(x)

    def _quantile(self, p):
        return self._frozen.ppf(p)

    def _pdf(self, x):
        return self._frozen.pdf(x)


class Uniform(_FrozenDistribution):
    kind = 'uniform'

    def __init__(self, a: float = 0.0, b: float = 1.0):
        if not b > a:
            raise ConstructionError("Uniform requires a < b")
        self.a, self.b = float(a), float(b)
        super().__init__(stats.uniform(loc=self.a, scale=self.b - self.a), (self.a, self.b))

    def describe(self):
        return {'kind': self.kind, 'a': self.a, 'b': self.b}


class ParetoI(_FrozenDistribution):
    """F(x) = 1 - x^(-shape) on [1, inf)."""

    kind = 'pareto1'

    def __init__(self, shape: float):
        if not shape > 0:
            raise ConstructionError("Pareto shape must be positive")
        self.shape = float(shape)
        super().__init__(stats.pareto(b=self.shape), (1.0, np.inf))

    def describe(self):
        return {'kind': self.kind, 'shape': self.shape}


class PowerLaw(_FrozenDistribution):
    """F(x) = x^exponent on [0, 1]."""

    kind = 'power'

    def __init__(self, exponent: float):
        if not exponent > 0:
            raise ConstructionError("Power-law exponent must be positive")
        self.exponent = float(exponent)
        super().__init__(stats.powerlaw(a=self.exponent), (0.0, 1.0))

    def _pdf(self, x):
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.exponent * np.power(x, self.exponent - 1.0)

    def describe(self):
        return {'kind': self.kind, 'exponent': self.exponent}


class TwoSidedExp(BaseDistribution):
    """
    F(x) = 1 - 0.25^x on [0, 0.5) and 4^(x-1) on [0.5, 1]
    """

    kind = 'two_sided_exp'
    LN4 = np.log(4.0)

    def __init__(self):
        super().__init__((0.0, 1.0))

    def _cdf(self, x):
        xc = np.clip(x, 0.0, 1.0)
        return np.where(xc < 0.5, 1.0 - np.power(0.25, xc), np.power(4.0, xc - 1.0))

    def _quantile(self, p):
        with np.errstate(divide='ignore'):
            lower = -np.log1p(-np.minimum(p, 0.5)) / self.LN4
            upper = 1.0 + np.log(np.maximum(p, 0.5)) / self.LN4
        return np.where(p < 0.5, lower, upper)

    def _pdf(self, x):
        return np.where(x < 0.5, self.LN4 * np.power(4.0, -x), self.LN4 * np.power(4.0, x - 1.0))

    def describe(self):
        return {'kind': self.kind}


class KumaraswamyLike(BaseDistribution):
    """
    F(x) = 1 / (1 + (1/x - 1)^a) on [0, 1]; density diverges at both ends for a < 1
    """

    kind = 'kumaraswamy_like'

    def __init__(self, a: float):
        if not a > 0:
            raise ConstructionError("KumaraswamyLike requires a > 0")
        self.a = float(a)
        super().__init__((0.0, 1.0))

    def _cdf(self, x):
        xc = np.clip(x, 0.0, 1.0)
        with np.errstate(divide='ignore', invalid='ignore'):
            z = np.power(1.0 / xc - 1.0, self.a)
            out = 1.0 / (1.0 + z)
        return np.where(xc <= 0.0, 0.0, np.where(xc >= 1.0, 1.0, out))

    def _quantile(self, p):
        with np.errstate(divide='ignore', invalid='ignore'):
            out = 1.0 / (1.0 + np.power(1.0 / p - 1.0, 1.0 / self.a))
        return np.where(p <= 0.0, 0.0, np.where(p >= 1.0, 1.0, out))

    def _pdf(self, x):
        a = self.a
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            z = 1.0 / x - 1.0
            out = a * np.power(z, a - 1.0) / (x * x * np.square(1.0 + np.power(z, a)))
        if a < 1.0:
            edge = np.inf
        elif a == 1.0:
            edge = 1.0
        else:
            edge = 0.0
        return np.where((x <= 0.0) | (x >= 1.0), edge, out)

    def describe(self):
        return {'kind': self.kind, 'a': self.a}


class Bernoulli(BaseDistribution):
    kind = 'bernoulli'

    def __init__(self, p: float):
        if not 0.0 < p < 1.0:
            raise ConstructionError("Bernoulli requires p in (0, 1)")
        self.p = float(p)
        super().__init__((0.0, 1.0), atoms=[(0.0, 1.0 - self.p), (1.0, self.p)])

    def _cdf(self, x):
        return np.where(x < 0.0, 0.0, np.where(x < 1.0, 1.0 - self.p, 1.0))

    def _quantile(self, p):
        # F^{-1}(u) = 1{u > 1-p}
        return np.where(p > 1.0 - self.p, 1.0, 0.0)

    def _pdf(self, x):
        return np.zeros_like(x)

    def describe(self):
        return {'kind': self.kind, 'p': self.p}


class MixedExp(BaseDistribution):
    """
    Mixed-type distribution on [-1, 1] with an atom 2e^{-1/2} - 1 at zero:
      F(x) = 1 - e^{-(x+1)/2}        on [-1, 0)
      F(0) = e^{-1/2}
      F(x) = 1 + e^{-1/2} - e^{-x/2} on (0, 1]
    """

    kind = 'mixed_exp'
    E = np.exp(-0.5)

    def __init__(self):
        super().__init__((-1.0, 1.0), atoms=[(0.0, 2.0 * self.E - 1.0)])

    def _cdf(self, x):
        xc = np.clip(x, -1.0, 1.0)
        left = 1.0 - np.exp(-0.5 * (xc + 1.0))
        right = 1.0 + self.E - np.exp(-0.5 * xc)
        return np.where(xc < 0.0, left, np.where(xc == 0.0, self.E, right))

    def _quantile(self, p):
        with np.errstate(divide='ignore', invalid='ignore'):
            left = -2.0 * np.log1p(-p) - 1.0
            right = -2.0 * np.log(1.0 + self.E - p)
        out = np.where(p <= 1.0 - self.E, left, np.where(p <= self.E, 0.0, right))
        return np.clip(out, -1.0, 1.0)

    def _pdf(self, x):
        return np.where(x < 0.0, 0.5 * np.exp(-0.5 * (x + 1.0)), 0.5 * np.exp(-0.5 * x))

    def describe(self):
        return {'kind': self.kind}


class Discrete(BaseDistribution):
    """Finitely many atoms and nothing else."""

    kind = 'discrete'

    def __init__(self, locations, masses):
        loc = np.asarray(locations, dtype=float)
        mass = np.asarray(masses, dtype=float)
        if loc.shape != mass.shape or loc.size < 1 or np.any(mass <= 0):
            raise ConstructionError("Discrete needs matching locations and positive masses")
        if abs(mass.sum() - 1.0) > 1e-12:
            raise ConstructionError("Discrete masses must sum to one")
        self.locations, self.masses = loc, mass
        self._cum = np.cumsum(mass)
        self._cum[-1] = 1.0
        super().__init__((loc[0], loc[-1]), atoms=list(zip(loc, mass)))

    def _cdf(self, x):
        idx = np.searchsorted(self.locations, x, side='right')
        return np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)])

    def _quantile(self, p):
        idx = np.minimum(np.searchsorted(self._cum, p, side='left'), self.locations.size - 1)
        return self.locations[idx]

    def _pdf(self, x):
        return np.zeros_like(x)

    def describe(self):
        return {'kind': self.kind, 'locations': self.locations.tolist(), 'masses': self.masses.tolist()}


class Tabulated(BaseDistribution):
    """
    Continuous cdf given on a grid, linearly interpolated.
    The grid round-trips exactly: cdf(x_i) == F_i.
    """

    kind = 'tabulated'

    def __init__(self, x, cdf):
        self.x = np.asarray(x, dtype=float)
        self.F = np.asarray(cdf, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.F.shape or self.x.size < 2:
            raise ConstructionError("Tabulated grid and cdf must be matching 1-D arrays of length >= 2")
        if np.any(np.diff(self.x) <= 0):
            raise ConstructionError("Tabulated grid must be strictly increasing")
        if np.any(np.diff(self.F) < 0):
            raise ConstructionError("Tabulated cdf must be nondecreasing")
        if self.F[0] != 0.0 or self.F[-1] != 1.0:
            raise ConstructionError("Tabulated cdf must start at 0 and end at 1")
        super().__init__((self.x[0], self.x[-1]))

    def _cdf(self, x):
        return np.interp(x, self.x, self.F)

    def _quantile(self, p):
        # generalized inverse by bisection: smallest x with F(x) >= p
        tol = get_setting('BISECTION_TOL') * max(1.0, self.x[-1] - self.x[0])
        lo = np.full(p.shape, self.x[0])
        hi = np.full(p.shape, self.x[-1])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            # stop at the tolerance or once the bracket is a single float step
            active = (hi - lo > tol) & (mid > lo) & (mid < hi)
            if not np.any(active):
                break
            above = self._cdf(mid) >= p
            hi = np.where(active & above, mid, hi)
            lo = np.where(active & ~above, mid, lo)
        return np.where(p <= 0.0, self.x[0], hi)

    def _pdf(self, x):
        idx = np.clip(np.searchsorted(self.x, x, side='right') - 1, 0, self.x.size - 2)
        return (self.F[idx + 1] - self.F[idx]) / (self.x[idx + 1] - self.x[idx])

    def describe(self):
        return {'kind': self.kind, 'x': self.x.tolist(), 'cdf': self.F.tolist()}


DISTRIBUTION_KINDS = {
    cls.kind: cls
    for cls in (Uniform, ParetoI, PowerLaw, TwoSidedExp, KumaraswamyLike, Bernoulli, MixedExp, Discrete, Tabulated)
}
