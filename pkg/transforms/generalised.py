"""
Generalised W-transforms for bases with atoms
W_g(F_X(x, v)) = F_{T(X)}(T(x), v) with the modified distribution function
F(x, v) = P(X < x) + v P(X = x).
"""

from dataclasses import dataclass
from typing import List
import logging

import numpy as np

from .dist import BaseDistribution
from .exceptions import DomainError
from .pcsm import PcsmFunction
from .wtransform import build

logger = logging.getLogger(__name__)


@dataclass
class JumpInterval:
    atom: float
    lower: float
    upper: float
    slope: float
    image: float


class GenWTransform:
    """Evaluator for F_X with atoms; the continuous part goes through the piece inverses of T."""

    def __init__(self, base: BaseDistribution, transform: PcsmFunction):
        self.base = base
        self.transform = transform
        self.atoms = list(base.atoms)
        self._atom_images = np.array([float(transform.eval(loc)) for loc, _ in self.atoms])
        self._atom_masses = np.array([mass for _, mass in self.atoms])

    def _same_level(self, a, y):
        return np.abs(a - y) <= 1e-12 * np.maximum(1.0, np.abs(y))

    def continuous_below(self, y):
        """P(T(X) <= y, X not an atom)."""
        T, Fc = self.transform, self.base.continuous_cdf
        total = np.zeros_like(y)
        for k in range(1, T.n_pieces + 1):
            a, b = T.interval(k)
            x = T.clamped_inverse(k, y)
            if T.piece(k).increasing:
                total += np.asarray(Fc(x)) - Fc(a)
            else:
                total += Fc(b) - np.asarray(Fc(x))
        return total

    def transformed_cdf(self, y, strict: bool = False):
        """P(T(X) <= y), or P(T(X) < y) when strict."""
        arr = np.asarray(y, dtype=float)
        flat = np.atleast_1d(arr)
        out = self.continuous_below(flat)
        for image, mass in zip(self._atom_images, self._atom_masses):
            hit = self._same_level(image, flat)
            below = (image < flat) & ~hit
            out = out + mass * (below | (hit & (not strict)))
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def level_mass(self, y):
        """P(T(X) = y); only atoms carry mass at a single level."""
        flat = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros_like(flat)
        for image, mass in zip(self._atom_images, self._atom_masses):
            out += mass * self._same_level(image, flat)
        return out

    def eval(self, u):
        arr = np.asarray(u, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("Argument outside [0, 1]")
        flat = np.atleast_1d(arr)
        x = np.atleast_1d(self.base.quantile(flat))
        left = np.atleast_1d(self.base.cdf_left(x))
        mass = np.zeros_like(flat)
        for loc, m in self.atoms:
            mass = np.where(x == loc, m, mass)
        # position inside the atom's jump; continuous points count as v = 1
        v = np.where(mass > 0, (flat - left) / np.where(mass > 0, mass, 1.0), 1.0)
        v = np.clip(v, 0.0, 1.0)
        y = np.atleast_1d(self.transform.eval(x))
        out = self.transformed_cdf(y, strict=True) + v * self.level_mass(y)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def __call__(self, u):
        return self.eval(u)

    def jump_intervals(self) -> List[JumpInterval]:
        """
        On (F_X(x-), F_X(x)] the map is affine with slope
        (total mass of atoms sharing T(x)) / P(X = x).
        """
        out = []
        for (loc, mass), image in zip(self.atoms, self._atom_images):
            shared = float(self._atom_masses[self._same_level(self._atom_images, image)].sum())
            out.append(JumpInterval(loc, float(self.base.cdf_left(loc)), float(self.base.cdf(loc)),
                                    shared / mass, float(image)))
        return out

    def sample(self, n: int, rng: np.random.Generator):
        """Draw X and the auxiliary V, then return F_{T(X)}(T(X), V)."""
        x = np.atleast_1d(self.base.sample(n, rng))
        v = rng.random(n)
        y = np.atleast_1d(self.transform.eval(x))
        return self.transformed_cdf(y, strict=True) + v * self.level_mass(y)

    def describe(self):
        return {'type': 'generalised', 'base': self.base.describe(), 'T': self.transform.describe()}


def build_generalised(F_X: BaseDistribution, T: PcsmFunction):
    """GenWTransform for atomic bases; continuous bases go through build."""
    if F_X.is_continuous:
        return build(F_X, T)
    W = GenWTransform(F_X, T)
    logger.debug(f"Built generalised W-transform over {len(W.atoms)} atom(s)")
    return W
