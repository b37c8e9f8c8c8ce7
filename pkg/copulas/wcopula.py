"""
W-Transformed Copulas
C_W is the distribution of (W_1(U_1), ..., W_d(U_d)) for U ~ C. Its cdf and
volumes are finite sums of C-volumes over the pieces of the margins; the
density sums the base density over preimages weighted by 1/|W'|.
"""

from itertools import product
from typing import List, Sequence
import logging

import numpy as np

from transforms.conf import get_setting
from transforms.exceptions import (
    ConstructionError, NonDifferentiablePointError, PreconditionError,
)
from transforms.wtransform import BaseWTransform, reflection_transform

from .copula import BaseCopula, Box, OrdinalSum, _finish, _points, volume

logger = logging.getLogger(__name__)


def _cells(W: BaseWTransform, u):
    """
    For each piece k, the part of piece k that W maps into [0, u]:
    (d_{k-1}, W^{-1}_{|k}(u)] when k increases, (W^{-1}_{|k}(u), d_k] otherwise.
    Returns (lower, upper), each shaped (K, n).
    """
    inv = W.piece_inverses(u)
    inc = np.asarray(W.increasing)[:, None]
    lower = np.where(inc, W.deltas[:-1, None], inv)
    upper = np.where(inc, inv, W.deltas[1:, None])
    return lower, upper


class WTransformedCopula:
    """Base copula C with one uniformity-preserving margin map per coordinate."""

    def __init__(self, base: BaseCopula, margins: Sequence[BaseWTransform]):
        self.base = base
        self.margins = list(margins)
        if len(self.margins) != base.dim:
            raise ConstructionError(f"Expected {base.dim} margins, got {len(self.margins)}")
        cap = get_setting('MAX_PIECES_PER_MARGIN')
        for j, W in enumerate(self.margins):
            if not isinstance(W, BaseWTransform):
                raise ConstructionError(f"Margin {j + 1} has no piece structure (generalised maps are sample-only)")
            if W.n_pieces > cap:
                raise PreconditionError(f"Margin {j + 1} has {W.n_pieces} pieces; MAX_PIECES_PER_MARGIN is {cap}")
            if getattr(W, 'lazy', False):
                logger.warning(f"Margin {j + 1} is a truncated countable map; cdf ignores the mass beyond piece {W.n_pieces}")
        self.dim = base.dim
        first = self.margins[0]
        self.homogeneous = all(W is first or W.describe() == first.describe() for W in self.margins)

    @property
    def index_sets(self) -> List[List[int]]:
        return [W.increasing_pieces for W in self.margins]

    def _multi_indices(self):
        return product(*(range(W.n_pieces) for W in self.margins))

    # ------------------------------------------------------------------
    def cdf(self, u):
        pts, scalar = _points(u, self.dim)
        cells = [_cells(W, pts[:, j]) for j, W in enumerate(self.margins)]
        total = np.zeros(len(pts))
        for idx in self._multi_indices():
            lower = np.column_stack([cells[j][0][k] for j, k in enumerate(idx)])
            upper = np.column_stack([cells[j][1][k] for j, k in enumerate(idx)])
            total += volume(self.base, Box(lower, upper))
        return _finish(np.clip(total, 0.0, 1.0), scalar)

    def __call__(self, u):
        return self.cdf(u)

    def volume(self, box: Box):
        """Sum of C-volumes of the boxes between the piece preimages of a and b."""
        a, b = np.atleast_2d(box.lower), np.atleast_2d(box.upper)
        inv_a = [W.piece_inverses(a[:, j]) for j, W in enumerate(self.margins)]
        inv_b = [W.piece_inverses(b[:, j]) for j, W in enumerate(self.margins)]
        total = np.zeros(len(a))
        for idx in self._multi_indices():
            lower, upper = [], []
            for j, k in enumerate(idx):
                if self.margins[j].increasing[k]:
                    lower.append(inv_a[j][k])
                    upper.append(inv_b[j][k])
                else:
                    lower.append(inv_b[j][k])
                    upper.append(inv_a[j][k])
            total += volume(self.base, Box(np.column_stack(lower), np.column_stack(upper)))
        return float(total[0]) if box.lower.ndim == 1 else total

    def _preimages(self, pts):
        tol = get_setting('SUM_TOL')
        found = []
        for j, W in enumerate(self.margins):
            pre = W.preimages(pts[:, j])
            bad = np.abs(pre.weight_sums - 1.0) > tol
            found.append((pre, bad))
        return found

    def density(self, u):
        if not self.base.absolutely_continuous:
            raise PreconditionError(f"{type(self.base).__name__} base has no density")
        pts, scalar = _points(u, self.dim)
        found = self._preimages(pts)
        for j, (pre, bad) in enumerate(found):
            if np.any(bad):
                i = int(np.argmax(bad))
                raise NonDifferentiablePointError(
                    f"nondifferentiable point: u_{j + 1}={pre.v[i]:.12g}",
                    v=float(pre.v[i]),
                    pieces=[k + 1 for k in np.flatnonzero(pre.active[:, i])],
                    preimages=pre.values[:, i].tolist(),
                    weights=pre.weights[:, i].tolist(),
                    nearest_valid=nearest_valid(self.margins[j], float(pre.v[i])),
                )
        total = np.zeros(len(pts))
        for idx in self._multi_indices():
            on = np.all([found[j][0].active[k] for j, k in enumerate(idx)], axis=0)
            if not np.any(on):
                continue
            point = np.column_stack([found[j][0].values[k][on] for j, k in enumerate(idx)])
            weight = np.prod([found[j][0].weights[k][on] for j, k in enumerate(idx)], axis=0)
            total[on] += np.atleast_1d(self.base.density(point)) * weight
        return _finish(total, scalar)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        U = self.base.sample(n, rng)
        return np.column_stack([W.eval(U[:, j]) for j, W in enumerate(self.margins)])

    # ------------------------------------------------------------------
    def conditional(self, u2, u1):
        """
        P(V2 <= u2 | V1 = u1): for each active piece k1 of the first margin,
        p_{k1}(u1) times the base h-function differenced across the cells of u2.
        Levels u1 in the exception set fall back to finite differences.
        """
        self._require_bivariate()
        a, b = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        v1, v2 = a.ravel(), b.ravel()
        W1, W2 = self.margins
        pre = W1.preimages(v1)
        lower, upper = _cells(W2, v2)
        out = np.zeros(v1.size)
        for k1 in range(W1.n_pieces):
            on = pre.active[k1]
            if not np.any(on):
                continue
            x = pre.values[k1][on]
            inner = np.zeros(int(on.sum()))
            for k2 in range(W2.n_pieces):
                hi = self.base.partial(np.column_stack([x, upper[k2][on]]), axis=0)
                lo = self.base.partial(np.column_stack([x, lower[k2][on]]), axis=0)
                inner += np.atleast_1d(hi) - np.atleast_1d(lo)
            out[on] += pre.weights[k1][on] * inner
        bad = np.abs(pre.weight_sums - 1.0) > get_setting('SUM_TOL')
        if np.any(bad):
            out[bad] = self.conditional_fd(v2[bad], v1[bad])
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if a.ndim == 0 else out.reshape(a.shape)

    def conditional_fd(self, u2, u1, h: float = 1e-5):
        """Central difference of the cdf in u1, one-sided at the edges."""
        self._require_bivariate()
        a, b = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        v1, v2 = a.ravel(), b.ravel()
        up, down = np.minimum(v1 + h, 1.0), np.maximum(v1 - h, 0.0)
        diff = (np.atleast_1d(self.cdf(np.column_stack([up, v2])))
                - np.atleast_1d(self.cdf(np.column_stack([down, v2]))))
        out = np.clip(diff / (up - down), 0.0, 1.0)
        return float(out[0]) if a.ndim == 0 else out.reshape(a.shape)

    def _require_bivariate(self):
        if self.dim != 2:
            raise PreconditionError("Conditionals are implemented for d = 2")

    def describe(self):
        return {'base': self.base.describe(), 'margins': [W.describe() for W in self.margins]}


class WTransformedOrdinalSum(WTransformedCopula):
    """
    Ordinal-sum base whose margins are piecewise increasing with the ordinal
    breaks as change points. The copula is the mixture
      C = sum_k (d_k - d_{k-1}) C_k(G_{1,k}(u_1), ..., G_{d,k}(u_d)),
      G_{j,k}(u) = (W^{-1}_{j|k}(u) - d_{k-1}) / (d_k - d_{k-1}).
    """

    def __init__(self, base: OrdinalSum, margins: Sequence[BaseWTransform]):
        super().__init__(base, margins)
        for j, W in enumerate(self.margins):
            if not W.piecewise_increasing:
                raise ConstructionError(f"Margin {j + 1} has decreasing pieces")
            if W.n_pieces != len(base.components) or not np.allclose(W.deltas, base.breaks, atol=1e-10):
                raise ConstructionError(f"Margin {j + 1} change points differ from the ordinal breaks")
        self.widths = base.widths
        self.components = base.components

    def component_maps(self, j: int, u):
        """(G_{j,k}(u), g_{j,k}(u)) for all k, shaped (K, n); g vanishes off the piece's range."""
        W = self.margins[j]
        u = np.atleast_1d(np.asarray(u, dtype=float))
        pre = W.preimages(u)
        G = np.clip((pre.values - self.base.breaks[:-1, None]) / self.widths[:, None], 0.0, 1.0)
        g = pre.weights / self.widths[:, None]
        return G, g

    def cdf(self, u):
        pts, scalar = _points(u, self.dim)
        maps = [self.component_maps(j, pts[:, j])[0] for j in range(self.dim)]
        total = np.zeros(len(pts))
        for k, C in enumerate(self.components):
            total += self.widths[k] * np.atleast_1d(C.cdf(np.column_stack([G[k] for G in maps])))
        return _finish(np.clip(total, 0.0, 1.0), scalar)

    def density(self, u):
        if not self.base.absolutely_continuous:
            raise PreconditionError("Ordinal sum components need densities")
        pts, scalar = _points(u, self.dim)
        maps = [self.component_maps(j, pts[:, j]) for j in range(self.dim)]
        total = np.zeros(len(pts))
        for k, C in enumerate(self.components):
            weight = np.prod([g[k] for _, g in maps], axis=0)
            on = weight > 0
            if np.any(on):
                point = np.column_stack([G[k][on] for G, _ in maps])
                total[on] += self.widths[k] * np.atleast_1d(C.density(point)) * weight[on]
        return _finish(total, scalar)

    def conditional(self, u2, u1):
        """sum_k w_k(u1) h_k(G_{2,k}(u2) | G_{1,k}(u1)) with w_k = (d_k - d_{k-1}) g_{1,k}(u1)."""
        self._require_bivariate()
        a, b = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        G1, g1 = self.component_maps(0, a.ravel())
        G2, _ = self.component_maps(1, b.ravel())
        out = np.zeros(a.size)
        for k, C in enumerate(self.components):
            w = self.widths[k] * g1[k]
            on = w > 0
            if np.any(on):
                out[on] += w[on] * np.atleast_1d(C.partial(np.column_stack([G1[k][on], G2[k][on]]), axis=0))
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if a.ndim == 0 else out.reshape(a.shape)


def make_model(base: BaseCopula, margins: Sequence[BaseWTransform]) -> WTransformedCopula:
    """The mixture form when the base is an ordinal sum the margins line up with."""
    if isinstance(base, OrdinalSum):
        try:
            return WTransformedOrdinalSum(base, margins)
        except ConstructionError as e:
            logger.debug(f"Ordinal sum kept on the generic path: {str(e)}")
    return WTransformedCopula(base, margins)


def reflect(C: BaseCopula, a: float, b: float) -> WTransformedCopula:
    """K_{a,b}: C under the reflection maps W(.; a) and W(.; b)."""
    return WTransformedCopula(C, [reflection_transform(a), reflection_transform(b)])


# ============================================================================
# STOCHASTIC INVERSE
# ============================================================================

def nearest_valid(W: BaseWTransform, v: float, max_steps: int = 40) -> List[float]:
    """Closest levels on either side of v whose preimage weights sum to one."""
    tol = get_setting('SUM_TOL')
    step = get_setting('NUDGE')
    found = []
    for sign in (-1.0, 1.0):
        h = step
        for _ in range(max_steps):
            cand = v + sign * h
            if 0.0 < cand < 1.0 and abs(float(W.preimages(cand).weight_sums[0]) - 1.0) <= tol:
                found.append(cand)
                break
            h *= 2.0
    return found


def stochastic_inverse(W: BaseWTransform, v, u_aux):
    """
    Draw from the conditional law of U given W(U) = v: the preimage of the
    piece whose cumulative weight interval holds u_aux.
    """
    v_arr, aux = np.broadcast_arrays(np.asarray(v, dtype=float), np.asarray(u_aux, dtype=float))
    flat_v, flat_aux = v_arr.ravel(), aux.ravel()
    pre = W.preimages(flat_v)
    sums = pre.weight_sums
    bad = np.abs(sums - 1.0) > get_setting('SUM_TOL')
    if np.any(bad):
        i = int(np.argmax(bad))
        level = float(flat_v[i])
        raise NonDifferentiablePointError(
            f"v={level:.12g} is in the exception set: preimage weights sum to {sums[i]:.6g}",
            v=level,
            pieces=[k + 1 for k in np.flatnonzero(pre.active[:, i])],
            preimages=pre.values[:, i].tolist(),
            weights=pre.weights[:, i].tolist(),
            nearest_valid=nearest_valid(W, level),
        )
    cum = np.cumsum(pre.weights, axis=0)
    hit = (cum >= flat_aux[None, :]) & (pre.weights > 0)
    last_active = W.n_pieces - 1 - np.argmax(pre.weights[::-1] > 0, axis=0)
    k = np.where(np.any(hit, axis=0), np.argmax(hit, axis=0), last_active)
    out = pre.values[k, np.arange(flat_v.size)]
    return float(out[0]) if v_arr.ndim == 0 else out.reshape(v_arr.shape)


def graph_copula_cdf(W: BaseWTransform, u, v):
    """Copula of (U, W(U)): sum_k of the length of (0, u] intersected with S_k(v)."""
    a, b = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    lower, upper = _cells(W, b.ravel())
    overlap = np.minimum(a.ravel()[None, :], upper) - lower
    out = np.clip(np.maximum(overlap, 0.0).sum(axis=0), 0.0, 1.0)
    return float(out[0]) if a.ndim == 0 else out.reshape(a.shape)
