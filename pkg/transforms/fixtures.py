"""
Named transforms
Each factory returns a fresh object; NAMED_TRANSFORMS maps descriptor names to them.
"""

import math

import numpy as np
from scipy.special import digamma

from .dist import Bernoulli, Discrete, KumaraswamyLike, MixedExp, ParetoI, PowerLaw, TwoSidedExp, Uniform
from .generalised import build_generalised
from .pcsm import (
    AbsPiece, ExpQuadPiece, FracSquareFamily, GenericPiece, LazyPcsmFunction,
    LinearPiece, PcsmFunction, ReciprocalPiece,
)
from .wtransform import (
    ExpPowerGenerator, ExplicitWTransform, InnTransform, PiecewiseLinearWTransform,
    PssmWTransform, SqrtMixGenerator, VTransform, build, ceiling_transform,
    flipped_v_transform, reflection_transform,
)


# ----------------------------------------------------------------------------
# pcsm functions T
# ----------------------------------------------------------------------------

def shuffle_T():
    """-x + 1, x, x - 2/3 on thirds of [0, 1]."""
    return PcsmFunction(
        [0.0, 1 / 3, 2 / 3, 1.0],
        [LinearPiece(-1.0, 1.0), LinearPiece(1.0, 0.0), LinearPiece(1.0, -2 / 3)],
    )


def shifted_T(alpha: float = 0.3):
    """x on [0, 1/2] and x - alpha on (1/2, 1]."""
    return PcsmFunction([0.0, 0.5, 1.0], [LinearPiece(1.0, 0.0), LinearPiece(1.0, -alpha)])


def zigzag_T():
    """
    exp(3 (x - 1/4)^2) on [0, 1/3], split at its minimum 1/4,
    then -x + 3/2 and 1/x. Directions: dec, inc, dec, dec.
    """
    return PcsmFunction(
        [0.0, 0.25, 1 / 3, 2 / 3, 1.0],
        [
            ExpQuadPiece(3.0, 0.25, increasing=False),
            ExpQuadPiece(3.0, 0.25, increasing=True),
            LinearPiece(-1.0, 1.5),
            ReciprocalPiece(1.0, 0.0),
        ],
    )


def folded_T():
    """|x| on [-1, 1]."""
    return PcsmFunction(
        [-1.0, 0.0, 1.0],
        [AbsPiece(0.0, 1.0, 0.0, increasing=False), AbsPiece(0.0, 1.0, 0.0, increasing=True)],
    )


def mixed_type_T(alpha: float = 0.5):
    """|x| with T(0) = alpha."""
    return PcsmFunction(
        [-1.0, 0.0, 1.0],
        [LinearPiece(-1.0, 0.0), LinearPiece(1.0, 0.0)],
        point_values={0.0: alpha},
    )


def frac_square_tail(y, n):
    """Exact F_X mass below level y of the frac-square pieces beyond n (Pareto shape 2 base)."""
    y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
    return digamma(n + 1.0 + y) - digamma(n + 1.0)


# ----------------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------------

def shuffle():
    return build(Uniform(0.0, 1.0), shuffle_T())


def shuffle_linear():
    """The shuffle of identity as a piecewise linear self-map, for periodicity."""
    return PiecewiseLinearWTransform([0.0, 1 / 3, 2 / 3, 1.0], [-1.0, 1.0, 1.0], [1.0, 0.0, -2 / 3])


def piecewise_increasing(alpha: float = 0.3):
    return build(TwoSidedExp(), shifted_T(alpha))


def zigzag():
    return build(Uniform(0.0, 1.0), zigzag_T())


def frac_square(max_pieces: int = 64):
    return build(ParetoI(2.0), LazyPcsmFunction(FracSquareFamily()),
                 tail=frac_square_tail, max_pieces=max_pieces)


def folded_uniform():
    """|x| over U(-1, 1), i.e. the v-transform |2u - 1|."""
    return build(Uniform(-1.0, 1.0), folded_T())


def square_base_v():
    """pssm with F_X(x) = x^2, t = (0, 1/2, 1), r = (0, 1); a v-transform with delta = 1/4."""
    return PssmWTransform([0.0, 0.5, 1.0], [0, 1], PowerLaw(2.0))


def pssm_linear():
    return PssmWTransform([0.0, 0.1, 0.3, 0.5, 0.7, 1.0], [0, 1, 0, 0, 1], Uniform(0.0, 1.0))


def tail_designer_pssm():
    return PssmWTransform([0.0, 0.1, 0.9, 1.0], [1, 1, 1], KumaraswamyLike(0.5))


def sqrt_three_piece():
    """9/10 - 3 sqrt(5u)/5, 3 sqrt(20u - 9)/10, then the identity on (0.9, 1]."""
    pieces = [
        GenericPiece(lambda u: 0.9 - 0.6 * np.sqrt(5.0 * np.maximum(u, 0.0)), False,
                     inverse=lambda v: np.square(0.9 - v) / 1.8,
                     derivative=lambda u: -0.3 * math.sqrt(5.0) / np.sqrt(u)),
        GenericPiece(lambda u: 0.3 * np.sqrt(np.maximum(20.0 * u - 9.0, 0.0)), True,
                     inverse=lambda v: (np.square(v) / 0.09 + 9.0) / 20.0,
                     derivative=lambda u: 3.0 / np.sqrt(20.0 * u - 9.0)),
        LinearPiece(1.0, 0.0),
    ]
    return ExplicitWTransform([0.0, 0.45, 0.9, 1.0], pieces)


def theta_linear(theta: float = 0.45):
    """u/(2 theta), (u - theta)/(1 - 2 theta), (u - 1 + 2 theta)/(2 theta)."""
    return PiecewiseLinearWTransform(
        [0.0, theta, 1.0 - theta, 1.0],
        [1.0 / (2 * theta), 1.0 / (1 - 2 * theta), 1.0 / (2 * theta)],
        [0.0, -theta / (1 - 2 * theta), (2 * theta - 1) / (2 * theta)],
    )


def inn(theta: float = 20.0):
    return InnTransform(theta)


def two_piece_linear():
    """2u - ceil(2u - 1)."""
    return ceiling_transform(2)


def five_piece_linear():
    """5u - ceil(5u) + 1."""
    return ceiling_transform(5)


def mixed_type(alpha: float = 0.5):
    return build_generalised(MixedExp(), mixed_type_T(alpha))


def bernoulli_swap(p: float = 0.3):
    """Bernoulli base with T(1) < T(0)."""
    return build_generalised(Bernoulli(p), PcsmFunction([0.0, 1.0], [LinearPiece(-1.0, 1.0)]))


def bernoulli_merge(p: float = 0.3):
    """Bernoulli base with T(1) = T(0)."""
    return build_generalised(
        Bernoulli(p), PcsmFunction([0.0, 1.0], [LinearPiece(1.0, 0.0)], point_values={0.0: 1.0})
    )


def three_atoms():
    """Atoms 0, 1, 2 with masses 0.2, 0.3, 0.5 under |x - 1|, so T(0) = T(2)."""
    T = PcsmFunction(
        [0.0, 1.0, 2.0],
        [AbsPiece(1.0, 1.0, 0.0, increasing=False), AbsPiece(1.0, 1.0, 0.0, increasing=True)],
    )
    return build_generalised(Discrete([0.0, 1.0, 2.0], [0.2, 0.3, 0.5]), T)


def three_fold():
    """|3|u - 2/3| - 1|: dec 1 - 3u, inc 3u - 1, dec 3 - 3u."""
    return PiecewiseLinearWTransform([0.0, 1 / 3, 2 / 3, 1.0], [-3.0, 3.0, -3.0], [1.0, -1.0, 3.0])


def tent():
    """1 - |2u - 1|."""
    return PiecewiseLinearWTransform([0.0, 0.5, 1.0], [2.0, -2.0], [0.0, 2.0])


def v_linear(delta: float = 0.5):
    return VTransform(delta)


def maltese_map():
    """-4u + 1 on [0, 1/4], (4/3) u - 1/3 after."""
    return PiecewiseLinearWTransform([0.0, 0.25, 1.0], [-4.0, 4 / 3], [1.0, -1 / 3])


def sqrt_v():
    """2 - sqrt(1 + 4u) on [0, 3/4], 2 sqrt(u - 3/4) after."""
    pieces = [
        GenericPiece(lambda u: 2.0 - np.sqrt(1.0 + 4.0 * u), False,
                     inverse=lambda v: (np.square(2.0 - v) - 1.0) / 4.0,
                     derivative=lambda u: -2.0 / np.sqrt(1.0 + 4.0 * u)),
        GenericPiece(lambda u: 2.0 * np.sqrt(np.maximum(u - 0.75, 0.0)), True,
                     inverse=lambda v: 0.75 + np.square(v) / 4.0,
                     derivative=lambda u: 1.0 / np.sqrt(u - 0.75)),
    ]
    return ExplicitWTransform([0.0, 0.75, 1.0], pieces)


def exp_power_v(delta: float = 0.4, kappa: float = 2.0, xi: float = 0.5):
    return VTransform(delta, ExpPowerGenerator(kappa, xi))


def sqrt_mix_v(delta: float = 0.25):
    return VTransform(delta, SqrtMixGenerator())


def rotation(alpha: float = math.sqrt(2.0) / 6.0):
    """Bijective four-piece map whose third iterate rotates [0, 1/3] by alpha."""
    return PiecewiseLinearWTransform(
        [0.0, alpha, 1 / 3, 2 / 3, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [2 / 3 - alpha, 1 / 3 - alpha, 4 / 3, 1.0],
    )


NAMED_TRANSFORMS = {
    'shuffle': shuffle,
    'shuffle_linear': shuffle_linear,
    'piecewise_increasing': piecewise_increasing,
    'zigzag': zigzag,
    'frac_square': frac_square,
    'folded_uniform': folded_uniform,
    'square_base_v': square_base_v,
    'pssm_linear': pssm_linear,
    'tail_designer_pssm': tail_designer_pssm,
    'sqrt_three_piece': sqrt_three_piece,
    'theta_linear': theta_linear,
    'inn': inn,
    'two_piece_linear': two_piece_linear,
    'five_piece_linear': five_piece_linear,
    'mixed_type': mixed_type,
    'bernoulli_swap': bernoulli_swap,
    'bernoulli_merge': bernoulli_merge,
    'three_atoms': three_atoms,
    'three_fold': three_fold,
    'tent': tent,
    'v_linear': v_linear,
    'maltese_map': maltese_map,
    'sqrt_v': sqrt_v,
    'exp_power_v': exp_power_v,
    'sqrt_mix_v': sqrt_mix_v,
    'rotation': rotation,
    'reflection': reflection_transform,
    'flipped_v': flipped_v_transform,
}

# continuous-base fixtures checked for uniformity preservation
UNIFORMITY_FIXTURES = [
    'shuffle', 'piecewise_increasing', 'zigzag', 'frac_square', 'square_base_v',
    'pssm_linear', 'sqrt_three_piece', 'theta_linear', 'inn',
]
