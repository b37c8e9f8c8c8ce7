"""
Named copula models used by tests, the CLI and the Danube pipeline
"""

import math

from transforms.fixtures import (
    maltese_map, shuffle_linear, sqrt_three_piece, square_base_v, tail_designer_pssm, tent,
    theta_linear, three_fold, v_linear,
)
from transforms.wtransform import InnTransform, ceiling_transform, flipped_v_transform, reflection_transform

from .copula import Clayton, Gaussian, Gumbel, Maltese, OrdinalSum, StudentT, SurvivalGumbel
from .wcopula import make_model


def tail_designer(lower: float = 0.5, upper: float = 0.8):
    """
    Clayton, Gaussian(0.7) and Gumbel components on the blocks of a pssm
    whose boundary weights put all lower-tail weight on the first block and
    all upper-tail weight on the last.
    """
    W = tail_designer_pssm()
    components = [
        Clayton(-math.log(2.0) / math.log(lower)),
        Gaussian(0.7),
        Gumbel(math.log(2.0) / math.log(2.0 - upper)),
    ]
    return make_model(OrdinalSum(W.deltas, components), [W, W])


def flipped_v_clayton(tau: float = 0.7, deltas=(0.2, 0.8)):
    return make_model(Clayton.from_kendall_tau(tau), [flipped_v_transform(d) for d in deltas])


def cauchy_v(delta: float = 0.5):
    """Cauchy copula with |2u - 1| on both margins."""
    V = v_linear(delta)
    return make_model(StudentT(0.0, 1.0), [V, V])


def maltese_independence():
    """The Maltese copula under its W-transform is the independence copula."""
    W = maltese_map()
    return make_model(Maltese(), [W, W])


def tail_removal(rho: float = 0.9, nu: float = 2.0):
    W = sqrt_three_piece()
    return make_model(StudentT(rho, nu), [W, W])


def asymmetric_t(theta1: float = 0.3, theta2: float = 0.45, rho: float = 0.9, nu: float = 2.0):
    return make_model(StudentT(rho, nu), [theta_linear(theta1), theta_linear(theta2)])


def shuffle_of_min(rho: float = 0.999):
    """Near-comonotone base with the shuffle on the second margin: mass near the graph of the shuffle."""
    return make_model(Gaussian(rho), [reflection_transform(0.0), shuffle_linear()])


def survival_gumbel_sum(tau: float = 0.7):
    """Ordinal sum of two survival Gumbel copulas on (0, 1/2] and (1/2, 1]."""
    component = SurvivalGumbel.from_kendall_tau(tau)
    return OrdinalSum([0.0, 0.5, 1.0], [component, component])


def survival_gumbel_v(tau: float = 0.7):
    W = square_base_v()
    return make_model(survival_gumbel_sum(tau), [W, W])


def fold_and_tent(base=None):
    """|3|u - 2/3| - 1| on the first margin and 1 - |2u - 1| on the second."""
    return make_model(base or Clayton.from_kendall_tau(0.5), [three_fold(), tent()])


def wos(alpha1: float = 2.8437, alpha2: float = 2.0412, theta: float = 21.2635):
    """
    Ordinal sum of Gumbel(alpha1) and Gumbel(alpha2) at 1/2 with
    2u - ceil(2u - 1) on the first margin and the Inn transform on the second.
    Defaults are the published Danube estimates.
    """
    base = OrdinalSum([0.0, 0.5, 1.0], [Gumbel(alpha1), Gumbel(alpha2)])
    return make_model(base, [ceiling_transform(2), InnTransform(theta)])


NAMED_MODELS = {
    'tail_designer': tail_designer,
    'flipped_v_clayton': flipped_v_clayton,
    'cauchy_v': cauchy_v,
    'maltese_independence': maltese_independence,
    'tail_removal': tail_removal,
    'asymmetric_t': asymmetric_t,
    'shuffle_of_min': shuffle_of_min,
    'survival_gumbel_v': survival_gumbel_v,
    'fold_and_tent': fold_and_tent,
    'wos': wos,
}
