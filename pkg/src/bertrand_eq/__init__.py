"""Equilibria and no-regret dynamics in the discrete Bertrand pricing game."""

from .constructions import (
    ce_bound,
    cce_asymmetric,
    cce_symmetric,
    cce_total_utility_bound,
    harmonic,
    phi_ce_asymmetric_v1,
    phi_ce_asymmetric_v2,
    phi_ce_symmetric,
)
from .equilibrium import (
    ALL_MAPS,
    CONSTANT,
    DeviationClass,
    JointDist,
    VerificationReport,
    best_conditional_deviation,
    constant_deviation_gain,
    expected_utility,
    symmetrize,
    verify,
)
from .game import DemandFunction, DomainError, GameSpec, PriceGrid, margin, monopoly_optimum, utility
from .learners import LearnerConfig, SimResult, external_regret, simulate, swap_regret
from .lp import lp_best_ce_duopoly, lp_best_cce_duopoly, lp_best_symmetric_cce, solve_lp

__version__ = "0.1.0"
