"""Equilibrium effort, prize design and grading schemes for rank-order contests
with privately known marginal costs."""

from .contest import (
    MarginalEffects,
    PrizeVector,
    compare_contests,
    equilibrium_effort_curve,
    expected_effort,
    expected_marginal_effects,
    majorizes,
)
from .distributions import Distribution, classify_h, construct_distribution, power, reflected_power, tabulated
from .errors import ContestError, DomainError, InputError, IntegrabilityError, QuadratureError
from .grading import GradingContest, WageSpec, optimize_grading, order_statistic_wages

__all__ = [
    "ContestError", "DomainError", "Distribution", "GradingContest", "InputError",
    "IntegrabilityError", "MarginalEffects", "PrizeVector", "QuadratureError", "WageSpec",
    "classify_h", "compare_contests", "construct_distribution", "equilibrium_effort_curve",
    "expected_effort", "expected_marginal_effects", "majorizes", "optimize_grading",
    "order_statistic_wages", "power", "reflected_power", "tabulated",
]
