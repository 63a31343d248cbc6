"""Budget allocation under concave prize utility, and the screening objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contest import MarginalEffects, PrizeVector, expected_marginal_effects
from .distributions import Distribution
from .errors import InputError, UnsupportedOrderingError
from .numerics import invert_monotone, log_beta

ORDER_SLACK = 1e-9
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class BudgetAllocation:
    prizes: PrizeVector
    r: float
    B: float
    v1: float
    ratios: tuple[float, ...]
    case: str

    def __post_init__(self):
        v = np.asarray(self.prizes.values)
        if abs(v.sum() - self.B) > 1e-10 * max(1.0, self.B):
            raise InputError(f"allocation spends {v.sum()} of budget {self.B}")
        if v[-1] != 0.0:
            raise InputError("the last-ranked agent must receive nothing")


def utility_effort(v, effects: MarginalEffects, r: float) -> float:
    """``sum_i u(v_i) lambda_i`` with ``u(v) = v**r``."""
    v = np.asarray(v.values if isinstance(v, PrizeVector) else v, dtype=float)
    return float(np.power(v, r) @ np.asarray(effects.lambdas))


def budget_allocation_power_utility(d: Distribution, n: int, B: float, r: float,
                                    effects: MarginalEffects | None = None) -> BudgetAllocation:
    """Effort-maximising split of budget ``B`` when agents value prize ``v`` as ``v**r``.

    Two orderings of the expected marginal effects are supported: all interior
    effects negative (winner-take-all), and all interior effects positive and
    strictly decreasing (prizes to the top ``n - 1`` ranks, with
    ``v_i / v_1 = (lambda_i / lambda_1) ** (1 / (1 - r))``).
    """
    if not B > 0 or not math.isfinite(B):
        raise InputError(f"budget must be positive and finite, got {B}")
    if not 0 < r < 1:
        raise InputError(f"utility exponent must lie in (0, 1), got {r}")
    lam = np.asarray((effects or expected_marginal_effects(d, n, method="auto")).lambdas)
    if lam.size != n:
        raise InputError("marginal effects do not match n")
    interior = lam[1:-1]

    if interior.size == 0 or np.all(interior < -ORDER_SLACK):
        v = np.zeros(n)
        v[0] = B
        return BudgetAllocation(PrizeVector(v), r, B, B, (), "winner_take_all")

    awarded = lam[:-1]
    if not (np.all(interior > ORDER_SLACK) and np.all(np.diff(awarded) < -ORDER_SLACK)):
        raise UnsupportedOrderingError(
            "allocation is characterised only when interior marginal effects are all "
            f"negative, or all positive and strictly decreasing; got {np.round(lam, 9).tolist()}")

    ratios = (interior / lam[0]) ** (1.0 / (1.0 - r))
    scale = 1.0 + ratios.sum()
    v1 = invert_monotone(lambda x: x * scale, B, 0.0, B, tol=0.0)
    v = np.concatenate([[v1], v1 * ratios, [0.0]])
    # absorb the last rounding ulp so the budget binds
    v[0] += B - v.sum()
    return BudgetAllocation(PrizeVector(v), r, B, float(v[0]),
                            tuple(float(x) for x in ratios), "top_n_minus_1")


def local_optimality_gain(allocation: BudgetAllocation, effects: MarginalEffects,
                          eps: float | None = None) -> float:
    """Largest gain in utility-weighted effort from moving ``eps`` between two ranks.

    Only transfers that keep the prize vector nonincreasing and nonnegative
    are tried.  A local optimum returns a value ``<= 0`` up to rounding.
    """
    v = np.asarray(allocation.prizes.values, dtype=float)
    eps = 1e-6 * allocation.B if eps is None else eps
    base = utility_effort(v, effects, allocation.r)
    best = -math.inf
    for i in range(v.size):
        for j in range(v.size):
            if i == j or v[i] < eps:
                continue
            w = v.copy()
            w[i] -= eps
            w[j] += eps
            if np.any(np.diff(w) > 0) or np.any(w < 0):
                continue
            best = max(best, utility_effort(w, effects, allocation.r) - base)
    return best


@dataclass(frozen=True)
class ScreeningReport:
    n: int
    p: float
    k: int
    mu: float
    mu1: float
    mu0: float
    z: float
    variance: float
    denominator: float
    objective: float
    # the denominator is used in closed form rather than re-derived here
    denominator_note: str = "closed form; equals expected effort with k unit prizes"

    def __post_init__(self):
        total = self.k / self.n * self.mu1 + (self.n - self.k) / self.n * self.mu0
        if abs(total - self.mu) > 1e-9:
            raise InputError("posterior means do not average to the prior mean")
        if self.variance < 0:
            raise InputError("variance must be nonnegative")


def screening_objective(p: float, n: int, k: int) -> ScreeningReport:
    """Variance of posterior means per unit of expected effort when the top ``k``
    of ``n`` agents win a unit prize and types follow ``F(x) = x**p``."""
    if not (p >= 1 and math.isfinite(p)):
        raise InputError(f"screening requires p >= 1, got {p}")
    if n < 2 or not 1 <= k <= n - 1:
        raise InputError(f"need 1 <= k <= n - 1, got n={n}, k={k}")
    mu = p / (p + 1.0)
    z = math.exp(log_beta(k + 1 + 1 / p, n - k) - log_beta(k, n - k))
    mu1 = n / k * mu * z
    mu0 = n / (n - k) * mu * (1.0 - z)
    variance = mu * mu * (n * z - k) ** 2 / (k * (n - k))
    denominator = math.comb(n - 1, k - 1) * (n - k) * math.exp(log_beta(k + 1 - 1 / p, n - k))
    return ScreeningReport(n, float(p), k, mu, mu1, mu0, z, variance, denominator,
                           variance / denominator)


def screening_optimize(p: float, n: int) -> tuple[int, list[ScreeningReport]]:
    """Best number of prizes; near-ties (1e-9 relative) go to the smaller ``k``."""
    table = [screening_objective(p, n, k) for k in range(1, n)]
    top = max(row.objective for row in table)
    k_star = next(row.k for row in table if row.objective >= top - TIE_RTOL * abs(top))
    return k_star, table
