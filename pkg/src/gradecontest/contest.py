"""Rank-order contests with private costs: equilibrium effort and prize effects.

An agent of cost type ``theta`` who ranks i-th wins prize ``v[i-1]``.  In the
symmetric equilibrium effort is

    g(theta) = sum_i v_i m_i(theta),   m_i(theta) = -int_{F(theta)}^1 p_i'(t) / F^{-1}(t) dt,

where ``p_i`` is the Bin(n-1, t) mass at ``i-1``.  Writing the sum in prize
gaps ``v_i - v_{i+1}`` makes every integrand nonnegative, which is how curves
are evaluated here.  Expected marginal effects are
``lambda_i = -int_0^1 p_i'(t) h(t) dt`` with ``h(t) = t / F^{-1}(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .distributions import (
    Distribution,
    competition_index_direction,
    density_direction,
    require_assumption1,
)
from .errors import DomainError, InputError, QuadratureError
from .numerics import (
    integrate,
    integrate_pieces,
    integrate_vector,
    log_beta,
    probe_integrable_at_zero,
)

THETA_MIN = 1e-3
SIGN_SLACK = 1e-9
CLOSED_FORM_RTOL = 1e-7


# -- types --------------------------------------------------------------------------

@dataclass(frozen=True)
class PrizeVector:
    values: tuple[float, ...]

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        if len(vals) < 2:
            raise InputError("a contest needs at least two prizes")
        if not all(math.isfinite(v) for v in vals):
            raise InputError("prizes must be finite")
        if any(a < b for a, b in zip(vals, vals[1:])):
            raise InputError(f"prizes must be nonincreasing: {vals}")
        if vals[-1] < 0:
            raise InputError("the last prize must be nonnegative")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    def gaps(self) -> np.ndarray:
        """``v_i - v_{i+1}`` for i = 1..n-1."""
        v = np.asarray(self.values)
        return v[:-1] - v[1:]

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def as_prizes(v) -> PrizeVector:
    return v if isinstance(v, PrizeVector) else PrizeVector(v)


@dataclass(frozen=True)
class MarginalEffects:
    lambdas: tuple[float, ...]
    methods: tuple[str, ...]
    closed_form: tuple[float, ...] | None = None
    abs_error: float = 0.0

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lambdas)

    def ordering(self) -> str:
        """Ranks sorted by decreasing effect, with 0 marking the sign change, e.g. ``1>2>0>3``."""
        order = sorted(range(self.n), key=lambda i: -self.lambdas[i])
        parts, placed_zero = [], False
        for i in order:
            if not placed_zero and self.lambdas[i] < 0:
                parts.append("0")
                placed_zero = True
            parts.append(str(i + 1))
        if not placed_zero:
            parts.append("0")
        return ">".join(parts)


@dataclass(frozen=True)
class EquilibriumCurve:
    grid: np.ndarray
    efforts: np.ndarray
    prizes: PrizeVector
    theta_min: float = field(default=THETA_MIN)

    def __post_init__(self):
        if np.any(np.diff(self.efforts) > SIGN_SLACK):
            raise QuadratureError("equilibrium effort is not nonincreasing",
                                  float(np.max(np.diff(self.efforts))), SIGN_SLACK)
        if self.grid[-1] == 1.0 and abs(self.efforts[-1]) > SIGN_SLACK:
            raise QuadratureError("effort at theta = 1 is not zero", float(self.efforts[-1]), 0.0)


# -- rank probabilities -------------------------------------------------------------

def _binom_pmf(m: int, k: int, t):
    if k < 0 or k > m:
        return np.zeros_like(t, dtype=float)
    return math.comb(m, k) * t ** k * (1.0 - t) ** (m - k)


def rank_probability(n: int, i: int, t):
    """``(p_i(t), p_i'(t))``: probability of rank ``i`` when beating each rival w.p. ``1-t``.

    ``t`` is the quantile ``F(theta)`` of the agent's own type.
    """
    if n < 2 or not 1 <= i <= n:
        raise InputError(f"rank {i} out of range for n = {n}")
    t_arr = np.asarray(t, dtype=float)
    p = _binom_pmf(n - 1, i - 1, t_arr)
    dp = (n - 1) * (_binom_pmf(n - 2, i - 2, t_arr) - _binom_pmf(n - 2, i - 1, t_arr))
    if np.ndim(t) == 0:
        return float(p), float(dp)
    return p, dp


def _rank_derivatives(n: int, t: np.ndarray) -> np.ndarray:
    """Rows ``p_i'(t)`` for i = 1..n."""
    return np.stack([rank_probability(n, i, t)[1] for i in range(1, n + 1)])


def _upper_tail_slopes(n: int, t: np.ndarray) -> np.ndarray:
    """Rows ``-sum_{j<=i} p_j'(t) = (n-1) b_{n-2}(i-1; t) >= 0`` for i = 1..n-1."""
    return np.stack([(n - 1) * _binom_pmf(n - 2, i - 1, t) for i in range(1, n)])


# -- marginal effects ---------------------------------------------------------------

def marginal_effect(d: Distribution, n: int, i: int, theta: float, tol: float = 1e-10) -> float:
    """``m_i(theta)``: derivative of equilibrium effort at ``theta`` w.r.t. prize ``i``."""
    rank_probability(n, i, 0.5)
    if not 0.0 <= theta <= 1.0:
        raise DomainError("theta must lie in [0, 1]")

    def integrand(t):
        return rank_probability(n, i, t)[1] / d.quantile(t)

    lower = float(d.cdf(theta))
    if lower == 0.0 and not probe_integrable_at_zero(integrand):
        raise DomainError(f"m_{i}(0) diverges for {d.describe()}")
    return -integrate(integrand, lower, 1.0, tol).value


def effort_basis(d: Distribution, n: int, grid: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """``G_i(theta) = int_{F(theta)}^1 -sum_{j<=i} p_j'(t) / F^{-1}(t) dt``, shape (n-1, len(grid)).

    Effort under any prize vector is ``gaps @ basis``.  Integrals are
    accumulated from theta = 1 downwards over consecutive grid cells.
    """
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or np.any(x <= 0) or np.any(x > 1):
        raise InputError("grid must be a nonempty 1-d array inside (0, 1]")
    if np.any(np.diff(x) <= 0):
        raise InputError("grid must be strictly increasing")

    def integrand(t):
        return _upper_tail_slopes(n, t) / d.quantile(t)

    knots = np.append(np.asarray(d.cdf(x), dtype=float), 1.0)
    basis = np.zeros((n - 1, x.size))
    acc = np.zeros(n - 1)
    for j in range(x.size - 1, -1, -1):
        piece, _, _ = integrate_vector(integrand, knots[j], knots[j + 1], tol, shape=(n - 1,))
        acc = acc + piece
        basis[:, j] = acc
    return basis


def default_grid(size: int = 256, theta_min: float = THETA_MIN) -> np.ndarray:
    return np.linspace(theta_min, 1.0, size)


def equilibrium_effort_curve(d: Distribution, v, grid: Sequence[float] | None = None) -> EquilibriumCurve:
    """Equilibrium effort on ``grid`` (default 256 points on [1e-3, 1])."""
    prizes = as_prizes(v)
    require_assumption1(d)
    x = default_grid() if grid is None else np.asarray(grid, dtype=float)
    basis = effort_basis(d, prizes.n, x)
    efforts = prizes.gaps() @ basis
    return EquilibriumCurve(x, efforts, prizes, float(x[0]))


def effort_direct(d: Distribution, v, theta: float) -> float:
    """``sum_i v_i m_i(theta)`` term by term; cross-check for the gap form."""
    prizes = as_prizes(v)
    return sum(vi * marginal_effect(d, prizes.n, i, theta)
               for i, vi in enumerate(prizes.values, start=1) if vi != 0.0)


def closed_form_lambda_power(p: float, n: int, i: int) -> float:
    """Expected marginal effect of prize ``i`` when ``F(x) = x**p``."""
    if p <= 0.5:
        raise DomainError(f"closed form needs p > 1/2, got {p}")
    if n < 2 or not 1 <= i <= n:
        raise InputError(f"rank {i} out of range for n = {n}")
    if i == n:
        return -(n - 1) / (n - 1.0 / p)
    if i == 1:
        if p > 1:
            return (p - 1) / p * math.exp(log_beta(1 - 1 / p, n))
        return (n - 1) * math.exp(log_beta(2 - 1 / p, n - 1))
    return (p - 1) / p * math.comb(n - 1, i - 1) * math.exp(log_beta(i - 1 / p, n - i + 1))


def expected_marginal_effects(d: Distribution, n: int, method: str = "quadrature",
                              tol: float = 1e-10) -> MarginalEffects:
    """``lambda_i = E[m_i(theta)]`` for i = 1..n.

    ``method``: ``"quadrature"`` integrates ``-p_i' h`` (and, for power laws,
    cross-checks against the closed form); ``"closed_form"`` uses the power-law
    formulas only; ``"auto"`` prefers the closed form where one exists.
    """
    if n < 2:
        raise InputError("need at least two agents")
    if method not in ("quadrature", "closed_form", "auto"):
        raise InputError(f"unknown method {method!r}")
    require_assumption1(d)

    closed = None
    if d.family == "power":
        closed = tuple(closed_form_lambda_power(d.p, n, i) for i in range(1, n + 1))
    elif method == "closed_form":
        raise InputError(f"no closed form for family {d.family}")

    if method == "closed_form" or (method == "auto" and closed is not None):
        return MarginalEffects(closed, ("closed_form",) * n, closed, 0.0)

    def integrand(t):
        return -_rank_derivatives(n, t) * d.h(t)

    values, err, _ = integrate_pieces(integrand, d.quantile_breakpoints(), tol, shape=(n,))
    if abs(values.sum()) > 1e-8:
        raise QuadratureError("marginal effects do not sum to zero", float(values.sum()), err)
    if closed is not None:
        gap = np.abs(values - np.asarray(closed))
        if np.any(gap > CLOSED_FORM_RTOL * np.maximum(np.abs(closed), 1.0)):
            raise QuadratureError("quadrature disagrees with the closed form",
                                  float(np.max(gap)), err)
    return MarginalEffects(tuple(float(x) for x in values), ("quadrature",) * n, closed, err)


def expected_effort(d: Distribution, v, effects: MarginalEffects | None = None) -> float:
    prizes = as_prizes(v)
    if effects is None:
        effects = expected_marginal_effects(d, prizes.n)
    if effects.n != prizes.n:
        raise InputError("prize vector and marginal effects differ in length")
    return float(np.dot(prizes.values, effects.lambdas))


# -- competitiveness ----------------------------------------------------------------

def majorizes(v, w, tol: float = 1e-12) -> bool:
    """True iff every prefix sum of ``v`` weakly exceeds that of ``w`` and the totals agree."""
    a = np.asarray(list(v), dtype=float)
    b = np.asarray(list(w), dtype=float)
    if a.shape != b.shape:
        raise InputError("majorization needs equal-length vectors")
    ca, cb = np.cumsum(a), np.cumsum(b)
    return bool(np.all(ca >= cb - tol) and abs(ca[-1] - cb[-1]) <= tol)


@dataclass(frozen=True)
class ComparisonCheck:
    name: str
    applies: bool
    predicted_sign: int  # +1: effort_v >= effort_w, -1: <=, 0: equal
    agrees: bool | None


@dataclass(frozen=True)
class ContestComparison:
    effort_v: float
    effort_w: float
    delta: float
    checks: tuple[ComparisonCheck, ...]

    @property
    def applicable_tags(self) -> list[str]:
        return [c.name for c in self.checks if c.applies]


def _agrees(delta: float, sign: int, scale: float) -> bool:
    slack = SIGN_SLACK * max(scale, 1.0)
    if sign > 0:
        return delta >= -slack
    if sign < 0:
        return delta <= slack
    return abs(delta) <= slack


def compare_contests(d: Distribution, v, w, effects: MarginalEffects | None = None) -> ContestComparison:
    """Expected effort under ``v`` and ``w`` plus which comparative-statics results apply.

    Two checks are reported:

    * ``single_prize_monotone_density``: ``v`` and ``w`` differ in one
      intermediate prize and the density is monotone; raising that prize
      helps under an increasing density and hurts under a decreasing one.
    * ``majorization_fixed_ends``: equal first and last prizes, one vector
      majorizes the other, and ``f(t) t^2 / F(t)^2`` is monotone; more
      competition hurts when that index increases and helps when it decreases.
    """
    pv, pw = as_prizes(v), as_prizes(w)
    if pv.n != pw.n:
        raise InputError("contests must have the same number of prizes")
    n = pv.n
    if effects is None:
        effects = expected_marginal_effects(d, n)
    ev, ew = expected_effort(d, pv, effects), expected_effort(d, pw, effects)
    delta = ev - ew
    scale = max(abs(ev), abs(ew))
    a, b = np.asarray(pv.values), np.asarray(pw.values)
    checks = []

    changed = np.flatnonzero(a != b)
    dens = density_direction(d)
    if changed.size == 1 and 0 < changed[0] < n - 1 and dens is not None:
        up = 1 if a[changed[0]] > b[changed[0]] else -1
        sign = {"increasing": up, "decreasing": -up, "constant": 0}[dens]
        checks.append(ComparisonCheck("single_prize_monotone_density", True, sign,
                                     _agrees(delta, sign, scale)))
    else:
        checks.append(ComparisonCheck("single_prize_monotone_density", False, 0, None))

    comp = competition_index_direction(d)
    ends_fixed = a[0] == b[0] and a[-1] == b[-1]
    v_more = majorizes(a, b)
    w_more = majorizes(b, a)
    if changed.size and ends_fixed and (v_more or w_more) and comp is not None:
        more = 1 if v_more else -1
        sign = {"increasing": -more, "decreasing": more, "constant": 0}[comp]
        checks.append(ComparisonCheck("majorization_fixed_ends", True, sign,
                                     _agrees(delta, sign, scale)))
    else:
        checks.append(ComparisonCheck("majorization_fixed_ends", False, 0, None))

    return ContestComparison(ev, ew, delta, tuple(checks))
