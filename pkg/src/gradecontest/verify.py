"""Independent checks of the equilibrium: deviation regret and simulated ranks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from .contest import as_prizes, default_grid, effort_basis, rank_probability
from .distributions import Distribution, require_assumption1
from .errors import InputError
from .numerics import CrossingReport, crossing_count

REGRET_RTOL = 1e-4
CHI2_LEVEL = 0.999
MIN_SAMPLES = 10_000


@dataclass(frozen=True)
class RegretReport:
    max_regret: float
    worst_type: float
    worst_deviation: float
    type_points: int
    deviation_points: int
    threshold: float
    curve_monotone: bool

    def __post_init__(self):
        if self.max_regret < -1e-12:
            raise InputError("regret cannot be negative")

    @property
    def accepted(self) -> bool:
        return self.max_regret <= self.threshold and self.curve_monotone


def _rank_matrix(n: int, t: np.ndarray) -> np.ndarray:
    return np.stack([rank_probability(n, i, t)[0] for i in range(1, n + 1)])


class RegretEvaluator:
    """Deviation-regret checker for one distribution, field size and grid pair.

    The effort basis depends only on ``(d, n, grid)``, so it is built once and
    reused for every prize vector checked.
    """

    def __init__(self, d: Distribution, n: int,
                 type_grid: Sequence[float] | None = None,
                 deviation_grid: Sequence[float] | None = None):
        require_assumption1(d)
        self.n = n
        self.types = (np.linspace(1e-2, 1.0, 64) if type_grid is None
                      else np.asarray(type_grid, dtype=float))
        self.devs = (np.linspace(1e-3, 1.0, 256) if deviation_grid is None
                     else np.asarray(deviation_grid, dtype=float))
        for grid in (self.types, self.devs):
            if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(grid > 1):
                raise InputError("grids must be nonempty and lie inside (0, 1]")
        self.points = np.unique(np.concatenate([self.types, self.devs]))
        self.own = np.searchsorted(self.points, self.types)
        self.basis = effort_basis(d, n, self.points)
        # P(rank <= i) for i = 1..n-1 at every point
        ranks = _rank_matrix(n, np.asarray(d.cdf(self.points), dtype=float))
        self.at_most = np.cumsum(ranks, axis=0)[:-1]

    def __call__(self, v) -> RegretReport:
        prizes = as_prizes(v)
        if prizes.n != self.n:
            raise InputError(f"prize vector has {prizes.n} entries, evaluator expects {self.n}")
        gaps = prizes.gaps()
        g = gaps @ self.basis
        # gap form v_n + sum_i (v_i - v_{i+1}) P(rank <= i) is exact for constant prizes
        gross = prizes.values[-1] + gaps @ self.at_most
        rows = np.arange(self.types.size)
        payoff = gross[None, :] - self.types[:, None] * g[None, :]
        best = np.argmax(payoff, axis=1)
        regret = payoff[rows, best] - payoff[rows, self.own]
        worst = int(np.argmax(regret))
        spread = prizes.values[0] - prizes.values[-1]
        strict = np.all(np.diff(g) < 0) if spread > 0 else np.all(g == 0)
        return RegretReport(
            max_regret=float(regret[worst]),
            worst_type=float(self.types[worst]),
            worst_deviation=float(self.points[best[worst]]),
            type_points=int(self.types.size),
            deviation_points=int(self.devs.size),
            threshold=REGRET_RTOL * spread,
            curve_monotone=bool(strict),
        )


def best_response_regret(
    d: Distribution,
    v,
    type_grid: Sequence[float] | None = None,
    deviation_grid: Sequence[float] | None = None,
) -> RegretReport:
    """Largest gain any type can get by mimicking another type.

    A type ``theta`` that mimics ``t`` wins prize ``i`` with probability
    ``p_i(F(t))`` and pays ``theta * g(t)``.  Each type's own point is added to
    the deviation set, so the regret is a nonnegative grid maximum.  Defaults:
    64 types on [0.01, 1], 256 deviations on [0.001, 1].
    """
    prizes = as_prizes(v)
    return RegretEvaluator(d, prizes.n, type_grid, deviation_grid)(prizes)


@dataclass(frozen=True)
class RankFrequencies:
    counts: tuple[int, ...]
    empirical: tuple[float, ...]
    analytic: tuple[float, ...]
    samples: int
    chi2_statistic: float
    chi2_threshold: float

    def __post_init__(self):
        if sum(self.counts) != self.samples:
            raise InputError("rank counts must add up to the sample size")

    @property
    def passed(self) -> bool:
        return self.chi2_statistic <= self.chi2_threshold


def chi_square(counts: np.ndarray, probs: np.ndarray, level: float = CHI2_LEVEL) -> tuple[float, float]:
    """Pearson statistic and its ``level`` quantile; cells with zero mass are
    excluded, and any count landing in one makes the statistic infinite."""
    counts = np.asarray(counts, dtype=float)
    expected = counts.sum() * np.asarray(probs, dtype=float)
    live = expected > 0
    if np.any(counts[~live] > 0):
        return math.inf, 0.0
    stat = float(np.sum((counts[live] - expected[live]) ** 2 / expected[live]))
    dof = int(live.sum()) - 1
    return stat, float(chi2.ppf(level, dof)) if dof > 0 else 0.0


def monte_carlo_ranks(d: Distribution, n: int, theta: float, samples: int = 100_000,
                      seed: int = 0, shards: int = 4) -> RankFrequencies:
    """Simulate the rank of a type-``theta`` agent against ``n - 1`` rivals.

    Lower cost ranks higher.  Each shard draws from its own child of
    ``SeedSequence(seed)``; counts are summed, so the result does not depend
    on the order shards finish in.
    """
    if n < 2:
        raise InputError("need at least two agents")
    if samples < MIN_SAMPLES:
        raise InputError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if not 0 <= theta <= 1:
        raise InputError("theta must lie in [0, 1]")
    shards = max(1, min(int(shards), samples))
    sizes = [samples // shards + (1 if s < samples % shards else 0) for s in range(shards)]

    counts = np.zeros(n, dtype=np.int64)
    for child, size in zip(np.random.SeedSequence(seed).spawn(shards), sizes):
        rng = np.random.default_rng(child)
        rivals = np.asarray(d.quantile(rng.random((size, n - 1))), dtype=float)
        better = np.sum(rivals < theta, axis=1)
        tied = np.sum(rivals == theta, axis=1)
        # uniform position among tied rivals
        rank = 1 + better + rng.integers(0, tied + 1)
        counts += np.bincount(rank - 1, minlength=n)

    t = float(d.cdf(theta))
    analytic = np.array([rank_probability(n, i, t)[0] for i in range(1, n + 1)])
    stat, threshold = chi_square(counts, analytic)
    return RankFrequencies(
        counts=tuple(int(c) for c in counts),
        empirical=tuple(float(c) / samples for c in counts),
        analytic=tuple(float(a) for a in analytic),
        samples=samples,
        chi2_statistic=stat,
        chi2_threshold=threshold,
    )


def contest_crossings(d: Distribution, v, w, grid: Sequence[float] | None = None) -> CrossingReport:
    """Crossings of the equilibrium curves under prize vectors ``v`` and ``w``."""
    pv, pw = as_prizes(v), as_prizes(w)
    if pv.n != pw.n:
        raise InputError("prize vectors must have the same length")
    x = default_grid() if grid is None else np.asarray(grid, dtype=float)
    basis = effort_basis(d, pv.n, x)
    return crossing_count(x, pv.gaps() @ basis, pw.gaps() @ basis)
