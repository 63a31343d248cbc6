"""Grading contests whose grades are valued by the information they reveal.

A grading contest ``G = (n_1, ..., n_m)`` with ``n_m = n`` gives the top
``n_1`` agents grade 1, the next ``n_2 - n_1`` grade 2, and so on.  The market
pays each grade the expected wage of an agent whose rank is known to lie in
that block, so ``G`` induces the block averages of the rank-revealing values
``v*_i = E[w(theta_(i))]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .contest import MarginalEffects, PrizeVector, expected_marginal_effects
from .distributions import Distribution, HClassification, classify_h, require_assumption1
from .errors import DomainError, InputError, IntegrabilityError, QuadratureError
from .numerics import integrate_pieces, log_beta, probe_integrable_at_zero

WAGE_KINDS = ("inverse_productivity", "linear", "tabulated")
TIE_RTOL = 1e-9
MAX_ENUMERATION_N = 20


@dataclass(frozen=True)
class GradingContest:
    cuts: tuple[int, ...]

    def __init__(self, cuts: Iterable[int]):
        c = tuple(int(x) for x in cuts)
        if not c:
            raise InputError("a grading contest needs at least one grade")
        if c[0] < 1 or any(a >= b for a, b in zip(c, c[1:])):
            raise InputError(f"cuts must be strictly increasing positive integers: {c}")
        object.__setattr__(self, "cuts", c)

    @classmethod
    def _trusted(cls, cuts: tuple[int, ...]) -> "GradingContest":
        # skips validation; only for cut tuples built by enumeration
        obj = object.__new__(cls)
        object.__setattr__(obj, "cuts", cuts)
        return obj

    @property
    def n(self) -> int:
        return self.cuts[-1]

    @property
    def grades(self) -> int:
        return len(self.cuts)

    def blocks(self) -> list[tuple[int, int]]:
        """Half-open 0-based rank ranges, one per grade."""
        starts = (0,) + self.cuts[:-1]
        return list(zip(starts, self.cuts))

    def label(self) -> str:
        return ",".join(str(c) for c in self.cuts)

    @classmethod
    def parse(cls, text: str) -> "GradingContest":
        return cls(int(x) for x in text.replace("(", "").replace(")", "").split(",") if x.strip())


# -- wages --------------------------------------------------------------------------

@dataclass(frozen=True)
class WageSpec:
    kind: str
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self):
        if self.kind not in WAGE_KINDS:
            raise InputError(f"unknown wage kind {self.kind!r}; expected one of {WAGE_KINDS}")
        if self.kind == "tabulated":
            if self.table is None:
                raise InputError("tabulated wage needs a (theta, wage) table")
            x, y = (np.asarray(col, dtype=float) for col in self.table)
            if x.size < 2 or x.shape != y.shape or np.any(np.diff(x) <= 0):
                raise InputError("wage table abscissae must be strictly increasing")
            if x[0] > 0 or x[-1] < 1:
                raise InputError("wage table must cover [0, 1]")
            if np.any(y < 0):
                raise InputError("wages must be nonnegative")
        grid = np.linspace(0.0, 1.0, 513)[1:]
        if np.any(np.diff(self(grid)) > 0):
            raise InputError("wage function must be nonincreasing")

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "inverse_productivity":
            with np.errstate(divide="ignore"):
                return 1.0 / theta
        if self.kind == "linear":
            return 1.0 - theta
        x, y = self.table
        return PchipInterpolator(np.asarray(x), np.asarray(y))(theta)

    def describe(self) -> dict:
        if self.kind == "tabulated":
            return {"kind": "tabulated", "rows": len(self.table[0])}
        return {"kind": self.kind}


def make_wage(spec: Mapping[str, Any] | str) -> WageSpec:
    if isinstance(spec, str):
        return WageSpec(spec)
    if not isinstance(spec, Mapping):
        raise InputError(f"wage must be a name or a mapping, got {spec!r}")
    kind = spec.get("kind")
    if kind == "tabulated":
        if "theta" not in spec or "wage" not in spec:
            raise InputError("tabulated wage needs 'theta' and 'wage' lists")
        return WageSpec(kind, (tuple(spec["theta"]), tuple(spec["wage"])))
    return WageSpec(kind)


@dataclass(frozen=True)
class OrderStatWages:
    vstar: tuple[float, ...]

    def __post_init__(self):
        if any(a <= b for a, b in zip(self.vstar, self.vstar[1:])):
            raise DomainError(f"rank-revealing values must be strictly decreasing: {self.vstar}")

    @property
    def n(self) -> int:
        return len(self.vstar)


def closed_form_inverse_productivity_wages(p: float, n: int) -> tuple[float, ...]:
    """``E[1/theta | rank k] = n C(n-1, k-1) B(k - 1/p, n - k + 1)`` under ``F = x**p``, ``p > 1``."""
    if p <= 1:
        raise IntegrabilityError(f"E[1/theta] diverges at rank 1 for power({p})", rank=1)
    return tuple(n * math.comb(n - 1, k - 1) * math.exp(log_beta(k - 1 / p, n - k + 1))
                 for k in range(1, n + 1))


def order_statistic_wages(d: Distribution, w: WageSpec, n: int, tol: float = 1e-10) -> OrderStatWages:
    """Expected wage of the agent with the i-th lowest cost, i = 1..n.

    Integrated in quantile space, ``v*_i = int_0^1 n p_i(t) w(F^{-1}(t)) dt``,
    which removes the density from the integrand.
    """
    if n < 2:
        raise InputError("need at least two agents")

    def integrand(t):
        k = np.arange(n)[:, None]
        weights = n * np.array([math.comb(n - 1, i) for i in range(n)])[:, None]
        return weights * t ** k * (1.0 - t) ** (n - 1 - k) * w(d.quantile(t))

    if d.family == "power" and w.kind == "inverse_productivity":
        bad = [i for i in range(1, n + 1) if i - 1 / d.p <= 0]
    else:
        ok = probe_integrable_at_zero(integrand, shape=(n,))
        bad = [i + 1 for i in np.flatnonzero(~ok)]
    if bad:
        raise IntegrabilityError(
            f"expected wage diverges at rank {bad[0]} for {d.describe()} with {w.describe()}",
            rank=int(bad[0]))

    values, err, _ = integrate_pieces(integrand, d.quantile_breakpoints(), tol, shape=(n,))
    if d.family == "power" and w.kind == "inverse_productivity":
        closed = np.asarray(closed_form_inverse_productivity_wages(d.p, n))
        if np.any(np.abs(values - closed) > 1e-8 * np.maximum(1.0, np.abs(closed))):
            raise QuadratureError("order-statistic wages disagree with the closed form",
                                  float(np.max(np.abs(values - closed))), err)
    return OrderStatWages(tuple(float(x) for x in values))


def induced_prize_vector(G: GradingContest, vstar: OrderStatWages | Sequence[float]) -> PrizeVector:
    values = np.asarray(vstar.vstar if isinstance(vstar, OrderStatWages) else vstar, dtype=float)
    if values.size != G.n:
        raise InputError(f"grading contest has n = {G.n} but {values.size} wage values were given")
    out = np.empty_like(values)
    for lo, hi in G.blocks():
        out[lo:hi] = values[lo:hi].mean()
    return PrizeVector(out)


def refines(G: GradingContest, H: GradingContest) -> bool:
    """True iff ``G`` is at least as informative as ``H`` (H's cuts all appear in G)."""
    if G.n != H.n:
        raise InputError("gradings must have the same number of agents")
    return set(H.cuts) <= set(G.cuts)


def enumerate_gradings(n: int) -> list[GradingContest]:
    """All ``2**(n-1)`` gradings, ordered by number of grades then lexicographically."""
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise InputError(f"n must lie in [2, {MAX_ENUMERATION_N}], got {n}")
    inner = range(1, n)
    return [GradingContest._trusted(combo + (n,))
            for size in range(n) for combo in itertools.combinations(inner, size)]


def structured_candidates(classification: HClassification, n: int) -> list[GradingContest] | None:
    """Gradings that can be optimal given the shape of ``h``; None when undetermined."""
    if not classification.determinate:
        return None
    families = {
        ("increasing", "concave"): [tuple(range(1, n + 1))],
        ("increasing", "convex"): [(1, n - 1, n)],
        ("decreasing", "concave"): [tuple(range(1, k + 1)) + (n,) for k in range(1, n)],
        ("decreasing", "convex"): [(1, k, n) for k in range(1, n)],
    }
    if classification.flat:
        # constant h satisfies every case; interior prizes are then effort-neutral
        cands = [c for group in families.values() for c in group]
    else:
        cands = families[(classification.monotonicity, classification.curvature)]
    unique = sorted({tuple(sorted(set(c))) for c in cands}, key=lambda c: (len(c), c))
    return [GradingContest(c) for c in unique]


@dataclass(frozen=True)
class GradingSearchResult:
    best: GradingContest
    best_effort: float
    ranking: tuple[tuple[GradingContest, float], ...]
    mode: str
    fell_back: bool
    classification: HClassification | None
    vstar: OrderStatWages
    effects: MarginalEffects


def block_scores(vstar: OrderStatWages, effects: MarginalEffects) -> np.ndarray:
    """``S[a, b]``: effort contributed by pooling ranks ``a..b-1`` into one grade."""
    V = np.concatenate([[0.0], np.cumsum(vstar.vstar)])
    L = np.concatenate([[0.0], np.cumsum(effects.lambdas)])
    a = np.arange(V.size)[:, None]
    b = np.arange(V.size)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        S = (V[b] - V[a]) * (L[b] - L[a]) / (b - a)
    return np.where(b > a, S, 0.0)


def contest_effort(G: GradingContest, vstar: OrderStatWages, effects: MarginalEffects,
                   scores: np.ndarray | None = None) -> float:
    """Expected effort under the prizes induced by ``G``; O(grades) given ``scores``."""
    S = block_scores(vstar, effects) if scores is None else scores
    cuts = G.cuts
    return float(S[(0,) + cuts[:-1], cuts].sum())


def rank_contests(scored: Iterable[tuple[GradingContest, float]]) -> list[tuple[GradingContest, float]]:
    """Sort by effort, descending.  Efforts within 1e-9 (relative) of a group's
    leader are tied and ordered by fewer grades, then smaller cut sequence."""
    by_effort = sorted(scored, key=lambda item: -item[1])
    ranking: list[tuple[GradingContest, float]] = []
    i = 0
    while i < len(by_effort):
        lead = by_effort[i][1]
        j = i
        while j < len(by_effort) and abs(by_effort[j][1] - lead) <= TIE_RTOL * max(abs(lead), 1e-300):
            j += 1
        j = max(j, i + 1)
        if j - i == 1:
            ranking.append(by_effort[i])
        else:
            ranking.extend(sorted(by_effort[i:j], key=lambda item: (len(item[0].cuts), item[0].cuts)))
        i = j
    return ranking


def optimize_grading(d: Distribution, w: WageSpec, n: int, mode: str = "bruteforce") -> GradingSearchResult:
    """Effort-maximising grading contest.

    ``bruteforce`` scores every grading; ``structured`` scores only the
    family allowed by the shape of ``h`` and falls back to brute force when
    that shape is indeterminate.
    """
    if mode not in ("bruteforce", "structured"):
        raise InputError(f"unknown search mode {mode!r}")
    if not 2 <= n <= MAX_ENUMERATION_N:
        raise InputError(f"n must lie in [2, {MAX_ENUMERATION_N}], got {n}")
    require_assumption1(d)
    vstar = order_statistic_wages(d, w, n)
    effects = expected_marginal_effects(d, n, method="auto")

    classification = None
    fell_back = False
    if mode == "structured":
        classification = classify_h(d)
        candidates = structured_candidates(classification, n)
        if candidates is None:
            fell_back = True
            candidates = enumerate_gradings(n)
    else:
        candidates = enumerate_gradings(n)

    scores = block_scores(vstar, effects)
    ranking = rank_contests((G, contest_effort(G, vstar, effects, scores)) for G in candidates)
    best, best_effort = ranking[0]
    return GradingSearchResult(best, best_effort, tuple(ranking), mode, fell_back,
                               classification, vstar, effects)


@dataclass(frozen=True)
class Table1Row:
    family: str
    p: float
    monotonicity: str
    curvature: str
    lambda_order: str
    optimal: GradingContest | None  # None when the wage is not integrable
    optimal_effort: float
    predicted_form: str


_FORMS = {
    ("increasing", "concave"): "(1,2,...,n)",
    ("increasing", "convex"): "(1,n-1,n)",
    ("decreasing", "concave"): "(1,2,...,k,n)",
    ("decreasing", "convex"): "(1,k,n)",
}


def table1_rows(ps: Sequence[float], n: int, w: WageSpec | None = None) -> list[Table1Row]:
    """Recompute shape of h, ordering of marginal effects and optimal grading
    for ``power(p)`` and ``reflected_power(p)`` at each supplied ``p``."""
    from .distributions import construct_distribution

    w = w or WageSpec("linear")
    rows = []
    for family in ("power", "reflected_power"):
        for p in ps:
            if family == "power" and p <= 0.5:
                continue
            d = construct_distribution({"family": family, "p": p})
            cls = classify_h(d)
            order = expected_marginal_effects(d, n, method="auto").ordering()
            try:
                result = optimize_grading(d, w, n, "bruteforce")
                best, effort = result.best, result.best_effort
            except IntegrabilityError:
                best, effort = None, math.nan
            rows.append(Table1Row(family, float(p), cls.monotonicity, cls.curvature, order,
                                  best, effort, _FORMS.get((cls.monotonicity, cls.curvature), "?")))
    return rows
