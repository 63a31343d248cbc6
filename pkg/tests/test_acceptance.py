"""Acceptance suite: one or more tests per criterion, summarised at the end of the run."""

import itertools
import math

import numpy as np
import pytest

from gradecontest.contest import (
    effort_basis,
    expected_effort,
    expected_marginal_effects,
    majorizes,
    marginal_effect,
)
from gradecontest.distributions import power, reflected_power
from gradecontest.errors import IntegrabilityError
from gradecontest.extensions import (
    budget_allocation_power_utility,
    screening_objective,
    screening_optimize,
)
from gradecontest.grading import (
    WageSpec,
    enumerate_gradings,
    induced_prize_vector,
    optimize_grading,
    order_statistic_wages,
    refines,
)
from gradecontest.verify import RegretEvaluator, contest_crossings, monte_carlo_ranks

criterion = pytest.mark.criterion
SLACK = 1e-9
WAGES = (WageSpec("inverse_productivity"), WageSpec("linear"))

# one representative per shape of h: (incr, concave), (incr, convex), (decr, concave), (decr, convex)
FOUR_FAMILIES = [power(2), reflected_power(0.6), reflected_power(2), power(0.75)]


def _random_prizes(rng, n):
    v = np.sort(rng.random(n))[::-1]
    v[-1] = 0.0 if rng.random() < 0.5 else v[-1]
    return v


@criterion(1, "closed-form lambda agreement")
@pytest.mark.parametrize("p", [0.6, 0.75, 1.5, 2, 3])
def test_c01_closed_form_lambdas(p):
    lam = expected_marginal_effects(power(p), 3, method="quadrature").lambdas
    assert lam[1] == pytest.approx(2 * p * (p - 1) / ((3 * p - 1) * (2 * p - 1)), rel=1e-6)
    assert lam[2] == pytest.approx(-2 * p / (3 * p - 1), rel=1e-6)


@criterion(2, "null-sum invariant")
@pytest.mark.parametrize("d", FOUR_FAMILIES, ids=str)
def test_c02_null_sum(d):
    for n in range(3, 9):
        assert abs(sum(expected_marginal_effects(d, n, method="quadrature").lambdas)) <= 1e-8
        for theta in np.round(np.arange(0.1, 1.0, 0.1), 1):
            assert abs(sum(marginal_effect(d, n, i, theta) for i in range(1, n + 1))) <= 1e-8


def _table1_order(family, p, n):
    """Strict chain of effects (``"0"`` marks zero) plus ranks only known to be negative."""
    interior = list(range(2, n))
    if family == "power" and p > 1:
        return [1] + interior + ["0", n], []
    if family == "reflected_power" and p < 1:
        return [1] + interior[::-1] + ["0", n], []
    if family == "reflected_power":
        return [1, "0"] + interior, [n]
    return [1, "0"] + interior[::-1], [n]


@criterion(3, "sign pattern and effect orderings per family")
@pytest.mark.parametrize("family,p", list(itertools.product(["power", "reflected_power"], [0.6, 0.75, 2, 3])))
def test_c03_orderings(family, p):
    d = power(p) if family == "power" else reflected_power(p)
    for n in range(3, 9):
        lam = expected_marginal_effects(d, n, method="quadrature").lambdas
        value = {str(i): lam[i - 1] for i in range(1, n + 1)} | {"0": 0.0}
        chain, negatives = _table1_order(family, p, n)
        seq = [value[str(x)] for x in chain]
        assert all(a - b > SLACK for a, b in zip(seq, seq[1:])), (n, chain, lam)
        assert lam[0] > SLACK and lam[-1] < -SLACK
        assert all(lam[i - 1] < -SLACK for i in negatives)


@criterion(4, "counterexample to monotone interior effects")
def test_c04_counterexample():
    for p in (0.55, 0.6, 0.65):
        lam = expected_marginal_effects(power(p), 3, method="quadrature").lambdas
        assert lam[1] < lam[2]
    for p in (0.7, 1.0, 2.0):
        lam = expected_marginal_effects(power(p), 3, method="quadrature").lambdas
        assert lam[1] > lam[2]


@criterion(5, "order-statistic wages")
def test_c05_wages():
    ws = order_statistic_wages(power(2), WAGES[0], 3)
    np.testing.assert_allclose(ws.vstar, [3.2, 1.6, 1.2], rtol=0, atol=1e-8)
    for p in (1.5, 2, 3):
        for n in range(2, 9):
            v = order_statistic_wages(power(p), WAGES[0], n).vstar
            for k in range(2, n + 1):
                ratio = (p * k - p - 1) / (p * (k - 1))
                assert v[k - 1] / v[k - 2] == pytest.approx(ratio, rel=1e-8, abs=1e-8)


@criterion(6, "grading optimum and structured search")
def test_c06_example():
    res = optimize_grading(power(2), WAGES[0], 3, "bruteforce")
    assert res.best.cuts == (1, 2, 3)
    assert res.best_effort == pytest.approx(17.6 / 15, rel=1e-6)


@criterion(6, "grading optimum and structured search")
@pytest.mark.parametrize("d", [power(0.6), power(0.75), power(2), reflected_power(0.5),
                               reflected_power(2)], ids=str)
def test_c06_structured_agrees(d):
    checked = 0
    for n, w in itertools.product(range(3, 7), WAGES):
        try:
            brute = optimize_grading(d, w, n, "bruteforce")
        except IntegrabilityError:
            continue
        fast = optimize_grading(d, w, n, "structured")
        assert fast.best == brute.best
        assert fast.best_effort == pytest.approx(brute.best_effort, rel=1e-9)
        checked += 1
    assert checked >= 4


@criterion(7, "optimal grading singles out the winner")
@pytest.mark.parametrize("family", ["power", "reflected_power"])
def test_c07_top_grade_is_singleton(family):
    checked = 0
    for p, w, n in itertools.product([0.6, 0.75, 2, 3], WAGES, range(3, 9)):
        d = power(p) if family == "power" else reflected_power(p)
        try:
            res = optimize_grading(d, w, n, "bruteforce")
        except IntegrabilityError:
            continue
        assert res.best.cuts[0] == 1, (d, w, n, res.best)
        checked += 1
    assert checked >= 24


@criterion(8, "refinement implies majorization")
@pytest.mark.parametrize("n", range(2, 7))
def test_c08_refinement(n):
    rng = np.random.default_rng(n)
    wage_sets = [order_statistic_wages(power(2), WAGES[0], n).vstar,
                 order_statistic_wages(reflected_power(2), WAGES[1], n).vstar,
                 np.sort(rng.random(n))[::-1]]
    gradings = enumerate_gradings(n)
    for vstar in wage_sets:
        induced = {G: induced_prize_vector(G, vstar) for G in gradings}
        for G, H in itertools.product(gradings, repeat=2):
            if refines(G, H):
                assert majorizes(induced[G], induced[H]), (G, H)


@criterion(9, "equilibrium regret")
@pytest.mark.parametrize("d", FOUR_FAMILIES, ids=str)
def test_c09_regret(d):
    rng = np.random.default_rng(9)
    for n in range(2, 6):
        ev = RegretEvaluator(d, n)
        for _ in range(10):
            rep = ev(_random_prizes(rng, n))
            assert rep.max_regret <= rep.threshold, (n, rep)
            assert rep.curve_monotone


@criterion(9, "equilibrium regret")
def test_c09_uniform_closed_form():
    theta = np.linspace(1e-3, 1.0, 200)
    # winner-take-all with unit prize: effort is the first basis row
    g = effort_basis(power(1), 2, theta)[0]
    np.testing.assert_allclose(g, -np.log(theta), rtol=0, atol=1e-6)


@criterion(10, "crossing counts")
def test_c10_crossings():
    d = power(2)
    assert contest_crossings(d, (1, 0.5, 0, 0), (1, 0.5, 0.3, 0)).count == 1
    assert contest_crossings(d, (1, 0.5, 0.5, 0), (1, 0.75, 0.25, 0)).count == 2


@criterion(11, "stochastic dominance raises effort")
def test_c11_dominance():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        v = _random_prizes(rng, n)
        assert expected_effort(power(1), v) >= expected_effort(power(2), v) - 1e-12


@criterion(12, "budget allocation")
def test_c12_budget():
    alloc = budget_allocation_power_utility(power(2), 3, 1.0, 0.5)
    np.testing.assert_allclose(alloc.prizes.values, [0.8, 0.2, 0.0], rtol=0, atol=1e-8)
    rs = [k / 10 for k in range(1, 10)]
    for r in rs:
        assert budget_allocation_power_utility(power(0.75), 4, 1.0, r).case == "winner_take_all"
    prefix = np.array([np.cumsum(budget_allocation_power_utility(power(2), 5, 1.0, r).prizes.values)
                       for r in rs])
    assert np.all(np.diff(prefix, axis=0) >= -1e-12)


@criterion(13, "screening")
def test_c13_screening():
    for n in range(2, 31):
        for k in range(1, n):
            expected = 0.25 * k * (n - k) / (n + 1) ** 2
            assert abs(screening_objective(1, n, k).objective - expected) <= 1e-10
    for n in range(4, 17):
        assert screening_optimize(1, n)[0] == n // 2
    assert screening_optimize(50, 15)[0] == 1


@criterion(14, "Monte Carlo rank frequencies")
@pytest.mark.parametrize("d,n,theta", [(power(1), 3, 0.5), (power(2), 3, 1.0), (power(2), 4, 0.5)],
                         ids=["uniform", "worst-type", "square"])
@pytest.mark.parametrize("seed", range(5))
def test_c14_monte_carlo(d, n, theta, seed):
    rep = monte_carlo_ranks(d, n, theta, samples=100_000, seed=seed)
    assert rep.passed, rep
    assert math.isclose(sum(rep.empirical), 1.0)
