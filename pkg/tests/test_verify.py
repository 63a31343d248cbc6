import math

import numpy as np
import pytest

from gradecontest.distributions import power, reflected_power, tabulated
from gradecontest.errors import DomainError, InputError
from gradecontest.verify import (
    RegretEvaluator,
    best_response_regret,
    chi_square,
    contest_crossings,
    monte_carlo_ranks,
)


class TestRegret:
    def test_uniform_pair_best_deviation_is_truth(self):
        theta = math.exp(-1)
        devs = np.linspace(0.01, 1.0, 991)
        rep = best_response_regret(power(1), [1, 0], type_grid=[theta], deviation_grid=devs)
        assert rep.max_regret <= 1e-12
        # closed form: win with prob 1 - t at cost -theta ln t, peak at t = theta
        payoff = 1 - devs + theta * np.log(devs)
        assert abs(devs[np.argmax(payoff)] - theta) < 2e-3

    def test_constant_prizes(self):
        rep = best_response_regret(power(2), [1.5, 1.5, 1.5])
        assert rep.max_regret == 0.0
        assert rep.accepted

    def test_order_statistic_prizes(self):
        rep = best_response_regret(power(2), [3.2, 1.6, 1.2])
        assert rep.max_regret <= 1e-4 * 2.0
        assert rep.curve_monotone
        assert (rep.type_points, rep.deviation_points) == (64, 256)

    @pytest.mark.parametrize("d", [power(0.75), reflected_power(0.5), reflected_power(2)], ids=str)
    def test_other_families(self, d):
        rep = best_response_regret(d, [2.0, 1.0, 0.5, 0.0])
        assert rep.accepted

    def test_detects_wrong_effort(self):
        ev = RegretEvaluator(power(2), 3)
        ev.basis = 0.5 * ev.basis
        rep = ev([3.2, 1.6, 1.2])
        assert rep.max_regret > rep.threshold
        assert not rep.accepted

    def test_grid_bounds(self):
        with pytest.raises(InputError):
            best_response_regret(power(2), [1, 0], type_grid=[0.0, 0.5])

    def test_assumption_required(self):
        from gradecontest.distributions import construct_distribution
        with pytest.raises(DomainError):
            best_response_regret(construct_distribution({"family": "power", "p": 0.4}), [1, 0])


class TestCrossings:
    d = power(2)

    @pytest.mark.parametrize("v,w", [
        ((1, 0, 0, 0), (1, 0.5, 0, 0)),
        ((1, 0.5, 0, 0), (1, 0.5, 0.5, 0)),
        ((1, 0.3, 0.1, 0), (1, 0.6, 0.1, 0)),
    ])
    def test_prize_raise_crosses_once(self, v, w):
        assert contest_crossings(self.d, v, w).count == 1

    @pytest.mark.parametrize("v,w", [
        ((1, 0.5, 0.5, 0), (1, 0.75, 0.25, 0)),
        ((1, 0.6, 0.4, 0), (1, 0.9, 0.1, 0)),
        ((2, 1, 1, 0), (2, 1.5, 0.5, 0)),
    ])
    def test_interior_transfer_crosses_twice(self, v, w):
        rep = contest_crossings(self.d, v, w)
        assert rep.count == 2
        assert 0 < rep.locations[0] < rep.locations[1] < 1

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            contest_crossings(self.d, (1, 0), (1, 0, 0))


class TestMonteCarlo:
    def test_uniform_three(self):
        rep = monte_carlo_ranks(power(1), 3, 0.5, 100_000, seed=1)
        assert rep.analytic == pytest.approx((0.25, 0.5, 0.25))
        for emp, ana in zip(rep.empirical, rep.analytic):
            assert abs(emp - ana) <= 3 * math.sqrt(ana * (1 - ana) / rep.samples)
        assert sum(rep.empirical) == pytest.approx(1.0)

    def test_worst_type_ranks_last(self):
        rep = monte_carlo_ranks(reflected_power(2), 3, 1.0, 10_000, seed=0)
        assert rep.analytic == pytest.approx((0.0, 0.0, 1.0))
        assert rep.counts == (0, 0, 10_000)
        assert rep.passed

    def test_square_law_four(self):
        rep = monte_carlo_ranks(power(2), 4, 0.5, 100_000, seed=2)
        assert rep.analytic == pytest.approx((0.421875, 0.421875, 0.140625, 0.015625))
        assert rep.passed

    def test_reproducible_and_shard_order_free(self):
        a = monte_carlo_ranks(power(2), 4, 0.3, 20_000, seed=5, shards=3)
        b = monte_carlo_ranks(power(2), 4, 0.3, 20_000, seed=5, shards=3)
        assert a == b

    def test_tabulated(self):
        x = np.linspace(0, 1, 33)
        assert monte_carlo_ranks(tabulated(x, x ** 1.5), 4, 0.4, 20_000, seed=3).passed

    def test_sample_floor(self):
        with pytest.raises(InputError):
            monte_carlo_ranks(power(1), 3, 0.5, 999)

    def test_chi_square_flags_impossible_cells(self):
        stat, _ = chi_square(np.array([5, 5]), np.array([1.0, 0.0]))
        assert math.isinf(stat)
