import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from gradecontest.distributions import (
    classify_h,
    construct_distribution,
    density_direction,
    h_profile,
    load_cdf_table,
    parse_cdf_table,
    power,
    reflected_power,
    stochastically_dominates,
    tabulated,
    validate_assumption1,
)
from gradecontest.errors import DomainError, InputError
from gradecontest.numerics import integrate

GRID = np.linspace(0.0, 1.0, 65)


def _families():
    return [power(0.6), power(0.75), power(1), power(2), power(3),
            reflected_power(0.5), reflected_power(1), reflected_power(2),
            tabulated(GRID, GRID ** 2), tabulated(GRID, 1 - (1 - GRID) ** 1.5)]


class TestConstruction:
    def test_uniform(self):
        d = power(1)
        x = np.array([0.0, 0.3, 1.0])
        np.testing.assert_allclose(d.cdf(x), x)
        np.testing.assert_allclose(d.pdf(x), 1.0)
        np.testing.assert_allclose(d.quantile(x), x)

    def test_square_law(self):
        d = power(2)
        assert d.cdf(0.5) == pytest.approx(0.25)
        assert d.pdf(0.5) == pytest.approx(1.0)
        assert d.quantile(0.25) == pytest.approx(0.5)

    def test_reflected_square(self):
        d = reflected_power(2)
        assert d.cdf(0.5) == pytest.approx(0.75)
        assert d.quantile(0.75) == pytest.approx(1 - math.sqrt(0.25))

    @pytest.mark.parametrize("p", [0.0, -1.0, float("nan"), None])
    def test_bad_parameter(self, p):
        with pytest.raises(DomainError):
            construct_distribution({"family": "power", "p": p})

    def test_unknown_family(self):
        with pytest.raises(InputError):
            construct_distribution({"family": "lognormal", "p": 1})

    def test_non_monotone_table(self):
        with pytest.raises(InputError):
            tabulated([0, 0.5, 0.4, 1], [0, 0.3, 0.5, 1])
        with pytest.raises(InputError):
            tabulated([0, 0.5, 1], [0, 0.6, 0.5])

    def test_table_endpoints(self):
        with pytest.raises(InputError):
            tabulated([0, 0.5, 1], [0, 0.5, 0.9])

    @pytest.mark.parametrize("d", _families(), ids=lambda d: str(d.describe()))
    def test_invariants(self, d):
        x = np.linspace(0, 1, 1024)
        F = d.cdf(x)
        assert F[0] == 0.0 and F[-1] == 1.0
        assert np.all(np.diff(F) >= 0)
        assert np.all(d.pdf(x[1:-1]) >= 0)
        t = np.linspace(0, 1, 256)
        assert np.max(np.abs(d.cdf(d.quantile(t)) - t)) <= 1e-10

    @pytest.mark.parametrize("d", _families(), ids=lambda d: str(d.describe()))
    def test_quantile_round_trip(self, d):
        theta = np.linspace(0, 1, 258)[1:-1]
        assert np.max(np.abs(d.quantile(d.cdf(theta)) - theta)) <= 1e-8

    def test_tabulated_mass(self):
        d = tabulated(GRID, GRID ** 3)
        mass = sum(integrate(d.pdf, a, b).value for a, b in zip(GRID[:-1], GRID[1:]))
        assert mass == pytest.approx(1.0, abs=1e-8)


class TestTableParsing:
    def test_csv_and_whitespace(self):
        assert parse_cdf_table("theta,F\n0,0\n0.5,0.25\n1,1\n") == ([0, 0.5, 1], [0, 0.25, 1])
        assert parse_cdf_table("theta F\n0 0\n1 1\n") == ([0, 1], [0, 1])

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "cdf.csv"
        rows = "\n".join(f"{x},{x ** 2}" for x in GRID)
        path.write_text("theta,cdf\n" + rows + "\n")
        d = load_cdf_table(path)
        assert d.cdf(0.5) == pytest.approx(0.25, abs=1e-4)

    def test_bad_rows(self):
        with pytest.raises(InputError):
            parse_cdf_table("theta,F\n0,0,0\n")
        with pytest.raises(InputError):
            parse_cdf_table("theta,F\n0,zero\n1,1\n")


class TestTailConditions:
    def test_square_law_passes(self):
        assert validate_assumption1(power(2)).passed

    def test_slow_tail_passes(self):
        # f F ~ x**0.2 and x**2 / F^{-1}(x) ~ x**(1/3)
        rep = validate_assumption1(power(0.6))
        assert rep.passed
        assert rep.tail_exponents[0] == pytest.approx(0.2, abs=1e-6)

    @pytest.mark.parametrize("p", [0.4, 0.5])
    def test_divergent_tail_fails(self, p):
        assert not validate_assumption1(power(p)).passed

    def test_samples_cover_probe_grid(self):
        rep = validate_assumption1(reflected_power(2))
        assert [s[0] for s in rep.tail_samples] == [2.0 ** -k for k in range(5, 31)]


class TestProfile:
    def test_uniform(self):
        assert h_profile(power(1), 0.3) == pytest.approx((1.0, 0.0), abs=1e-12)

    def test_square_law(self):
        assert h_profile(power(2), 0.25) == pytest.approx((0.5, 1.0), rel=1e-12)

    def test_reflected(self):
        assert h_profile(reflected_power(2), 0.75)[0] == pytest.approx(1.5, rel=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            h_profile(power(2), 0.0)

    @given(st.floats(0.01, 0.99), st.floats(0.6, 3.0))
    def test_derivative_matches_finite_difference(self, t, p):
        d = reflected_power(p)
        step = 1e-6
        fd = (d.h(t + step) - d.h(t - step)) / (2 * step)
        assert h_profile(d, t)[1] == pytest.approx(fd, rel=1e-5, abs=1e-6)

    @pytest.mark.parametrize("d", [power(1.5), power(3), reflected_power(0.5),
                                   tabulated(GRID, GRID ** 2)], ids=str)
    def test_increasing_density_gives_increasing_h(self, d):
        assert density_direction(d) in ("increasing", "constant")
        _, hp = h_profile(d, np.linspace(0, 1, 513)[1:])
        assert np.all(hp >= -1e-9)

    @pytest.mark.parametrize("d", [power(0.6), power(0.75), reflected_power(2),
                                   tabulated(GRID, 1 - (1 - GRID) ** 2)], ids=str)
    def test_decreasing_density_gives_decreasing_h(self, d):
        assert density_direction(d) == "decreasing"
        _, hp = h_profile(d, np.linspace(0, 1, 513)[1:])
        assert np.all(hp <= 1e-9)


class TestClassification:
    @pytest.mark.parametrize("d,want", [
        (power(2), ("increasing", "concave")),
        (power(0.75), ("decreasing", "convex")),
        (reflected_power(0.5), ("increasing", "convex")),
        (reflected_power(2), ("decreasing", "concave")),
    ])
    def test_closed_form(self, d, want):
        got = classify_h(d)
        assert (got.monotonicity, got.curvature, got.method) == want + ("closed_form",)

    def test_half_or_below_rejected(self):
        with pytest.raises(DomainError):
            classify_h(construct_distribution({"family": "power", "p": 0.5}))

    def test_uniform_is_flagged_flat(self):
        got = classify_h(power(1))
        assert got.flat and (got.monotonicity, got.curvature) == ("increasing", "concave")

    @pytest.mark.parametrize("family", [power, reflected_power])
    @pytest.mark.parametrize("p", [0.6, 0.75, 1, 1.5, 2, 3])
    def test_numeric_agrees_with_closed_form(self, family, p):
        d = family(p)
        a, b = classify_h(d, "closed_form"), classify_h(d, "numeric")
        assert (a.monotonicity, a.curvature, a.flat) == (b.monotonicity, b.curvature, b.flat)

    def test_tabulated_uses_numeric_path(self):
        got = classify_h(tabulated(GRID, GRID ** 2))
        assert got.method == "numeric"
        assert (got.monotonicity, got.curvature) == ("increasing", "concave")
        with pytest.raises(InputError):
            classify_h(tabulated(GRID, GRID ** 2), "closed_form")


class TestDominance:
    def test_examples(self):
        assert stochastically_dominates(power(2), power(1))
        assert not stochastically_dominates(power(1), power(2))
        d = reflected_power(0.7)
        assert stochastically_dominates(d, d)

    @given(st.floats(0.55, 4), st.floats(0.55, 4))
    def test_power_family_ordered_by_exponent(self, p, q):
        assert stochastically_dominates(power(max(p, q)), power(min(p, q)))
