import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from royaltyval.model import (
    AnnualSeries,
    Asset,
    MissingCellError,
    MultiplierTable,
    ShareSurface,
    discount_factor,
    multiplier_from_shares,
    multiplier_table,
    price,
)


def repeated_multiplication_factor(rate, year):
    """Discount factor by repeated multiplication, independent of pow()."""
    growth = 1.0
    for _ in range(year):
        growth *= 1.0 + rate
    return 1.0 / growth


def annuity(rate, d):
    """Closed-form level annuity factor."""
    return (1.0 - (1.0 + rate) ** -d) / rate


def flat_surface(share=1.0, horizons=10, levels=(10.0, 50.0, 90.0), count=5, base_age=1):
    values = {(i, p): share for i in range(1, horizons + 1) for p in levels}
    counts = {i: count for i in range(1, horizons + 1)}
    return ShareSurface(base_age, levels, values, counts)


shares_lists = st.lists(
    st.floats(min_value=0.0, max_value=10.0, allow_nan=False), min_size=1, max_size=12
)
positive_shares = st.lists(
    st.floats(min_value=1e-6, max_value=10.0), min_size=1, max_size=12
)
rates = st.floats(min_value=0.0, max_value=0.5)


class TestDiscountFactor:
    def test_one_year_at_ten_percent(self):
        assert discount_factor(0.10, 1) == pytest.approx(1 / 1.1, rel=1e-15)

    def test_zero_rate_is_one(self):
        assert discount_factor(0.0, 7) == 1.0

    def test_ten_years_matches_repeated_multiplication(self):
        oracle = repeated_multiplication_factor(0.10, 10)
        assert discount_factor(0.10, 10) == pytest.approx(oracle, rel=1e-12)

    def test_rejects_negative_rate(self):
        with pytest.raises(ValueError):
            discount_factor(-0.01, 1)

    def test_rejects_year_below_one(self):
        with pytest.raises(ValueError):
            discount_factor(0.10, 0)

    @given(rate=rates, year=st.integers(min_value=1, max_value=30))
    def test_in_unit_interval(self, rate, year):
        df = discount_factor(rate, year)
        assert 0.0 < df <= 1.0


class TestMultiplierFromShares:
    def test_all_zero_shares(self):
        assert multiplier_from_shares([0.0, 0.0, 0.0], 0.10) == 0.0

    def test_single_year_annuity(self):
        assert multiplier_from_shares([1.0], 0.10) == pytest.approx(1 / 1.1, rel=1e-15)

    def test_ten_flat_shares_matches_annuity_oracle(self):
        assert multiplier_from_shares([1.0] * 10, 0.10) == pytest.approx(
            annuity(0.10, 10), rel=1e-12
        )

    def test_rejects_negative_share(self):
        with pytest.raises(ValueError):
            multiplier_from_shares([1.0, -0.1], 0.10)

    def test_rejects_non_finite_share(self):
        with pytest.raises(ValueError):
            multiplier_from_shares([1.0, float("nan")], 0.10)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            multiplier_from_shares([], 0.10)

    @given(shares=shares_lists, rate=rates)
    def test_monotone_in_duration(self, shares, rate):
        prefix_values = [
            multiplier_from_shares(shares[:d], rate) for d in range(1, len(shares) + 1)
        ]
        assert all(a <= b for a, b in zip(prefix_values, prefix_values[1:]))

    @given(shares=positive_shares)
    def test_strictly_antitone_in_rate(self, shares):
        low = multiplier_from_shares(shares, 0.05)
        high = multiplier_from_shares(shares, 0.15)
        assert low > high

    @given(shares=shares_lists, rate=rates, alpha=st.floats(min_value=1e-3, max_value=1e3))
    def test_linear_in_shares(self, shares, rate, alpha):
        scaled = multiplier_from_shares([alpha * s for s in shares], rate)
        direct = alpha * multiplier_from_shares(shares, rate)
        assert scaled == pytest.approx(direct, rel=1e-12, abs=1e-300)


class TestPrice:
    def test_zero_multiplier(self):
        assert price(0.0, 10000) == 0.0

    def test_identity_multiplier(self):
        assert price(1.0, 12345) == 12345

    def test_annuity_price(self):
        mult = multiplier_from_shares([1.0] * 10, 0.10)
        assert price(mult, 10000) == pytest.approx(annuity(0.10, 10) * 10000, rel=1e-12)

    def test_rejects_non_positive_ltm(self):
        with pytest.raises(ValueError):
            price(1.0, 0)
        with pytest.raises(ValueError):
            price(1.0, -5)


class TestMultiplierTable:
    def test_zero_surface_gives_zero_entries(self):
        table = multiplier_table(flat_surface(share=0.0), 0.10, 10)
        assert all(v == 0.0 for v in table.entries.values())

    def test_flat_surface_matches_annuity(self):
        table = multiplier_table(flat_surface(), 0.10, 10)
        for d in range(1, 11):
            for p in (10.0, 50.0, 90.0):
                assert table.entry(d, p) == pytest.approx(annuity(0.10, d), rel=1e-12)

    def test_doubled_level_doubles_entries(self):
        levels = (10.0, 50.0, 90.0)
        values = {}
        for i in range(1, 6):
            base = 0.8 ** i
            values[(i, 10.0)] = 0.5 * base
            values[(i, 50.0)] = base
            values[(i, 90.0)] = 2.0 * base
        surface = ShareSurface(1, levels, values, {i: 5 for i in range(1, 6)})
        table = multiplier_table(surface, 0.10, 5)
        for d in range(1, 6):
            assert table.entry(d, 90.0) == pytest.approx(2.0 * table.entry(d, 50.0), rel=1e-12)

    def test_missing_cell_names_first_gap(self):
        surface = flat_surface(horizons=3)
        with pytest.raises(MissingCellError) as err:
            multiplier_table(surface, 0.10, 5)
        assert err.value.horizon == 4
        assert err.value.level == 10.0
        assert "horizon=4" in str(err.value)

    @given(
        shares=st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=1, max_size=10),
        rate=rates,
    )
    def test_prefix_sum_identity(self, shares, rate):
        levels = (50.0,)
        horizons = len(shares)
        surface = ShareSurface(
            1,
            levels,
            {(i, 50.0): shares[i - 1] for i in range(1, horizons + 1)},
            {i: 5 for i in range(1, horizons + 1)},
        )
        table = multiplier_table(surface, rate, horizons)
        for d in range(1, horizons + 1):
            expected = multiplier_from_shares(shares[:d], rate)
            assert table.entry(d, 50.0) == pytest.approx(expected, rel=1e-12, abs=0.0)

    @given(
        shares=st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=2, max_size=10),
        rate=rates,
    )
    def test_prefix_recurrence_is_exact(self, shares, rate):
        # entry(d+1) is literally entry(d) plus the next discounted share,
        # so the recurrence holds bit for bit in float arithmetic.
        levels = (50.0,)
        horizons = len(shares)
        surface = ShareSurface(
            1,
            levels,
            {(i, 50.0): shares[i - 1] for i in range(1, horizons + 1)},
            {i: 5 for i in range(1, horizons + 1)},
        )
        table = multiplier_table(surface, rate, horizons)
        for d in range(1, horizons):
            step = shares[d] * discount_factor(rate, d + 1)
            assert table.entry(d + 1, 50.0) == table.entry(d, 50.0) + step

    @given(
        seed_shares=st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=1, max_size=8)
    )
    def test_level_ordering_carries_to_entries(self, seed_shares):
        levels = (10.0, 50.0, 90.0)
        values = {}
        for i, s in enumerate(seed_shares, start=1):
            values[(i, 10.0)] = 0.5 * s
            values[(i, 50.0)] = s
            values[(i, 90.0)] = 1.5 * s
        surface = ShareSurface(
            1, levels, values, {i: 5 for i in range(1, len(seed_shares) + 1)}
        )
        table = multiplier_table(surface, 0.10, len(seed_shares))
        for d in range(1, len(seed_shares) + 1):
            assert table.entry(d, 10.0) <= table.entry(d, 50.0) <= table.entry(d, 90.0)


class TestDomainTypes:
    def test_annual_series_rejects_empty(self):
        with pytest.raises(ValueError):
            AnnualSeries("A", ())

    def test_annual_series_rejects_non_finite(self):
        with pytest.raises(ValueError):
            AnnualSeries("A", (1.0, float("inf")))

    def test_asset_rejects_non_positive_age(self):
        series = AnnualSeries("A", (1.0,))
        with pytest.raises(ValueError):
            Asset("A", 0.0, series)

    def test_series_accessors(self):
        series = AnnualSeries("A", (10.0, 5.0, 2.5))
        assert len(series) == 3
        assert series.amount_in_year(2) == 5.0
        assert series.last_year == 2.5
        with pytest.raises(ValueError):
            series.amount_in_year(4)

    def test_surface_rejects_unordered_levels(self):
        with pytest.raises(ValueError):
            ShareSurface(1, (50.0, 10.0), {}, {})

    def test_surface_rejects_increasing_counts(self):
        with pytest.raises(ValueError):
            ShareSurface(1, (50.0,), {}, {1: 3, 2: 5})

    def test_surface_rejects_level_disorder_within_horizon(self):
        values = {(1, 10.0): 2.0, (1, 50.0): 1.0}
        with pytest.raises(ValueError):
            ShareSurface(1, (10.0, 50.0), values, {1: 5})

    def test_surface_rejects_partial_levels(self):
        values = {(1, 10.0): 1.0}
        with pytest.raises(ValueError):
            ShareSurface(1, (10.0, 50.0), values, {1: 5})

    def test_surface_rejects_gap_in_count_horizons(self):
        with pytest.raises(ValueError):
            ShareSurface(1, (50.0,), {}, {1: 5, 3: 2})

    def test_table_rejects_decreasing_durations(self):
        entries = {(1, 50.0): 2.0, (2, 50.0): 1.0}
        with pytest.raises(ValueError):
            MultiplierTable(1, 0.10, entries)

    def test_table_rejects_decreasing_levels(self):
        entries = {(1, 10.0): 2.0, (1, 50.0): 1.0}
        with pytest.raises(ValueError):
            MultiplierTable(1, 0.10, entries)
