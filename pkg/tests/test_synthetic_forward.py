"""Synthetic forward packages and the implied discount fit."""

from __future__ import annotations

import math
from datetime import date
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_chain, make_quote, quote_around
from fundingspread import (
    DISCOUNT_CAP,
    FLAG_HIGH_DISCOUNT,
    FLAG_NONPOSITIVE_DISCOUNT,
    InputError,
    MaturitySlice,
    NumericalError,
    SyntheticForwardQuote,
    fit_implied_discount,
    fit_slice,
    forward_bid_ask,
    per_strike_forwards,
    synthetic_forward_quotes,
)

VD = date(2023, 3, 1)
MAT = date(2023, 9, 1)


def slice_of(quotes):
    return MaturitySlice(maturity=MAT, quotes=tuple(quotes))


class TestPackageQuotes:
    def test_exact_decimal_sides(self):
        q = make_quote("3000", "100.5", "101.5", "50.25", "50.75")
        (pkg,) = synthetic_forward_quotes(slice_of([q]))
        assert pkg.bid == Decimal("49.75")
        assert pkg.ask == Decimal("51.25")
        assert pkg.mid == Decimal("50.50")
        assert pkg.strike == Decimal("3000")

    def test_mid_equals_mid_difference(self):
        q = make_quote("3000", "100.5", "101.5", "50.25", "50.75")
        (pkg,) = synthetic_forward_quotes(slice_of([q]))
        assert pkg.mid == q.call_mid() - q.put_mid()

    def test_missing_side_rejected(self):
        q = make_quote("3000", "100.5", "101.5", None, None)
        with pytest.raises(InputError, match="missing a side"):
            synthetic_forward_quotes(slice_of([q]))

    def test_quote_ordering_enforced(self):
        with pytest.raises(InputError, match="not ordered"):
            SyntheticForwardQuote(
                strike=Decimal("3000"),
                bid=Decimal("2"),
                ask=Decimal("1"),
                mid=Decimal("1.5"),
            )

    def test_mid_must_be_exact_average(self):
        with pytest.raises(InputError, match="exact average"):
            SyntheticForwardQuote(
                strike=Decimal("3000"),
                bid=Decimal("1"),
                ask=Decimal("2"),
                mid=Decimal("1.6"),
            )


class TestFit:
    def test_exact_line_recovered(self):
        strikes = [2800, 2900, 3000, 3100, 3200]
        quotes = [quote_around(str(k), "3000", "0.97") for k in strikes]
        fit = fit_slice(slice_of(quotes), VD)
        assert fit.discount == pytest.approx(0.97, rel=1e-14)
        assert fit.forward == pytest.approx(3000.0, rel=1e-14)
        assert fit.r_squared == 1.0
        assert fit.n_strikes == 5
        assert fit.flags == ()
        assert fit.value_date == VD
        assert fit.maturity == MAT

    def test_two_points_suffice(self):
        fit = fit_implied_discount([2900, 3100], [97.0, -97.0], VD, MAT)
        assert fit.discount == pytest.approx(0.97)
        assert fit.forward == pytest.approx(3000.0)

    def test_single_point_rejected(self):
        with pytest.raises(NumericalError, match="at least 2"):
            fit_implied_discount([3000], [0.0], VD, MAT)

    def test_zero_strike_variance_rejected(self):
        with pytest.raises(NumericalError, match="zero strike variance"):
            fit_implied_discount([3000, 3000], [1.0, 2.0], VD, MAT)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InputError, match="equal length"):
            fit_implied_discount([1.0, 2.0], [1.0], VD, MAT)

    def test_flat_mids_flag_zero_discount(self):
        fit = fit_implied_discount([2900, 3000, 3100], [5.0, 5.0, 5.0], VD, MAT)
        assert fit.discount == 0.0
        assert math.isnan(fit.forward)
        assert FLAG_NONPOSITIVE_DISCOUNT in fit.flags
        # The flat line fits its own data perfectly.
        assert fit.r_squared == 1.0

    def test_negative_discount_flagged_but_fitted(self):
        # Mids that rise with the strike imply a negative discount.
        fit = fit_implied_discount([2900, 3000, 3100], [-10.0, 0.0, 10.0], VD, MAT)
        assert fit.discount == pytest.approx(-0.1)
        assert FLAG_NONPOSITIVE_DISCOUNT in fit.flags
        assert fit.forward == pytest.approx(3000.0)

    def test_high_discount_flagged(self):
        b = DISCOUNT_CAP * 1.5
        mids = [b * (3000.0 - k) for k in (2900, 3000, 3100)]
        fit = fit_implied_discount([2900, 3000, 3100], mids, VD, MAT)
        assert FLAG_HIGH_DISCOUNT in fit.flags
        assert fit.discount == pytest.approx(b)

    def test_discount_at_cap_not_flagged(self):
        mids = [DISCOUNT_CAP * (3000.0 - k) for k in (2900, 3100)]
        fit = fit_implied_discount([2900, 3100], mids, VD, MAT)
        assert fit.flags == ()

    def test_residuals_match_manual_ols(self):
        strikes = [2900.0, 3000.0, 3100.0]
        mids = [98.0, 0.0, -95.0]
        fit = fit_implied_discount(strikes, mids, VD, MAT)
        k_hat = sum(strikes) / 3
        g_hat = sum(mids) / 3
        slope = sum(
            (k - k_hat) * (g - g_hat) for k, g in zip(strikes, mids)
        ) / sum((k - k_hat) ** 2 for k in strikes)
        assert fit.discount == pytest.approx(-slope, rel=1e-15)
        for (k, resid), g in zip(fit.residuals, mids):
            expected = (g - g_hat) - slope * (k - k_hat)
            assert resid == pytest.approx(expected, abs=1e-12)
        assert sum(r for _, r in fit.residuals) == pytest.approx(0.0, abs=1e-9)

    def test_r_squared_between_zero_and_one_with_noise(self):
        strikes = [2800.0, 2900.0, 3000.0, 3100.0, 3200.0]
        mids = [0.97 * (3000.0 - k) + e for k, e in zip(strikes, [1, -2, 0.5, 1, -0.5])]
        fit = fit_implied_discount(strikes, mids, VD, MAT)
        assert 0.0 < fit.r_squared < 1.0

    def test_exact_chain_fixture(self, exact_chain):
        first, second = exact_chain.slices
        fit1 = fit_slice(first, exact_chain.value_date)
        fit2 = fit_slice(second, exact_chain.value_date)
        assert fit1.discount == pytest.approx(0.99, rel=1e-13)
        assert fit1.forward == pytest.approx(3000.0, rel=1e-13)
        assert fit2.discount == pytest.approx(0.97, rel=1e-13)
        assert fit2.forward == pytest.approx(3050.0, rel=1e-13)

    @given(
        discount=st.floats(0.8, 1.02),
        forward=st.floats(1000.0, 4000.0),
        strikes=st.lists(
            st.integers(1000, 4000), min_size=2, max_size=30, unique=True
        ),
    )
    def test_exact_lines_recovered_everywhere(self, discount, forward, strikes):
        strikes = sorted(strikes)
        mids = [discount * (forward - k) for k in strikes]
        fit = fit_implied_discount(strikes, mids, VD, MAT)
        assert abs(fit.discount - discount) <= 1e-12 * discount
        assert abs(fit.forward - forward) <= 1e-9 * forward
        assert fit.r_squared > 1.0 - 1e-12


class TestForwardAggregation:
    def test_manual_interval_intersection(self):
        # With discount 1 the forward interval at strike K is just
        # [K + bid, K + ask] of the package.
        quotes = [
            make_quote("100", "52", "54", "50", "50"),  # package [2, 4] -> [102, 104]
            make_quote("110", "44", "46", "50", "50"),  # package [-6, -4] -> [104, 106]
        ]
        fba = forward_bid_ask(slice_of(quotes), 1.0)
        assert fba.bid == pytest.approx(104.0)
        assert fba.ask == pytest.approx(104.0)
        assert not fba.crossed

    def test_crossed_interval_reported_not_repaired(self):
        quotes = [
            make_quote("100", "53", "54", "50", "50"),  # [103, 104]
            make_quote("110", "41", "42", "50", "50"),  # [101, 102]
        ]
        fba = forward_bid_ask(slice_of(quotes), 1.0)
        assert fba.bid == pytest.approx(103.0)
        assert fba.ask == pytest.approx(102.0)
        assert fba.crossed

    def test_discount_scales_package_values(self):
        quotes = [make_quote("100", "52", "54", "50", "50")]
        fba = forward_bid_ask(slice_of(quotes), 0.5)
        assert fba.bid == pytest.approx(104.0)
        assert fba.ask == pytest.approx(108.0)

    def test_empty_slice_rejected(self):
        with pytest.raises(InputError, match="empty slice"):
            forward_bid_ask(slice_of([]), 1.0)

    def test_nonpositive_discount_rejected(self):
        quotes = [make_quote("100", "52", "54", "50", "50")]
        with pytest.raises(InputError, match="positive"):
            forward_bid_ask(slice_of(quotes), 0.0)

    def test_exact_chain_forwards_bracket_truth(self, exact_chain):
        for sl, (disc, fwd) in zip(exact_chain.slices, [(0.99, 3000.0), (0.97, 3050.0)]):
            fba = forward_bid_ask(sl, disc)
            assert fba.bid <= fwd <= fba.ask
            assert not fba.crossed


class TestPerStrikeForwards:
    def test_rows_match_manual_arithmetic(self):
        quotes = [make_quote("100", "52", "54", "50", "50")]
        rows = per_strike_forwards(slice_of(quotes), 0.5)
        assert rows == ((100.0, 104.0, 108.0, 106.0),)

    def test_nonpositive_discount_rejected(self):
        quotes = [make_quote("100", "52", "54", "50", "50")]
        with pytest.raises(InputError, match="positive"):
            per_strike_forwards(slice_of(quotes), -1.0)

    def test_one_row_per_strike(self, exact_chain):
        sl = exact_chain.slices[0]
        rows = per_strike_forwards(sl, 0.99)
        assert len(rows) == len(sl.quotes)
        assert [r[0] for r in rows] == [float(q.strike) for q in sl.quotes]
