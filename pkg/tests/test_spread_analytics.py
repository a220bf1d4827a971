"""Spread math and regression statistics against library oracles.

scipy and mpmath appear here as reference oracles only; the package
itself must not use them at runtime.
"""

from __future__ import annotations

import math
from datetime import date, timedelta
from decimal import Decimal

import mpmath
import numpy as np
import pytest
import scipy.special
import scipy.stats

from conftest import make_chain, make_quote
from fundingspread import (
    DEFAULT_MIN_TTM_DAYS,
    InputError,
    NumericalError,
    RobustnessVariant,
    SpreadObservation,
    build_observation,
    fit_spread_panel,
    funding_spread,
    regularized_incomplete_beta,
    standard_robustness_variants,
    student_t_two_sided_p,
)
from fundingspread.spread_analytics import (
    BASE_VARIANT,
    filter_observations,
    summarize,
)
from fundingspread import describe_dataset

VD = date(2023, 1, 2)


def obs_with_spread(ttm_days: int, spread: float, b_ois: float = 1.0):
    """Observation whose stored spread is exactly `spread`.

    The implied discount is derived from the spread, so the consistency
    check passes while the panel sees the exact requested value.
    """
    ttm = ttm_days / 365
    return SpreadObservation(
        value_date=VD,
        maturity=VD + timedelta(days=ttm_days),
        ttm_years=ttm,
        b_bar=b_ois * math.exp(-spread * ttm),
        b_ois=b_ois,
        spread=spread,
    )


class TestFundingSpread:
    def test_known_value(self):
        ttm = 1.0
        b_ois = 1.0
        b_bar = math.exp(-0.0034)
        assert funding_spread(b_ois, b_bar, ttm) == pytest.approx(0.0034, rel=1e-12)

    def test_annualization(self):
        # Halving the horizon at the same discount gap doubles the spread.
        s1 = funding_spread(0.99, 0.98, 1.0)
        s2 = funding_spread(0.99, 0.98, 0.5)
        assert s2 == pytest.approx(2 * s1, rel=1e-14)

    def test_sign_convention(self):
        assert funding_spread(0.99, 0.98, 1.0) > 0
        assert funding_spread(0.98, 0.99, 1.0) < 0
        assert funding_spread(0.98, 0.98, 1.0) == 0.0

    def test_nonpositive_ttm_rejected(self):
        with pytest.raises(InputError, match="positive"):
            funding_spread(0.99, 0.98, 0.0)

    @pytest.mark.parametrize("b_ois,b_bar", [(0.0, 0.98), (-1.0, 0.98), (0.98, 0.0)])
    def test_nonpositive_discounts_rejected(self, b_ois, b_bar):
        with pytest.raises(NumericalError):
            funding_spread(b_ois, b_bar, 1.0)


class TestSpreadObservation:
    def test_build_observation_act365(self):
        o = build_observation(VD, date(2024, 1, 2), b_bar=0.975, b_ois=0.98)
        assert o.ttm_years == 1.0
        assert o.spread == pytest.approx(math.log(0.98 / 0.975), rel=1e-14)

    def test_inconsistent_spread_rejected(self):
        with pytest.raises(InputError, match="inconsistent"):
            SpreadObservation(
                value_date=VD,
                maturity=date(2024, 1, 2),
                ttm_years=1.0,
                b_bar=0.975,
                b_ois=0.98,
                spread=0.1,
            )

    def test_spread_bp_scaling(self):
        o = obs_with_spread(365, 0.0034)
        assert o.spread_bp == pytest.approx(34.0)

    def test_filter_is_strict_at_cutoff(self):
        at_cutoff = obs_with_spread(30, 0.003)
        above = obs_with_spread(31, 0.003)
        kept = filter_observations([at_cutoff, above], min_ttm_days=30)
        assert kept == [above]


class TestIncompleteBeta:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 5.0, 50.0, 500.0])
    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("x", [1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-6])
    def test_matches_scipy(self, a, b, x):
        expected = scipy.special.betainc(a, b, x)
        assert regularized_incomplete_beta(a, b, x) == pytest.approx(
            expected, abs=1e-12
        )

    def test_boundaries(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0
        assert regularized_incomplete_beta(2.0, 3.0, -0.5) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.5) == 1.0

    def test_invalid_parameters_rejected(self):
        with pytest.raises(InputError, match="positive"):
            regularized_incomplete_beta(0.0, 1.0, 0.5)
        with pytest.raises(InputError, match="positive"):
            regularized_incomplete_beta(1.0, -1.0, 0.5)


class TestStudentT:
    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
    @pytest.mark.parametrize("df", [1, 2, 3, 10, 30, 100, 1000])
    def test_matches_scipy_survival(self, t, df):
        expected = 2.0 * scipy.stats.t.sf(t, df)
        assert student_t_two_sided_p(t, df) == pytest.approx(expected, rel=1e-10)

    def test_textbook_value(self):
        assert student_t_two_sided_p(2.0, 10) == pytest.approx(
            0.07338803477074045, rel=1e-13
        )

    @pytest.mark.parametrize("t,df", [(50.0, 10), (20.0, 3), (100.0, 200)])
    def test_extreme_tails_match_mpmath(self, t, df):
        with mpmath.workdps(60):
            x = mpmath.mpf(df) / (df + mpmath.mpf(t) ** 2)
            expected = float(
                mpmath.betainc(mpmath.mpf(df) / 2, mpmath.mpf("0.5"), 0, x, regularized=True)
            )
        got = student_t_two_sided_p(t, df)
        assert got == pytest.approx(expected, rel=1e-8)
        assert got > 0.0

    def test_symmetry_and_limits(self):
        assert student_t_two_sided_p(0.0, 5) == 1.0
        assert student_t_two_sided_p(math.inf, 5) == 0.0
        assert student_t_two_sided_p(-2.5, 7) == student_t_two_sided_p(2.5, 7)

    def test_invalid_df_rejected(self):
        with pytest.raises(InputError, match="degrees of freedom"):
            student_t_two_sided_p(1.0, 0.0)


def matrix_ols(x, y, w=None):
    """Straight textbook (weighted) least squares via explicit matrices."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    design = np.column_stack([np.ones(n), x])
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    xtwx = design.T @ (w[:, None] * design)
    xtwy = design.T @ (w * y)
    beta = np.linalg.solve(xtwx, xtwy)
    resid = y - design @ beta
    rss = float(np.sum(w * resid * resid))
    sigma2 = rss / (n - 2)
    cov = sigma2 * np.linalg.inv(xtwx)
    se = np.sqrt(np.diag(cov))
    t_stats = beta / se
    p = 2.0 * scipy.stats.t.sf(np.abs(t_stats), n - 2)
    return beta, se, t_stats, p


def random_panel(rng, n):
    day_offsets = sorted(rng.choice(np.arange(31, 730), size=n, replace=False))
    spreads = rng.normal(0.003, 0.001, size=n)
    return [obs_with_spread(int(d), float(s), b_ois=0.98) for d, s in zip(day_offsets, spreads)]


class TestRegressionAgainstMatrixOracle:
    def test_unweighted_matches_matrix_ols(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(4, 30))
            panel = random_panel(rng, n)
            x = [o.ttm_years for o in panel]
            y = [o.spread for o in panel]
            beta, se, t_stats, p = matrix_ols(x, y)
            reg = fit_spread_panel(panel, weighted=False)
            assert reg.intercept == pytest.approx(beta[0], rel=1e-10, abs=1e-14)
            assert reg.slope == pytest.approx(beta[1], rel=1e-10, abs=1e-14)
            assert reg.se_intercept == pytest.approx(se[0], rel=1e-8)
            assert reg.se_slope == pytest.approx(se[1], rel=1e-8)
            assert reg.t_intercept == pytest.approx(t_stats[0], rel=1e-8)
            assert reg.p_intercept == pytest.approx(p[0], rel=1e-6, abs=1e-10)
            assert reg.p_slope == pytest.approx(p[1], rel=1e-6, abs=1e-10)
            assert not reg.perfect_fit
            assert reg.n == n and reg.weighted is False

    def test_weighted_matches_matrix_wls(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(4, 30))
            panel = random_panel(rng, n)
            x = np.array([o.ttm_years for o in panel])
            y = np.array([o.spread for o in panel])
            beta0, *_ = matrix_ols(x, y)
            resid0 = y - beta0[0] - beta0[1] * x
            floor = 1e-12 * float(np.mean(np.abs(y)))
            w = 1.0 / np.maximum(np.abs(resid0), floor) ** 2
            beta, se, t_stats, p = matrix_ols(x, y, w)
            reg = fit_spread_panel(panel, weighted=True)
            assert reg.weighted is True
            assert reg.intercept == pytest.approx(beta[0], rel=1e-8, abs=1e-14)
            assert reg.slope == pytest.approx(beta[1], rel=1e-8, abs=1e-14)
            assert reg.se_intercept == pytest.approx(se[0], rel=1e-6)
            assert reg.se_slope == pytest.approx(se[1], rel=1e-6)
            assert reg.p_intercept == pytest.approx(p[0], rel=1e-5, abs=1e-10)
            assert reg.p_slope == pytest.approx(p[1], rel=1e-5, abs=1e-10)

    def test_flat_mean_matches_one_sample_t_test(self):
        rng = np.random.default_rng(23)
        panel = random_panel(rng, 20)
        y = np.array([o.spread for o in panel])
        reg = fit_spread_panel(panel, weighted=False)
        oracle = scipy.stats.ttest_1samp(y, 0.0)
        assert reg.intercept_no_slope == pytest.approx(float(np.mean(y)), rel=1e-12)
        assert reg.t_intercept_no_slope == pytest.approx(oracle.statistic, rel=1e-10)
        assert reg.p_intercept_no_slope == pytest.approx(oracle.pvalue, rel=1e-8)

    def test_r_squared_matches_matrix_computation(self):
        rng = np.random.default_rng(31)
        panel = random_panel(rng, 15)
        x = np.array([o.ttm_years for o in panel])
        y = np.array([o.spread for o in panel])
        beta, *_ = matrix_ols(x, y)
        resid = y - beta[0] - beta[1] * x
        expected = 1.0 - float(resid @ resid) / float(np.sum((y - y.mean()) ** 2))
        reg = fit_spread_panel(panel)
        assert reg.r_squared == pytest.approx(expected, rel=1e-10)


class TestRegressionEdgeCases:
    def test_equal_residual_magnitudes_degrade_to_unweighted_exactly(self):
        # Dyadic inputs make the OLS arithmetic exact: residuals are
        # exactly [c, -c, -c, c], so every candidate weight is identical
        # and the weighted path must reuse the unweighted arithmetic
        # bit for bit.
        intercept, slope, c = 0.5, 0.25, 0.125
        ttm_days = [365, 730, 1095, 1460]
        signs = [1.0, -1.0, -1.0, 1.0]
        panel = [
            obs_with_spread(d, intercept + slope * (d / 365) + s * c)
            for d, s in zip(ttm_days, signs)
        ]
        plain = fit_spread_panel(panel, weighted=False)
        reweighted = fit_spread_panel(panel, weighted=True)
        assert reweighted.intercept == plain.intercept
        assert reweighted.slope == plain.slope
        assert reweighted.se_intercept == plain.se_intercept
        assert reweighted.se_slope == plain.se_slope
        assert reweighted.p_intercept == plain.p_intercept
        assert reweighted.p_slope == plain.p_slope
        assert reweighted.r_squared == plain.r_squared
        assert plain.intercept == 0.5 and plain.slope == 0.25

    def test_perfect_fit_zero_ses_and_p(self):
        intercept, slope = 0.001953125, 0.000244140625  # dyadic
        panel = [
            obs_with_spread(d, intercept + slope * (d / 365))
            for d in (365, 730, 1095, 1460)
        ]
        reg = fit_spread_panel(panel)
        assert reg.perfect_fit
        assert reg.intercept == intercept
        assert reg.slope == slope
        assert reg.se_intercept == 0.0 and reg.se_slope == 0.0
        assert reg.p_intercept == 0.0 and reg.p_slope == 0.0
        assert math.isinf(reg.t_intercept) and math.isinf(reg.t_slope)
        assert reg.r_squared == 1.0

    def test_perfect_zero_spread_has_p_one(self):
        panel = [obs_with_spread(d, 0.0) for d in (365, 730, 1095)]
        reg = fit_spread_panel(panel)
        assert reg.perfect_fit
        assert reg.intercept == 0.0 and reg.slope == 0.0
        assert reg.p_intercept == 1.0 and reg.p_slope == 1.0
        assert reg.p_intercept_no_slope == 1.0
        # No sample variance at all: the flat fit explains everything.
        assert reg.r_squared == 1.0

    def test_too_few_observations_rejected(self):
        panel = [obs_with_spread(365, 0.003), obs_with_spread(730, 0.003)]
        with pytest.raises(InputError, match="at least 3"):
            fit_spread_panel(panel)

    def test_single_maturity_panel_rejected(self):
        panel = [obs_with_spread(365, s) for s in (0.001, 0.002, 0.003)]
        with pytest.raises(NumericalError, match="unidentified"):
            fit_spread_panel(panel)

    def test_bp_properties_scale(self):
        panel = [obs_with_spread(d, 0.0034) for d in (365, 730, 1095)]
        reg = fit_spread_panel(panel)
        assert reg.intercept_bp == pytest.approx(34.0, abs=1e-9)
        assert reg.slope_bp_per_year == pytest.approx(0.0, abs=1e-9)
        assert reg.intercept_no_slope_bp == pytest.approx(34.0, abs=1e-9)


class TestSummaries:
    def test_quantiles_use_linear_interpolation(self):
        s = summarize("demo", [1.0, 2.0, 3.0, 4.0])
        assert s.count == 4
        assert s.mean == 2.5
        assert s.std == pytest.approx(math.sqrt(5 / 3), rel=1e-15)
        assert s.minimum == 1.0 and s.maximum == 4.0
        assert s.q05 == pytest.approx(1.15)
        assert s.median == 2.5
        assert s.q95 == pytest.approx(3.85)

    def test_single_value_has_zero_std(self):
        s = summarize("demo", [7.0])
        assert s.std == 0.0
        assert s.mean == 7.0 == s.median

    def test_empty_rejected(self):
        with pytest.raises(InputError, match="no values"):
            summarize("demo", [])

    def test_describe_dataset_hand_computed(self):
        quotes = [
            make_quote("90", "20", "22", "1", "3"),
            make_quote("100", "10", "12", "5", "7"),
        ]
        chain = make_chain(VD, [(date(2023, 7, 2), quotes)])
        rows = describe_dataset([chain], [])
        by_name = {r.metric: r for r in rows}
        assert set(by_name) == {
            "strikes_per_maturity",
            "straddle_mid",
            "synthetic_forward_plus_strike",
        }
        assert by_name["strikes_per_maturity"].mean == 2.0
        assert by_name["straddle_mid"].minimum == 17.0
        assert by_name["straddle_mid"].maximum == 23.0
        assert by_name["synthetic_forward_plus_strike"].mean == 107.0

    def test_describe_dataset_includes_spread_panel(self):
        quotes = [make_quote("100", "10", "12", "5", "7")]
        chain = make_chain(VD, [(date(2023, 7, 2), quotes)])
        rows = describe_dataset([chain], [obs_with_spread(365, 0.0034)])
        spread_row = {r.metric: r for r in rows}["spread_bp"]
        assert spread_row.count == 1
        assert spread_row.mean == pytest.approx(34.0)


class TestRobustnessVariants:
    def test_exactly_34_variants(self):
        variants = standard_robustness_variants()
        assert len(variants) == 34

    def test_composition(self):
        variants = standard_robustness_variants()
        weighted = [v for v in variants if v.weighted]
        grid = [v for v in variants if v.name.startswith("penny_")]
        ttm = [v for v in variants if v.name.startswith("min_ttm_")]
        thin = [v for v in variants if v.name == "min_strikes_1"]
        assert len(weighted) == 5
        assert all(v.name.startswith("weighted_penny_") for v in weighted)
        assert len(grid) == 25
        assert len(ttm) == 3
        assert len(thin) == 1
        assert len(weighted) + len(grid) + len(ttm) + len(thin) == 34

    def test_names_unique_and_base_excluded(self):
        variants = standard_robustness_variants()
        names = [v.name for v in variants]
        assert len(set(names)) == 34
        assert "base" not in names

    def test_base_variant_is_the_default_configuration(self):
        assert BASE_VARIANT.name == "base"
        assert BASE_VARIANT.penny_threshold == Decimal("0.1")
        assert BASE_VARIANT.max_bid_ask_ratio == Decimal("0.60")
        assert BASE_VARIANT.min_strikes == 3
        assert BASE_VARIANT.min_ttm_days == DEFAULT_MIN_TTM_DAYS
        assert BASE_VARIANT.weighted is False

    def test_grid_covers_full_cartesian_product(self):
        variants = standard_robustness_variants()
        grid = {
            (v.penny_threshold, v.max_bid_ask_ratio)
            for v in variants
            if v.name.startswith("penny_")
        }
        pennies = {Decimal(p) for p in ("0.05", "0.1", "0.25", "0.5", "1.0")}
        ratios = {Decimal(r) for r in ("0.30", "0.45", "0.60", "0.75", "0.90")}
        assert grid == {(p, r) for p in pennies for r in ratios}

    def test_ttm_sweep_values(self):
        variants = standard_robustness_variants()
        days = sorted(v.min_ttm_days for v in variants if v.name.startswith("min_ttm_"))
        assert days == [30, 182, 365]

    def test_variants_are_hashable_records(self):
        v = standard_robustness_variants()[0]
        assert isinstance(hash(v), int)
        assert isinstance(v, RobustnessVariant)
