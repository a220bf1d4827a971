"""Funding-spread construction, panel regressions, and robustness variants.

The spread for one maturity is the continuously compounded gap between
the risk-free discount factor and the one implied by option quotes,
annualized Act/365.  Regressions of the spread on time to maturity use
closed-form least squares; p-values come from a Student-t tail computed
here via the regularized incomplete beta function, so the package does
not depend on a statistics library at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from decimal import Decimal

import numpy as np

from .errors import InputError, NumericalError
from .liquidity_filter import (
    DEFAULT_MAX_BID_ASK_RATIO,
    DEFAULT_MIN_STRIKES,
    DEFAULT_PENNY_THRESHOLD,
)
from .market_data import OptionChain, year_fraction

DEFAULT_MIN_TTM_DAYS = 30

# Residual scales below this fraction of the data scale are treated as
# exact fits; smaller values would amplify float noise into the weights.
RESIDUAL_FLOOR_FRACTION = 1e-12

_SPREAD_CHECK_TOL = 1e-12


def funding_spread(b_ois: float, b_bar: float, ttm_years: float) -> float:
    """Annualized log gap between the risk-free and implied discounts.

    Positive when the implied discount is below the risk-free one, i.e.
    when option desks fund above the overnight rate.
    """
    if ttm_years <= 0.0:
        raise InputError(f"time to maturity must be positive, got {ttm_years}")
    if not b_ois > 0.0:
        raise NumericalError(f"risk-free discount must be positive, got {b_ois}")
    if not b_bar > 0.0:
        raise NumericalError(f"implied discount must be positive, got {b_bar}")
    return math.log(b_ois / b_bar) / ttm_years


@dataclass(frozen=True)
class SpreadObservation:
    """One (value date, maturity) point of the spread panel.

    The spread is stored in natural units (per year); reports convert to
    basis points at the output boundary.  Construction re-derives the
    spread from the two discounts and refuses inconsistent inputs.
    """

    value_date: date
    maturity: date
    ttm_years: float
    b_bar: float
    b_ois: float
    spread: float

    def __post_init__(self) -> None:
        recomputed = funding_spread(self.b_ois, self.b_bar, self.ttm_years)
        if abs(recomputed - self.spread) > _SPREAD_CHECK_TOL:
            raise InputError(
                f"spread {self.spread} inconsistent with discounts at "
                f"{self.value_date}/{self.maturity} (recomputed {recomputed})"
            )

    @property
    def spread_bp(self) -> float:
        return self.spread * 1e4


def build_observation(
    value_date: date, maturity: date, b_bar: float, b_ois: float
) -> SpreadObservation:
    ttm = year_fraction(value_date, maturity)
    return SpreadObservation(
        value_date=value_date,
        maturity=maturity,
        ttm_years=ttm,
        b_bar=b_bar,
        b_ois=b_ois,
        spread=funding_spread(b_ois, b_bar, ttm),
    )


def filter_observations(
    observations: list[SpreadObservation], min_ttm_days: int
) -> list[SpreadObservation]:
    """Drop points at or below the maturity cutoff (strict, Act/365)."""
    cutoff = min_ttm_days / 365
    return [o for o in observations if o.ttm_years > cutoff]


# ---------------------------------------------------------------------------
# Student-t tail probability.


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        numer = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numer * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numer / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        numer = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numer * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numer / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-15:
            return h
    raise NumericalError(
        f"incomplete beta continued fraction stalled at a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to roughly 1e-14 for the parameter ranges here."""
    if a <= 0.0 or b <= 0.0:
        raise InputError(f"beta parameters must be positive, got a={a}, b={b}")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # Evaluate on the side where the continued fraction converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_two_sided_p(t_stat: float, df: float) -> float:
    """P(|T| >= |t|) for T Student-t with `df` degrees of freedom."""
    if df <= 0.0:
        raise InputError(f"degrees of freedom must be positive, got {df}")
    if t_stat == 0.0:
        return 1.0
    if math.isinf(t_stat):
        return 0.0
    x = df / (df + t_stat * t_stat)
    return regularized_incomplete_beta(0.5 * df, 0.5, x)


# ---------------------------------------------------------------------------
# Panel regression.


@dataclass(frozen=True)
class SpreadRegression:
    """Least-squares fit of spread against time to maturity.

    `intercept_no_slope` is the (weighted) mean spread, the estimate one
    gets after accepting a flat term structure; its test has n-1 degrees
    of freedom where the two-parameter fit has n-2.
    """

    n: int
    weighted: bool
    intercept: float
    slope: float
    se_intercept: float
    se_slope: float
    t_intercept: float
    t_slope: float
    p_intercept: float
    p_slope: float
    intercept_no_slope: float
    se_intercept_no_slope: float
    t_intercept_no_slope: float
    p_intercept_no_slope: float
    r_squared: float
    perfect_fit: bool

    @property
    def intercept_bp(self) -> float:
        return self.intercept * 1e4

    @property
    def slope_bp_per_year(self) -> float:
        return self.slope * 1e4

    @property
    def intercept_no_slope_bp(self) -> float:
        return self.intercept_no_slope * 1e4


def _t_and_p(coefficient: float, se: float, df: float) -> tuple[float, float]:
    if se == 0.0:
        if coefficient == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, coefficient), 0.0
    t_stat = coefficient / se
    return t_stat, student_t_two_sided_p(t_stat, df)


def _weighted_line_fit(
    x: np.ndarray, y: np.ndarray, w: np.ndarray
) -> tuple[float, float, float, float, float, float, float]:
    """Closed-form weighted least squares of y on [1, x].

    Returns (intercept, slope, var_intercept_unit, var_slope_unit, rss,
    tss, sum_w) where the variance factors still need the residual
    variance estimate multiplied in.
    """
    sum_w = float(np.sum(w))
    x_bar = float(np.sum(w * x)) / sum_w
    y_bar = float(np.sum(w * y)) / sum_w
    dx = x - x_bar
    dy = y - y_bar
    sxx = float(np.sum(w * dx * dx))
    if sxx == 0.0:
        raise NumericalError(
            "all observations share one time to maturity; slope is unidentified"
        )
    sxy = float(np.sum(w * dx * dy))
    slope = sxy / sxx
    intercept = y_bar - slope * x_bar
    residuals = y - intercept - slope * x
    rss = float(np.sum(w * residuals * residuals))
    tss = float(np.sum(w * dy * dy))
    var_slope_unit = 1.0 / sxx
    var_intercept_unit = 1.0 / sum_w + x_bar * x_bar / sxx
    return intercept, slope, var_intercept_unit, var_slope_unit, rss, tss, sum_w


def fit_spread_panel(
    observations: list[SpreadObservation], weighted: bool = False
) -> SpreadRegression:
    """Regress the spread panel on time to maturity.

    The weighted mode runs one reweighting pass: an unweighted fit
    supplies residuals, each point then gets weight 1/residual^2 (with a
    floor so exactly fitted points do not blow up), and the fit is
    redone.  Equal weights degenerate to the plain path bit for bit.
    """
    n = len(observations)
    if n < 3:
        raise InputError(f"regression needs at least 3 observations, got {n}")
    x = np.array([o.ttm_years for o in observations], dtype=np.float64)
    y = np.array([o.spread for o in observations], dtype=np.float64)
    scale = float(np.mean(np.abs(y)))
    if scale == 0.0:
        scale = 1.0
    floor = RESIDUAL_FLOOR_FRACTION * scale

    w = np.ones_like(x)
    if weighted:
        intercept0, slope0, *_ = _weighted_line_fit(x, y, w)
        residuals = y - intercept0 - slope0 * x
        candidate = 1.0 / np.maximum(np.abs(residuals), floor) ** 2
        # Identical weights carry no information; keep the exact
        # unweighted arithmetic in that case.
        if candidate.min() != candidate.max():
            w = candidate

    intercept, slope, var_int_unit, var_slope_unit, rss, tss, sum_w = (
        _weighted_line_fit(x, y, w)
    )
    perfect_fit = rss <= (floor * floor) * n
    sigma2 = 0.0 if perfect_fit else rss / (n - 2)
    se_intercept = math.sqrt(sigma2 * var_int_unit)
    se_slope = math.sqrt(sigma2 * var_slope_unit)
    t_int, p_int = _t_and_p(intercept, se_intercept, n - 2)
    t_slope, p_slope = _t_and_p(slope, se_slope, n - 2)

    mean = float(np.sum(w * y)) / sum_w
    dy = y - mean
    mean_rss = float(np.sum(w * dy * dy))
    mean_sigma2 = 0.0 if mean_rss <= (floor * floor) * n else mean_rss / (n - 1)
    se_mean = math.sqrt(mean_sigma2 / sum_w)
    t_mean, p_mean = _t_and_p(mean, se_mean, n - 1)

    if tss == 0.0:
        r_squared = 1.0 if perfect_fit else 0.0
    else:
        r_squared = 1.0 - rss / tss

    return SpreadRegression(
        n=n,
        weighted=weighted,
        intercept=intercept,
        slope=slope,
        se_intercept=se_intercept,
        se_slope=se_slope,
        t_intercept=t_int,
        t_slope=t_slope,
        p_intercept=p_int,
        p_slope=p_slope,
        intercept_no_slope=mean,
        se_intercept_no_slope=se_mean,
        t_intercept_no_slope=t_mean,
        p_intercept_no_slope=p_mean,
        r_squared=r_squared,
        perfect_fit=perfect_fit,
    )


# ---------------------------------------------------------------------------
# Descriptive statistics.


@dataclass(frozen=True)
class StatSummary:
    metric: str
    count: int
    mean: float
    std: float
    minimum: float
    q05: float
    median: float
    q95: float
    maximum: float


def summarize(metric: str, values: list[float]) -> StatSummary:
    if not values:
        raise InputError(f"no values to summarize for metric {metric!r}")
    arr = np.array(values, dtype=np.float64)
    q05, median, q95 = np.quantile(arr, [0.05, 0.5, 0.95])
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return StatSummary(
        metric=metric,
        count=int(arr.size),
        mean=float(np.mean(arr)),
        std=std,
        minimum=float(arr.min()),
        q05=float(q05),
        median=float(median),
        q95=float(q95),
        maximum=float(arr.max()),
    )


def describe_dataset(
    chains: list[OptionChain], observations: list[SpreadObservation]
) -> list[StatSummary]:
    """Quote-level and panel-level summaries for one market.

    Expects chains that already passed the liquidity filter, so every
    quote has both sides.  Metrics: strikes per maturity, the price of
    the call-plus-put package, that package's synthetic forward plus its
    strike (the order of magnitude the discount fit works on), and the
    panel spread in basis points.
    """
    strikes_per_slice: list[float] = []
    straddle_mid: list[float] = []
    forward_plus_strike: list[float] = []
    for chain in chains:
        for slice_ in chain.slices:
            strikes_per_slice.append(float(len(slice_.quotes)))
            for quote in slice_.quotes:
                call_mid = quote.call_mid()
                put_mid = quote.put_mid()
                straddle_mid.append(float(call_mid + put_mid))
                forward_plus_strike.append(float(call_mid - put_mid + quote.strike))
    rows = [
        summarize("strikes_per_maturity", strikes_per_slice),
        summarize("straddle_mid", straddle_mid),
        summarize("synthetic_forward_plus_strike", forward_plus_strike),
    ]
    if observations:
        rows.append(summarize("spread_bp", [o.spread_bp for o in observations]))
    return rows


# ---------------------------------------------------------------------------
# Robustness variants.


@dataclass(frozen=True)
class RobustnessVariant:
    """One full pipeline configuration to rerun from raw quotes."""

    name: str
    penny_threshold: Decimal
    max_bid_ask_ratio: Decimal
    min_strikes: int
    min_ttm_days: int
    weighted: bool


BASE_VARIANT = RobustnessVariant(
    name="base",
    penny_threshold=DEFAULT_PENNY_THRESHOLD,
    max_bid_ask_ratio=DEFAULT_MAX_BID_ASK_RATIO,
    min_strikes=DEFAULT_MIN_STRIKES,
    min_ttm_days=DEFAULT_MIN_TTM_DAYS,
    weighted=False,
)

_PENNY_SWEEP = ("0.05", "0.1", "0.25", "0.5", "1.0")
_RATIO_SWEEP = ("0.30", "0.45", "0.60", "0.75", "0.90")
_TTM_SWEEP_DAYS = (30, 182, 365)


def standard_robustness_variants() -> tuple[RobustnessVariant, ...]:
    """The 34 perturbations checked against the base configuration.

    Five weighted reruns across penny thresholds, a 5x5 grid over penny
    and spread-ratio thresholds, three maturity cutoffs, and one run that
    keeps thin maturities.  A stable conclusion moves the intercept by
    less than a basis point across all of them.
    """
    variants: list[RobustnessVariant] = []
    for penny in _PENNY_SWEEP:
        variants.append(
            RobustnessVariant(
                name=f"weighted_penny_{penny}",
                penny_threshold=Decimal(penny),
                max_bid_ask_ratio=DEFAULT_MAX_BID_ASK_RATIO,
                min_strikes=DEFAULT_MIN_STRIKES,
                min_ttm_days=DEFAULT_MIN_TTM_DAYS,
                weighted=True,
            )
        )
    for penny in _PENNY_SWEEP:
        for ratio in _RATIO_SWEEP:
            variants.append(
                RobustnessVariant(
                    name=f"penny_{penny}_ratio_{ratio}",
                    penny_threshold=Decimal(penny),
                    max_bid_ask_ratio=Decimal(ratio),
                    min_strikes=DEFAULT_MIN_STRIKES,
                    min_ttm_days=DEFAULT_MIN_TTM_DAYS,
                    weighted=False,
                )
            )
    for days in _TTM_SWEEP_DAYS:
        variants.append(
            RobustnessVariant(
                name=f"min_ttm_{days}d",
                penny_threshold=DEFAULT_PENNY_THRESHOLD,
                max_bid_ask_ratio=DEFAULT_MAX_BID_ASK_RATIO,
                min_strikes=DEFAULT_MIN_STRIKES,
                min_ttm_days=days,
                weighted=False,
            )
        )
    variants.append(
        RobustnessVariant(
            name="min_strikes_1",
            penny_threshold=DEFAULT_PENNY_THRESHOLD,
            max_bid_ask_ratio=DEFAULT_MAX_BID_ASK_RATIO,
            min_strikes=1,
            min_ttm_days=DEFAULT_MIN_TTM_DAYS,
            weighted=False,
        )
    )
    return tuple(variants)
