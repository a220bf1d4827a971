"""Implied discount factors and funding spreads from listed option quotes.

The package recovers the discount factor embedded in call/put quote
pairs, compares it with an OIS discount curve, and studies the funding
spread that separates the two across markets and maturities.
"""

__version__ = "0.1.0"

from .errors import InputError, NumericalError
from .liquidity_filter import (
    DEFAULT_MAX_BID_ASK_RATIO,
    DEFAULT_MIN_STRIKES,
    DEFAULT_PENNY_THRESHOLD,
    DiscardReason,
    FilterConfig,
    FilterReport,
    filter_chain,
)
from .market_data import (
    VALID_TENOR_MONTHS,
    MaturitySlice,
    OisQuote,
    OisQuoteSet,
    OptionChain,
    OptionQuote,
    add_months,
    load_ois_quote_sets,
    load_option_chains,
    parse_ois_quotes,
    parse_option_chain,
    serialize_ois_quote_sets,
    serialize_option_chain,
    serialize_option_chains,
    year_fraction,
)
from .ois_curve import OisCurve, bootstrap_ois_curve, curve_to_csv, implied_par_rate
from .pipeline import (
    MarketDataset,
    MarketResult,
    RunConfig,
    RunResult,
    analyze_market,
    build_curves,
    max_intercept_deviation_bp,
    run_analysis,
    write_report,
)
from .spread_analytics import (
    DEFAULT_MIN_TTM_DAYS,
    RobustnessVariant,
    SpreadObservation,
    SpreadRegression,
    StatSummary,
    build_observation,
    describe_dataset,
    fit_spread_panel,
    funding_spread,
    regularized_incomplete_beta,
    standard_robustness_variants,
    student_t_two_sided_p,
)
from .synthetic import (
    SyntheticConfig,
    SyntheticDataset,
    SyntheticMarket,
    generate_dataset,
    write_dataset,
)
from .synthetic_forward import (
    DISCOUNT_CAP,
    FLAG_CROSSED_FORWARD,
    FLAG_HIGH_DISCOUNT,
    FLAG_NONPOSITIVE_DISCOUNT,
    ForwardBidAsk,
    ImpliedDiscountFit,
    SyntheticForwardQuote,
    fit_implied_discount,
    fit_slice,
    forward_bid_ask,
    per_strike_forwards,
    synthetic_forward_quotes,
)

__all__ = [
    "DEFAULT_MAX_BID_ASK_RATIO",
    "DEFAULT_MIN_STRIKES",
    "DEFAULT_MIN_TTM_DAYS",
    "DEFAULT_PENNY_THRESHOLD",
    "DISCOUNT_CAP",
    "DiscardReason",
    "FLAG_CROSSED_FORWARD",
    "FLAG_HIGH_DISCOUNT",
    "FLAG_NONPOSITIVE_DISCOUNT",
    "FilterConfig",
    "FilterReport",
    "ForwardBidAsk",
    "ImpliedDiscountFit",
    "InputError",
    "MarketDataset",
    "MarketResult",
    "MaturitySlice",
    "NumericalError",
    "OisCurve",
    "OisQuote",
    "OisQuoteSet",
    "OptionChain",
    "OptionQuote",
    "RobustnessVariant",
    "RunConfig",
    "RunResult",
    "SpreadObservation",
    "SpreadRegression",
    "StatSummary",
    "SyntheticConfig",
    "SyntheticDataset",
    "SyntheticForwardQuote",
    "SyntheticMarket",
    "VALID_TENOR_MONTHS",
    "add_months",
    "analyze_market",
    "bootstrap_ois_curve",
    "build_curves",
    "build_observation",
    "curve_to_csv",
    "describe_dataset",
    "filter_chain",
    "fit_implied_discount",
    "fit_slice",
    "fit_spread_panel",
    "forward_bid_ask",
    "funding_spread",
    "generate_dataset",
    "implied_par_rate",
    "load_ois_quote_sets",
    "load_option_chains",
    "max_intercept_deviation_bp",
    "parse_ois_quotes",
    "parse_option_chain",
    "per_strike_forwards",
    "regularized_incomplete_beta",
    "run_analysis",
    "serialize_ois_quote_sets",
    "serialize_option_chain",
    "serialize_option_chains",
    "standard_robustness_variants",
    "student_t_two_sided_p",
    "synthetic_forward_quotes",
    "write_dataset",
    "write_report",
    "year_fraction",
]
