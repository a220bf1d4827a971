"""Liquidity screening of option chains.

Three rules, applied in a fixed order so every discarded quote is
accounted for exactly once:

1. missing side: all four of call bid/ask and put bid/ask must be present;
2. penny options: a quote is discarded when either option's mid price is
   strictly below the penny threshold;
3. wide spread: a quote is discarded when either option's (ask - bid)/ask
   is strictly above the maximum ratio.

Maturities left with fewer strikes than the minimum are then removed
entirely.  All comparisons are exact decimal arithmetic: the ratio test
is evaluated as ``ask - bid > ratio * ask``, so threshold boundaries are
decided on the quoted digits (0.60 at the boundary is kept, a mid of
exactly the penny threshold is kept).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import date
from decimal import Decimal

from .errors import InputError
from .market_data import MaturitySlice, OptionChain, OptionQuote

DEFAULT_PENNY_THRESHOLD = Decimal("0.1")
DEFAULT_MAX_BID_ASK_RATIO = Decimal("0.60")
DEFAULT_MIN_STRIKES = 3


class DiscardReason(str, enum.Enum):
    MISSING_SIDE = "missing_side"
    PENNY = "penny"
    WIDE_SPREAD = "wide_spread"
    MATURITY_DROPPED = "maturity_dropped"


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds for the liquidity rules.

    `penny_threshold` and `max_bid_ask_ratio` must be `Decimal` so that
    boundary quotes filter deterministically; build them from strings,
    not floats.
    """

    penny_threshold: Decimal = DEFAULT_PENNY_THRESHOLD
    max_bid_ask_ratio: Decimal = DEFAULT_MAX_BID_ASK_RATIO
    min_strikes_per_maturity: int = DEFAULT_MIN_STRIKES

    def __post_init__(self) -> None:
        if not isinstance(self.penny_threshold, Decimal) or not isinstance(
            self.max_bid_ask_ratio, Decimal
        ):
            raise InputError("filter thresholds must be Decimal values")
        if self.penny_threshold < 0:
            raise InputError(f"penny_threshold must be >= 0, got {self.penny_threshold}")
        if not Decimal(0) < self.max_bid_ask_ratio <= Decimal(1):
            raise InputError(
                f"max_bid_ask_ratio must be in (0, 1], got {self.max_bid_ask_ratio}"
            )
        if self.min_strikes_per_maturity < 1:
            raise InputError(
                f"min_strikes_per_maturity must be >= 1, "
                f"got {self.min_strikes_per_maturity}"
            )


@dataclass(frozen=True)
class SliceFilterCounts:
    """Per-maturity accounting of kept and discarded quotes."""

    maturity: date
    input_quotes: int
    kept: int
    missing_side: int
    penny: int
    wide_spread: int
    maturity_dropped: int

    def __post_init__(self) -> None:
        discarded = (
            self.missing_side + self.penny + self.wide_spread + self.maturity_dropped
        )
        if self.kept + discarded != self.input_quotes:
            raise InputError(
                f"filter counts do not balance at {self.maturity}: "
                f"{self.kept} kept + {discarded} discarded != {self.input_quotes}"
            )


@dataclass(frozen=True)
class FilterReport:
    market_id: str
    value_date: date
    slices: tuple[SliceFilterCounts, ...]

    def total(self, reason: DiscardReason) -> int:
        return sum(getattr(s, reason.value) for s in self.slices)

    @property
    def total_kept(self) -> int:
        return sum(s.kept for s in self.slices)

    @property
    def total_input(self) -> int:
        return sum(s.input_quotes for s in self.slices)


def _discard_reason(quote: OptionQuote, cfg: FilterConfig) -> DiscardReason | None:
    """First failing rule for one quote, or None if it survives."""
    if not quote.has_all_sides:
        return DiscardReason.MISSING_SIDE
    if quote.call_mid() < cfg.penny_threshold or quote.put_mid() < cfg.penny_threshold:
        return DiscardReason.PENNY
    for bid, ask in ((quote.call_bid, quote.call_ask), (quote.put_bid, quote.put_ask)):
        if ask == 0:
            # Ratio undefined; by convention a zero ask that escaped the
            # penny rule is treated as infinitely wide.
            return DiscardReason.WIDE_SPREAD
        if ask - bid > cfg.max_bid_ask_ratio * ask:
            return DiscardReason.WIDE_SPREAD
    return None


def filter_chain(
    chain: OptionChain, cfg: FilterConfig | None = None
) -> tuple[OptionChain, FilterReport]:
    """Apply the liquidity rules to a chain.

    Returns the surviving chain (possibly with no slices) and a report
    accounting for every input quote.  Kept quotes preserve their input
    order; the filter is idempotent and monotone in its thresholds.
    """
    cfg = cfg or FilterConfig()
    kept_slices: list[MaturitySlice] = []
    counts: list[SliceFilterCounts] = []
    for s in chain.slices:
        survivors: list[OptionQuote] = []
        n_by_reason = {
            DiscardReason.MISSING_SIDE: 0,
            DiscardReason.PENNY: 0,
            DiscardReason.WIDE_SPREAD: 0,
        }
        for quote in s.quotes:
            reason = _discard_reason(quote, cfg)
            if reason is None:
                survivors.append(quote)
            else:
                n_by_reason[reason] += 1
        dropped_with_slice = 0
        if len(survivors) >= cfg.min_strikes_per_maturity:
            kept_slices.append(MaturitySlice(s.maturity, tuple(survivors)))
            kept = len(survivors)
        else:
            dropped_with_slice = len(survivors)
            kept = 0
        counts.append(
            SliceFilterCounts(
                maturity=s.maturity,
                input_quotes=len(s.quotes),
                kept=kept,
                missing_side=n_by_reason[DiscardReason.MISSING_SIDE],
                penny=n_by_reason[DiscardReason.PENNY],
                wide_spread=n_by_reason[DiscardReason.WIDE_SPREAD],
                maturity_dropped=dropped_with_slice,
            )
        )
    filtered = OptionChain(
        market_id=chain.market_id,
        value_date=chain.value_date,
        slices=tuple(kept_slices),
        observation_time=chain.observation_time,
    )
    report = FilterReport(
        market_id=chain.market_id, value_date=chain.value_date, slices=tuple(counts)
    )
    return filtered, report
