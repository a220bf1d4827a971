"""Synthetic option and OIS data with a known funding spread.

The generator prices calls and puts off a chosen forward and implied
discount, so put-call parity holds exactly before noise and the true
spread is recoverable.  The implied discount is derived from the same
bootstrapped curve the analysis pipeline uses, which keeps the generated
panel free of day-count or interpolation bias.  All randomness flows
from one seeded generator in a fixed draw order, so a config maps to
exactly one dataset.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from decimal import Decimal
from pathlib import Path

import numpy as np

from .errors import InputError, NumericalError
from .market_data import (
    VALID_TENOR_MONTHS,
    MaturitySlice,
    OisQuote,
    OisQuoteSet,
    OptionChain,
    OptionQuote,
    add_months,
    serialize_ois_quote_sets,
    serialize_option_chains,
    year_fraction,
)
from .ois_curve import OisCurve, bootstrap_ois_curve


@dataclass(frozen=True)
class SyntheticMarket:
    """One simulated underlying with its funding behaviour."""

    market_id: str
    currency: str
    spread_bp: float
    spread_slope_bp_per_year: float = 0.0
    initial_spot: float = 3000.0
    carry_rate: float = 0.01
    daily_vol: float = 0.005

    def __post_init__(self) -> None:
        if not self.market_id:
            raise InputError("market_id must be non-empty")
        if not self.currency:
            raise InputError("currency must be non-empty")
        if self.initial_spot <= 0.0:
            raise InputError("initial_spot must be positive")
        if self.daily_vol < 0.0:
            raise InputError("daily_vol must be non-negative")


@dataclass(frozen=True)
class SyntheticConfig:
    """Full recipe for one dataset.

    Maturities shorter than two months tend to fall to the time-to-
    maturity cutoff downstream, so the default grid starts at two.
    """

    start_date: date
    n_dates: int
    markets: tuple[SyntheticMarket, ...]
    maturity_months: tuple[int, ...] = (2, 3, 4, 6, 9, 12, 15, 18, 21, 24)
    date_step_days: int = 1
    n_strikes: int = 25
    strike_span: float = 0.2
    noise_sigma: float = 0.01
    half_spread: float = 0.05
    ois_base_rate: float = 0.02
    ois_rate_amplitude: float = 0.0
    smile_floor: float = 2.0
    smile_amplitude: float = 40.0
    smile_width: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_dates < 1:
            raise InputError("n_dates must be at least 1")
        if not self.markets:
            raise InputError("at least one market is required")
        ids = [m.market_id for m in self.markets]
        if len(set(ids)) != len(ids):
            raise InputError("market ids must be unique")
        if self.date_step_days < 1:
            raise InputError("date_step_days must be at least 1")
        if self.n_strikes < 2:
            raise InputError("n_strikes must be at least 2")
        if not 0.0 < self.strike_span < 1.0:
            raise InputError("strike_span must be in (0, 1)")
        if self.noise_sigma < 0.0:
            raise InputError("noise_sigma must be non-negative")
        if self.half_spread < 0.0:
            raise InputError("half_spread must be non-negative")
        if self.smile_floor <= 0.0:
            raise InputError("smile_floor must be positive")
        if self.smile_width <= 0.0:
            raise InputError("smile_width must be positive")
        months = self.maturity_months
        if not months:
            raise InputError("maturity_months must be non-empty")
        if list(months) != sorted(set(months)):
            raise InputError("maturity_months must be strictly increasing")
        if months[0] < 1:
            raise InputError("maturity_months must be positive")
        if months[-1] > max(VALID_TENOR_MONTHS):
            raise InputError(
                f"longest maturity {months[-1]}M exceeds the curve pillar grid"
            )


@dataclass(frozen=True)
class SyntheticDataset:
    """Generated quotes plus the ground truth they encode."""

    config: SyntheticConfig
    chains_by_market: dict[str, tuple[OptionChain, ...]] = field(compare=False)
    ois_sets: tuple[OisQuoteSet, ...] = field(compare=False)
    curves: dict[tuple[date, str], OisCurve] = field(compare=False)

    def true_spread(self, market_id: str, ttm_years: float) -> float:
        for market in self.config.markets:
            if market.market_id == market_id:
                return (
                    market.spread_bp
                    + market.spread_slope_bp_per_year * ttm_years
                ) / 1e4
        raise InputError(f"unknown market id {market_id!r}")


def _value_dates(config: SyntheticConfig) -> list[date]:
    return [
        config.start_date + timedelta(days=i * config.date_step_days)
        for i in range(config.n_dates)
    ]


def _ois_rate(config: SyntheticConfig, date_index: int) -> Decimal:
    rate = config.ois_base_rate
    if config.ois_rate_amplitude != 0.0:
        rate += config.ois_rate_amplitude * math.sin(date_index / 7.0)
    return Decimal(str(round(rate, 10)))


def _build_ois(
    config: SyntheticConfig, value_dates: list[date]
) -> tuple[tuple[OisQuoteSet, ...], dict[tuple[date, str], OisCurve]]:
    currencies = sorted({m.currency for m in config.markets})
    tenors = sorted(VALID_TENOR_MONTHS)
    sets: list[OisQuoteSet] = []
    curves: dict[tuple[date, str], OisCurve] = {}
    for i, value_date in enumerate(value_dates):
        rate = _ois_rate(config, i)
        quotes = tuple(OisQuote(tenor_months=m, rate=rate) for m in tenors)
        for currency in currencies:
            quote_set = OisQuoteSet(
                currency=currency, value_date=value_date, quotes=quotes
            )
            sets.append(quote_set)
            curves[(value_date, currency)] = bootstrap_ois_curve(quote_set)
    return tuple(sets), curves


def _decimal(value: float) -> Decimal:
    # str(float) is the shortest round-tripping form, so parsing the CSV
    # back recovers the exact float used here.
    return Decimal(str(value))


def _slice_quotes(
    config: SyntheticConfig,
    forward: float,
    implied_discount: float,
    noise: np.ndarray,
) -> tuple[OptionQuote, ...]:
    low = forward * (1.0 - config.strike_span)
    high = forward * (1.0 + config.strike_span)
    strikes = np.linspace(low, high, config.n_strikes)
    width = config.smile_width * forward
    quotes = []
    for j, strike in enumerate(strikes):
        moneyness = (strike - forward) / width
        time_value = config.smile_floor + config.smile_amplitude * math.exp(
            -moneyness * moneyness
        )
        call_mid = implied_discount * (max(forward - strike, 0.0) + time_value)
        put_mid = implied_discount * (max(strike - forward, 0.0) + time_value)
        call_mid += float(noise[j, 0])
        put_mid += float(noise[j, 1])
        half = config.half_spread
        if call_mid - half <= 0.0 or put_mid - half <= 0.0:
            raise NumericalError(
                "generated a non-positive bid; lower noise_sigma or "
                "half_spread, or raise smile_floor"
            )
        quotes.append(
            OptionQuote(
                strike=_decimal(round(float(strike), 4)),
                call_bid=_decimal(call_mid - half),
                call_ask=_decimal(call_mid + half),
                put_bid=_decimal(put_mid - half),
                put_ask=_decimal(put_mid + half),
            )
        )
    return tuple(quotes)


def generate_dataset(config: SyntheticConfig) -> SyntheticDataset:
    """Build chains, OIS quotes, and curves for the whole panel.

    Draw order (fixed for reproducibility): per market, first the spot
    path across all dates, then per date and maturity one noise block of
    shape (n_strikes, 2) for call and put mids.
    """
    rng = np.random.default_rng(config.seed)
    value_dates = _value_dates(config)
    ois_sets, curves = _build_ois(config, value_dates)

    chains_by_market: dict[str, tuple[OptionChain, ...]] = {}
    for market in config.markets:
        steps = rng.normal(0.0, market.daily_vol, size=config.n_dates)
        spots = market.initial_spot * np.exp(np.cumsum(steps) - steps[0])
        chains: list[OptionChain] = []
        for i, value_date in enumerate(value_dates):
            curve = curves[(value_date, market.currency)]
            slices = []
            for months in config.maturity_months:
                maturity = add_months(value_date, months)
                ttm = year_fraction(value_date, maturity)
                spread = (
                    market.spread_bp + market.spread_slope_bp_per_year * ttm
                ) / 1e4
                implied_discount = curve.discount(maturity) * math.exp(
                    -spread * ttm
                )
                forward = float(spots[i]) * math.exp(market.carry_rate * ttm)
                noise = rng.normal(
                    0.0, config.noise_sigma, size=(config.n_strikes, 2)
                )
                slices.append(
                    MaturitySlice(
                        maturity=maturity,
                        quotes=_slice_quotes(
                            config, forward, implied_discount, noise
                        ),
                    )
                )
            chains.append(
                OptionChain(
                    market_id=market.market_id,
                    value_date=value_date,
                    slices=tuple(slices),
                )
            )
        chains_by_market[market.market_id] = tuple(chains)
    return SyntheticDataset(
        config=config,
        chains_by_market=chains_by_market,
        ois_sets=ois_sets,
        curves=curves,
    )


def _json_default(value: object) -> str:
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, Decimal):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_dataset(dataset: SyntheticDataset, out_dir: str | Path) -> list[Path]:
    """Write one options CSV per market, one OIS CSV, and a manifest.

    Returns the created paths.  Output is byte-deterministic for a given
    config.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []
    for market in dataset.config.markets:
        chains = dataset.chains_by_market[market.market_id]
        path = out / f"options_{market.market_id}.csv"
        path.write_text(serialize_option_chains(chains), newline="")
        created.append(path)
    ois_path = out / "ois.csv"
    ois_path.write_text(serialize_ois_quote_sets(dataset.ois_sets), newline="")
    created.append(ois_path)

    manifest = {
        "config": dataclasses.asdict(dataset.config),
        "files": {
            "ois": ois_path.name,
            "options": {
                m.market_id: f"options_{m.market_id}.csv"
                for m in dataset.config.markets
            },
        },
        "truth": {
            m.market_id: {
                "spread_bp": m.spread_bp,
                "spread_slope_bp_per_year": m.spread_slope_bp_per_year,
                "currency": m.currency,
            }
            for m in dataset.config.markets
        },
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2, default=_json_default)
        + "\n",
        newline="",
    )
    created.append(manifest_path)
    return created
