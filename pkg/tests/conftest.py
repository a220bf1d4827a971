"""Shared test configuration and quote-building helpers."""

from __future__ import annotations

from datetime import date
from decimal import Decimal
from pathlib import Path

import hypothesis
import pytest

from fundingspread import MaturitySlice, OptionChain, OptionQuote

hypothesis.settings.register_profile(
    "suite", deadline=None, derandomize=True, max_examples=60
)
hypothesis.settings.load_profile("suite")

# Checklist lines collected by the acceptance tests; replayed after the
# run so they stay visible under pytest's output capture.
acceptance_checklist: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if acceptance_checklist:
        terminalreporter.section("acceptance checklist")
        for line in acceptance_checklist:
            terminalreporter.write_line(line)


def _dec(value) -> Decimal | None:
    if value is None:
        return None
    return Decimal(str(value))


def make_quote(
    strike,
    call_bid=None,
    call_ask=None,
    put_bid=None,
    put_ask=None,
) -> OptionQuote:
    """OptionQuote from loosely typed inputs (strings keep exact digits)."""
    return OptionQuote(
        strike=Decimal(str(strike)),
        call_bid=_dec(call_bid),
        call_ask=_dec(call_ask),
        put_bid=_dec(put_bid),
        put_ask=_dec(put_ask),
    )


def quote_around(strike, forward, discount, half="0.05", base="5"):
    """A fully quoted strike consistent with one forward and discount.

    call mid - put mid equals discount * (forward - strike) exactly in
    decimal arithmetic, so fitting a slice of these recovers the inputs.
    """
    strike_d = Decimal(str(strike))
    forward_d = Decimal(str(forward))
    discount_d = Decimal(str(discount))
    half_d = Decimal(str(half))
    base_d = Decimal(str(base))
    intrinsic = forward_d - strike_d
    call_mid = discount_d * (max(intrinsic, Decimal(0)) + base_d)
    put_mid = discount_d * (max(-intrinsic, Decimal(0)) + base_d)
    return OptionQuote(
        strike=strike_d,
        call_bid=call_mid - half_d,
        call_ask=call_mid + half_d,
        put_bid=put_mid - half_d,
        put_ask=put_mid + half_d,
    )


def make_chain(
    value_date: date,
    maturities_with_quotes: list[tuple[date, list[OptionQuote]]],
    market_id: str = "TEST",
) -> OptionChain:
    return OptionChain(
        market_id=market_id,
        value_date=value_date,
        slices=tuple(
            MaturitySlice(maturity=m, quotes=tuple(quotes))
            for m, quotes in maturities_with_quotes
        ),
    )


@pytest.fixture
def exact_chain() -> OptionChain:
    """Two-maturity chain priced off known forwards and discounts."""
    value_date = date(2023, 3, 1)
    f1, d1 = "3000", "0.99"
    f2, d2 = "3050", "0.97"
    strikes = ["2800", "2900", "3000", "3100", "3200"]
    return make_chain(
        value_date,
        [
            (date(2023, 9, 1), [quote_around(k, f1, d1) for k in strikes]),
            (date(2024, 3, 1), [quote_around(k, f2, d2) for k in strikes]),
        ],
    )


FIXTURE_DATASET_DIR = Path(__file__).resolve().parent / "fixtures" / "dataset"
FIXTURE_MARKET_IDS = ("USIDX", "EUIDX")
FIXTURE_CURRENCY_MAPPING = (("USIDX", "USD"), ("EUIDX", "EUR"))
FIXTURE_TRUE_SPREAD_BP = {"USIDX": 34.0, "EUIDX": 0.0}


def load_fixture_market_data():
    """Parsed chains and OIS quote sets from the committed dataset."""
    from fundingspread import load_ois_quote_sets, load_option_chains

    chains = {}
    for market_id in FIXTURE_MARKET_IDS:
        text = (FIXTURE_DATASET_DIR / f"options_{market_id}.csv").read_text()
        chains[market_id] = load_option_chains(text, market_id)
    ois_sets = load_ois_quote_sets((FIXTURE_DATASET_DIR / "ois.csv").read_text())
    return chains, ois_sets
