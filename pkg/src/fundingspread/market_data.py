"""Domain types and parsers for option-chain and OIS quote data.

Prices and rates are carried as `decimal.Decimal` from ingestion onward so
that serialize/parse round trips are exact and liquidity-threshold
comparisons are decided on the quoted digits, not on binary-float images
of them.  They are converted to `float` only inside numerical routines.

Calendar dates are plain `datetime.date` values: valid Gregorian dates
with total ordering and no business-day adjustment.  The spread day count
is Act/365; the day difference is an exact integer before the single
final division.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, InvalidOperation

from .errors import InputError

OPTION_CHAIN_HEADER = (
    "value_date",
    "maturity",
    "strike",
    "call_bid",
    "call_ask",
    "put_bid",
    "put_ask",
)

OIS_HEADER = ("value_date", "currency", "tenor", "rate")

# Conventional OIS pillar tenors, in months: 1..12M, 15M, 18M, 21M, 2..5Y.
VALID_TENOR_MONTHS = frozenset(range(1, 13)) | {15, 18, 21, 24, 36, 48, 60}

DAYS_PER_YEAR_ACT365 = 365


def year_fraction(start: date, end: date) -> float:
    """Act/365 year fraction between two calendar dates.

    The day count is exact integer arithmetic; only the final division by
    365 is done in floating point.
    """
    if end < start:
        raise InputError(f"end date {end} precedes start date {start}")
    return (end - start).days / DAYS_PER_YEAR_ACT365


def add_months(d: date, months: int) -> date:
    """Shift a date by whole calendar months, clamping to month end.

    2019-01-31 + 1 month is 2019-02-28 (no business-day adjustment).
    """
    month_index = d.month - 1 + months
    year = d.year + month_index // 12
    month = month_index % 12 + 1
    day = min(d.day, _days_in_month(year, month))
    return date(year, month, day)


def _days_in_month(year: int, month: int) -> int:
    if month == 12:
        return 31
    return (date(year, month + 1, 1) - date(year, month, 1)).days


def parse_tenor(token: str) -> int:
    """Parse a tenor token (``6M``, ``2Y``) into a month count.

    Only the conventional OIS pillar tenors are accepted: 1-12, 15, 18,
    21 months and 1-5 years.
    """
    token = token.strip().upper()
    if len(token) < 2 or token[-1] not in ("M", "Y"):
        raise InputError(f"unknown tenor token {token!r}")
    try:
        n = int(token[:-1])
    except ValueError:
        raise InputError(f"unknown tenor token {token!r}") from None
    months = n if token[-1] == "M" else 12 * n
    if token[-1] == "Y" and not 1 <= n <= 5:
        raise InputError(f"unknown tenor token {token!r}")
    if months not in VALID_TENOR_MONTHS:
        raise InputError(f"unknown tenor token {token!r}")
    return months


def format_tenor(months: int) -> str:
    """Canonical token for a month count (12 months renders as ``1Y``)."""
    if months >= 12 and months % 12 == 0:
        return f"{months // 12}Y"
    return f"{months}M"


def _parse_decimal(text: str, what: str, line_no: int) -> Decimal:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise InputError(f"line {line_no}: unparseable {what} {text!r}") from None
    if not value.is_finite():
        raise InputError(f"line {line_no}: non-finite {what} {text!r}")
    return value


def _parse_date(text: str, what: str, line_no: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise InputError(f"line {line_no}: unparseable {what} {text!r}") from None


@dataclass(frozen=True)
class OptionQuote:
    """Bid/ask for the call and the put at one strike.

    Any price side may be missing (``None``); the liquidity filter, not
    the parser, decides what to do with incomplete quotes.
    """

    strike: Decimal
    call_bid: Decimal | None = None
    call_ask: Decimal | None = None
    put_bid: Decimal | None = None
    put_ask: Decimal | None = None

    def __post_init__(self) -> None:
        if not self.strike.is_finite() or self.strike <= 0:
            raise InputError(f"strike must be positive, got {self.strike}")
        for name in ("call_bid", "call_ask", "put_bid", "put_ask"):
            price = getattr(self, name)
            if price is None:
                continue
            if not price.is_finite() or price < 0:
                raise InputError(f"{name} must be >= 0, got {price}")
        for side in ("call", "put"):
            bid = getattr(self, f"{side}_bid")
            ask = getattr(self, f"{side}_ask")
            if bid is not None and ask is not None and bid > ask:
                raise InputError(
                    f"{side} bid exceeds ask at strike {self.strike} ({bid} > {ask})"
                )

    @property
    def has_all_sides(self) -> bool:
        return None not in (self.call_bid, self.call_ask, self.put_bid, self.put_ask)

    def call_mid(self) -> Decimal:
        if self.call_bid is None or self.call_ask is None:
            raise InputError(f"call side missing at strike {self.strike}")
        return (self.call_bid + self.call_ask) / 2

    def put_mid(self) -> Decimal:
        if self.put_bid is None or self.put_ask is None:
            raise InputError(f"put side missing at strike {self.strike}")
        return (self.put_bid + self.put_ask) / 2


@dataclass(frozen=True)
class MaturitySlice:
    """All quotes for one expiry, sorted by strictly increasing strike."""

    maturity: date
    quotes: tuple[OptionQuote, ...]

    def __post_init__(self) -> None:
        for prev, cur in zip(self.quotes, self.quotes[1:]):
            if cur.strike <= prev.strike:
                raise InputError(
                    f"strikes must be strictly increasing at maturity "
                    f"{self.maturity}: {prev.strike} then {cur.strike}"
                )

    @property
    def strikes(self) -> tuple[Decimal, ...]:
        return tuple(q.strike for q in self.quotes)


@dataclass(frozen=True)
class OptionChain:
    """One market's option snapshot for a single value date."""

    market_id: str
    value_date: date
    slices: tuple[MaturitySlice, ...]
    observation_time: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        for s in self.slices:
            if s.maturity <= self.value_date:
                raise InputError(
                    f"maturity {s.maturity} not after value date {self.value_date}"
                )
        for prev, cur in zip(self.slices, self.slices[1:]):
            if cur.maturity <= prev.maturity:
                raise InputError(
                    f"maturities must be strictly increasing: "
                    f"{prev.maturity} then {cur.maturity}"
                )

    @property
    def n_quotes(self) -> int:
        return sum(len(s.quotes) for s in self.slices)


@dataclass(frozen=True)
class OisQuote:
    """One OIS par quote: pillar tenor in months and a decimal rate."""

    tenor_months: int
    rate: Decimal

    def __post_init__(self) -> None:
        if self.tenor_months not in VALID_TENOR_MONTHS:
            raise InputError(f"unsupported tenor of {self.tenor_months} months")
        if not self.rate.is_finite():
            raise InputError(f"non-finite rate for tenor {self.tenor_months}M")


@dataclass(frozen=True)
class OisQuoteSet:
    """OIS par rates for one currency at one value date, sorted by tenor."""

    currency: str
    value_date: date
    quotes: tuple[OisQuote, ...]

    def __post_init__(self) -> None:
        if not self.quotes:
            raise InputError("OIS quote set must contain at least one quote")
        for prev, cur in zip(self.quotes, self.quotes[1:]):
            if cur.tenor_months <= prev.tenor_months:
                raise InputError(
                    f"duplicate or out-of-order tenor "
                    f"{format_tenor(cur.tenor_months)} for {self.currency}"
                )


def _read_rows(text: str, expected_header: tuple[str, ...]) -> list[tuple[int, list[str]]]:
    """Split CSV text into (line_number, cells) rows after header validation."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("empty input: missing header") from None
    header = [h.strip().lower() for h in header]
    if header != list(expected_header):
        raise InputError(
            f"malformed header: expected {','.join(expected_header)!r}, "
            f"got {','.join(header)!r}"
        )
    rows = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(expected_header):
            raise InputError(
                f"line {line_no}: expected {len(expected_header)} fields, got {len(cells)}"
            )
        rows.append((line_no, cells))
    return rows


def _chain_from_rows(
    market_id: str,
    value_date: date,
    rows: list[tuple[int, date, OptionQuote]],
) -> OptionChain:
    by_maturity: dict[date, dict[Decimal, tuple[int, OptionQuote]]] = {}
    for line_no, maturity, quote in rows:
        strikes = by_maturity.setdefault(maturity, {})
        if quote.strike in strikes:
            raise InputError(
                f"line {line_no}: duplicate (maturity, strike) "
                f"({maturity}, {quote.strike})"
            )
        strikes[quote.strike] = (line_no, quote)
    slices = []
    for maturity in sorted(by_maturity):
        if maturity <= value_date:
            line_no = min(ln for ln, _ in by_maturity[maturity].values())
            raise InputError(
                f"line {line_no}: maturity {maturity} not after value date {value_date}"
            )
        quotes = tuple(
            by_maturity[maturity][k][1] for k in sorted(by_maturity[maturity])
        )
        slices.append(MaturitySlice(maturity=maturity, quotes=quotes))
    return OptionChain(market_id=market_id, value_date=value_date, slices=tuple(slices))


def _parse_option_rows(text: str) -> dict[date, list[tuple[int, date, OptionQuote]]]:
    groups: dict[date, list[tuple[int, date, OptionQuote]]] = {}
    for line_no, cells in _read_rows(text, OPTION_CHAIN_HEADER):
        value_date = _parse_date(cells[0], "value_date", line_no)
        maturity = _parse_date(cells[1], "maturity", line_no)
        strike = _parse_decimal(cells[2], "strike", line_no)
        prices = []
        for name, cell in zip(OPTION_CHAIN_HEADER[3:], cells[3:]):
            if not cell.strip():
                prices.append(None)
            else:
                prices.append(_parse_decimal(cell, name, line_no))
        try:
            quote = OptionQuote(strike, *prices)
        except InputError as exc:
            raise InputError(f"line {line_no}: {exc}") from None
        groups.setdefault(value_date, []).append((line_no, maturity, quote))
    return groups


def parse_option_chain(text: str, market_id: str) -> OptionChain:
    """Parse an option-chain CSV holding a single value date.

    Schema: ``value_date,maturity,strike,call_bid,call_ask,put_bid,put_ask``
    with ISO dates, decimal prices, and empty fields for missing sides.
    Errors carry the 1-based line number of the offending row.
    """
    groups = _parse_option_rows(text)
    if not groups:
        raise InputError("option chain contains no data rows")
    if len(groups) > 1:
        dates = ", ".join(str(d) for d in sorted(groups))
        raise InputError(
            f"multiple value dates in one chain ({dates}); use load_option_chains"
        )
    ((value_date, rows),) = groups.items()
    return _chain_from_rows(market_id, value_date, rows)


def load_option_chains(text: str, market_id: str) -> tuple[OptionChain, ...]:
    """Parse an option CSV that may span several value dates.

    Returns one validated chain per value date, in date order.
    """
    groups = _parse_option_rows(text)
    if not groups:
        raise InputError("option file contains no data rows")
    return tuple(
        _chain_from_rows(market_id, value_date, groups[value_date])
        for value_date in sorted(groups)
    )


def _format_price(price: Decimal | None) -> str:
    return "" if price is None else str(price)


def serialize_option_chain(chain: OptionChain) -> str:
    """Render a chain back to the CSV schema (round-trips exactly)."""
    return serialize_option_chains([chain])


def serialize_option_chains(chains: tuple[OptionChain, ...] | list[OptionChain]) -> str:
    """Render several chains (one market, many dates) into one CSV."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(OPTION_CHAIN_HEADER)
    for chain in chains:
        for s in chain.slices:
            for q in s.quotes:
                writer.writerow(
                    [
                        chain.value_date.isoformat(),
                        s.maturity.isoformat(),
                        str(q.strike),
                        _format_price(q.call_bid),
                        _format_price(q.call_ask),
                        _format_price(q.put_bid),
                        _format_price(q.put_ask),
                    ]
                )
    return out.getvalue()


def _parse_ois_rows(text: str) -> dict[tuple[date, str], list[tuple[int, OisQuote]]]:
    groups: dict[tuple[date, str], list[tuple[int, OisQuote]]] = {}
    for line_no, cells in _read_rows(text, OIS_HEADER):
        value_date = _parse_date(cells[0], "value_date", line_no)
        currency = cells[1].strip().upper()
        if not currency:
            raise InputError(f"line {line_no}: empty currency")
        try:
            months = parse_tenor(cells[2])
        except InputError as exc:
            raise InputError(f"line {line_no}: {exc}") from None
        rate = _parse_decimal(cells[3], "rate", line_no)
        key = (value_date, currency)
        quotes = groups.setdefault(key, [])
        if any(q.tenor_months == months for _, q in quotes):
            raise InputError(
                f"line {line_no}: duplicate tenor {cells[2].strip()} "
                f"for {currency} {value_date}"
            )
        quotes.append((line_no, OisQuote(tenor_months=months, rate=rate)))
    return groups


def parse_ois_quotes(text: str) -> OisQuoteSet:
    """Parse an OIS CSV holding a single (value date, currency) pair.

    Schema: ``value_date,currency,tenor,rate`` with tenors drawn from the
    conventional pillar set and rates as decimals per annum.
    """
    groups = _parse_ois_rows(text)
    if not groups:
        raise InputError("OIS file contains no data rows")
    if len(groups) > 1:
        keys = ", ".join(f"{c} {d}" for d, c in sorted(groups))
        raise InputError(
            f"multiple (value date, currency) groups ({keys}); use load_ois_quote_sets"
        )
    ((key, rows),) = groups.items()
    value_date, currency = key
    quotes = tuple(q for _, q in sorted(rows, key=lambda item: item[1].tenor_months))
    return OisQuoteSet(currency=currency, value_date=value_date, quotes=quotes)


def load_ois_quote_sets(text: str) -> tuple[OisQuoteSet, ...]:
    """Parse an OIS CSV spanning several value dates and/or currencies."""
    groups = _parse_ois_rows(text)
    if not groups:
        raise InputError("OIS file contains no data rows")
    sets = []
    for value_date, currency in sorted(groups):
        rows = groups[(value_date, currency)]
        quotes = tuple(
            q for _, q in sorted(rows, key=lambda item: item[1].tenor_months)
        )
        sets.append(
            OisQuoteSet(currency=currency, value_date=value_date, quotes=quotes)
        )
    return tuple(sets)


def serialize_ois_quote_sets(sets: tuple[OisQuoteSet, ...] | list[OisQuoteSet]) -> str:
    """Render OIS quote sets back to the CSV schema."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(OIS_HEADER)
    for quote_set in sets:
        for q in quote_set.quotes:
            writer.writerow(
                [
                    quote_set.value_date.isoformat(),
                    quote_set.currency,
                    format_tenor(q.tenor_months),
                    str(q.rate),
                ]
            )
    return out.getvalue()
