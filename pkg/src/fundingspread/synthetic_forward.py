"""Synthetic forwards and the implied discount factor.

A long call plus a short put at the same strike replicates a forward
purchase, so across strikes the mid value of that package is linear in
the strike: its slope is minus the discount factor the market is using,
and the strike at which it vanishes is the forward.  Fitting that line by
least squares recovers both without any option-pricing model.

Per-strike packages use the conservative side pairing: the bid is built
from selling the call side at its bid and buying the put at its ask, and
vice versa for the ask.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from decimal import Decimal

import numpy as np

from .errors import InputError, NumericalError
from .market_data import MaturitySlice

# Quality-flag tokens carried on fits (never exceptions: robustness
# sweeps must be able to see pathological slices).
FLAG_NONPOSITIVE_DISCOUNT = "nonpositive_discount"
FLAG_HIGH_DISCOUNT = "high_discount"
FLAG_CROSSED_FORWARD = "crossed_forward"

DISCOUNT_CAP = 1.2


@dataclass(frozen=True)
class SyntheticForwardQuote:
    """Bid/ask/mid value of the long-call short-put package at one strike."""

    strike: Decimal
    bid: Decimal
    ask: Decimal
    mid: Decimal

    def __post_init__(self) -> None:
        if not self.bid <= self.mid <= self.ask:
            raise InputError(
                f"synthetic forward quote not ordered at strike {self.strike}: "
                f"{self.bid} / {self.mid} / {self.ask}"
            )
        if self.mid * 2 != self.bid + self.ask:
            raise InputError(
                f"mid must be the exact average of bid and ask at strike {self.strike}"
            )


@dataclass(frozen=True)
class ImpliedDiscountFit:
    """Least-squares estimate of the discount factor and forward for one expiry.

    `residuals` holds (strike, residual) pairs of the strike-vs-package
    regression; `flags` marks quality issues (non-positive or implausibly
    large discount) without failing the fit.
    """

    value_date: date
    maturity: date
    discount: float
    forward: float
    r_squared: float
    residuals: tuple[tuple[float, float], ...]
    n_strikes: int
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ForwardBidAsk:
    """Tightest forward quote implied by the per-strike packages."""

    bid: float
    ask: float
    crossed: bool


def synthetic_forward_quotes(
    slice_: MaturitySlice,
) -> tuple[SyntheticForwardQuote, ...]:
    """Build the per-strike synthetic forward quotes for one expiry.

    Every quote must have all four sides; incomplete quotes are a
    programming error here because the liquidity filter removes them.
    """
    out = []
    for q in slice_.quotes:
        if not q.has_all_sides:
            raise InputError(
                f"quote at strike {q.strike} is missing a side; "
                f"filter the chain before building synthetic forwards"
            )
        bid = q.call_bid - q.put_ask
        ask = q.call_ask - q.put_bid
        out.append(
            SyntheticForwardQuote(
                strike=q.strike, bid=bid, ask=ask, mid=(bid + ask) / 2
            )
        )
    return tuple(out)


def fit_implied_discount(
    strikes: "np.typing.ArrayLike",
    mids: "np.typing.ArrayLike",
    value_date: date,
    maturity: date,
) -> ImpliedDiscountFit:
    """Fit the implied discount factor and forward by ordinary least squares.

    Regressing the package mid on the strike gives slope ``-discount``
    and intercept ``discount * forward``; the forward estimate is
    intercept / discount.  Residuals are the centered-regression
    residuals, so they sum to zero up to rounding.
    """
    k = np.asarray(strikes, dtype=float)
    g = np.asarray(mids, dtype=float)
    if k.ndim != 1 or k.shape != g.shape:
        raise InputError("strikes and mids must be 1-d sequences of equal length")
    n = k.size
    if n < 2:
        raise NumericalError(f"need at least 2 strikes to fit a discount, got {n}")
    k_hat = k.mean()
    g_hat = g.mean()
    dk = k - k_hat
    dg = g - g_hat
    den = float(dk @ dk)
    if den == 0.0:
        raise NumericalError("degenerate regression: zero strike variance")
    slope = float(dk @ dg) / den
    discount = -slope
    flags: list[str] = []
    if discount <= 0.0:
        flags.append(FLAG_NONPOSITIVE_DISCOUNT)
        forward = float("nan") if discount == 0.0 else g_hat / discount + k_hat
    else:
        forward = g_hat / discount + k_hat
        if discount > DISCOUNT_CAP:
            flags.append(FLAG_HIGH_DISCOUNT)
    residuals = dg - slope * dk
    ssr = float(residuals @ residuals)
    sst = float(dg @ dg)
    if sst > 0.0:
        r_squared = 1.0 - ssr / sst
    else:
        r_squared = 1.0 if ssr == 0.0 else 0.0
    return ImpliedDiscountFit(
        value_date=value_date,
        maturity=maturity,
        discount=discount,
        forward=forward,
        r_squared=r_squared,
        residuals=tuple(zip(k.tolist(), residuals.tolist())),
        n_strikes=n,
        flags=tuple(flags),
    )


def fit_slice(
    slice_: MaturitySlice, value_date: date
) -> ImpliedDiscountFit:
    """Convenience wrapper: build package mids from a slice and fit them."""
    quotes = synthetic_forward_quotes(slice_)
    return fit_implied_discount(
        [float(q.strike) for q in quotes],
        [float(q.mid) for q in quotes],
        value_date,
        slice_.maturity,
    )


def forward_bid_ask(slice_: MaturitySlice, discount: float) -> ForwardBidAsk:
    """Aggregate per-strike forward quotes into the tightest bid/ask.

    Each strike implies a forward interval [package_bid/discount + K,
    package_ask/discount + K]; the market-wide bid is the highest of the
    bids and the ask the lowest of the asks.  A crossed result is
    returned as-is with the `crossed` flag set.
    """
    if not slice_.quotes:
        raise InputError("cannot build a forward quote from an empty slice")
    if discount <= 0.0:
        raise InputError(f"discount must be positive, got {discount}")
    quotes = synthetic_forward_quotes(slice_)
    bids = [float(q.bid) / discount + float(q.strike) for q in quotes]
    asks = [float(q.ask) / discount + float(q.strike) for q in quotes]
    bid = max(bids)
    ask = min(asks)
    return ForwardBidAsk(bid=bid, ask=ask, crossed=bid > ask)


def per_strike_forwards(
    slice_: MaturitySlice, discount: float
) -> tuple[tuple[float, float, float, float], ...]:
    """(strike, forward bid, forward ask, forward mid) rows for plotting."""
    if discount <= 0.0:
        raise InputError(f"discount must be positive, got {discount}")
    rows = []
    for q in synthetic_forward_quotes(slice_):
        strike = float(q.strike)
        rows.append(
            (
                strike,
                float(q.bid) / discount + strike,
                float(q.ask) / discount + strike,
                float(q.mid) / discount + strike,
            )
        )
    return tuple(rows)
