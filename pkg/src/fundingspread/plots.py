"""Deterministic SVG plots with CSV companions holding the plotted data.

Every figure is rendered through the Agg backend with a fixed hash salt
and without timestamps, so rerunning a report produces byte-identical
files.  Each plot ships next to a CSV of exactly the numbers drawn,
which is the machine-readable form downstream checks should use.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .market_data import MaturitySlice, OptionChain, year_fraction
from .pipeline import FitRecord, MarketResult
from .synthetic_forward import per_strike_forwards

_FIGSIZE = (6.4, 4.8)
_DPI = 100

plt.rcParams["svg.hashsalt"] = "fundingspread"


def _f(value: float) -> str:
    return repr(float(value))


def _csv(header: list[str], rows: list[list[str]]) -> bytes:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return ("\n".join(lines) + "\n").encode()


def _render(fig) -> bytes:
    buf = io.BytesIO()
    # A fixed metadata date is what keeps the SVG stable across runs.
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def _representative_slice(
    market: MarketResult,
) -> tuple[OptionChain, MaturitySlice, FitRecord] | None:
    """Pick one maturity to illustrate: the median date, nearest to one year.

    Ties between equally near maturities go to the later one.
    """
    fits_by_key = {(r.fit.value_date, r.fit.maturity): r for r in market.fits}
    chains = [c for c in market.filtered_chains if c.slices]
    if not chains:
        return None
    chain = chains[len(chains) // 2]
    best: tuple[float, float, MaturitySlice, FitRecord] | None = None
    for slice_ in chain.slices:
        record = fits_by_key.get((chain.value_date, slice_.maturity))
        if record is None or record.forward_quotes is None:
            continue
        ttm = year_fraction(chain.value_date, slice_.maturity)
        key = (abs(ttm - 1.0), -ttm)
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], slice_, record)
    if best is None:
        return None
    return chain, best[2], best[3]


def forward_scatter_files(
    market: MarketResult,
) -> tuple[bytes, bytes] | None:
    """Per-strike forward mids against strike, with the fitted forward."""
    picked = _representative_slice(market)
    if picked is None:
        return None
    chain, slice_, record = picked
    rows = per_strike_forwards(slice_, record.fit.discount)
    fitted = record.fit.forward
    csv_rows = [
        [_f(strike), _f(mid), _f(fitted)] for strike, _, _, mid in rows
    ]
    data = _csv(["strike", "forward_mid", "fitted_forward"], csv_rows)

    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    strikes = [r[0] for r in rows]
    mids = [r[3] for r in rows]
    ax.plot(strikes, mids, "o", markersize=3, label="per-strike forward mid")
    ax.axhline(fitted, linewidth=1.0, color="C1", label="fitted forward")
    ax.set_xlabel("strike")
    ax.set_ylabel("implied forward")
    ax.set_title(
        f"{market.market_id}  {chain.value_date.isoformat()}  "
        f"expiry {slice_.maturity.isoformat()}"
    )
    ax.legend(loc="best")
    return data, _render(fig)


def forward_bid_ask_files(
    market: MarketResult,
) -> tuple[bytes, bytes] | None:
    """Per-strike forward bid/ask bands plus the aggregated quote."""
    picked = _representative_slice(market)
    if picked is None:
        return None
    chain, slice_, record = picked
    rows = per_strike_forwards(slice_, record.fit.discount)
    quotes = record.forward_quotes
    assert quotes is not None  # _representative_slice guarantees it
    csv_rows = [
        [_f(strike), _f(bid), _f(ask), _f(quotes.bid), _f(quotes.ask)]
        for strike, bid, ask, _ in rows
    ]
    data = _csv(
        ["strike", "forward_bid", "forward_ask", "aggregate_bid", "aggregate_ask"],
        csv_rows,
    )

    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    strikes = [r[0] for r in rows]
    ax.plot(strikes, [r[1] for r in rows], linewidth=0.8, label="forward bid")
    ax.plot(strikes, [r[2] for r in rows], linewidth=0.8, label="forward ask")
    ax.axhspan(quotes.bid, quotes.ask, alpha=0.2, color="C2", label="aggregate")
    ax.set_xlabel("strike")
    ax.set_ylabel("implied forward")
    ax.set_title(
        f"{market.market_id}  {chain.value_date.isoformat()}  "
        f"expiry {slice_.maturity.isoformat()}"
    )
    ax.legend(loc="best")
    return data, _render(fig)


def spread_cloud_files(market: MarketResult) -> tuple[bytes, bytes] | None:
    """The spread panel against maturity, with the regression line."""
    if not market.observations:
        return None
    reg = market.regression
    csv_rows = []
    for obs in market.observations:
        fitted = ""
        if reg is not None:
            fitted = _f(reg.intercept_bp + reg.slope_bp_per_year * obs.ttm_years)
        csv_rows.append(
            [
                obs.value_date.isoformat(),
                obs.maturity.isoformat(),
                _f(obs.ttm_years),
                _f(obs.spread_bp),
                fitted,
            ]
        )
    data = _csv(
        ["value_date", "maturity", "ttm_years", "spread_bp", "fitted_bp"], csv_rows
    )

    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    x = [o.ttm_years for o in market.observations]
    y = [o.spread_bp for o in market.observations]
    ax.plot(x, y, ".", markersize=2, alpha=0.6, label="observed spread")
    if reg is not None:
        lo, hi = min(x), max(x)
        ax.plot(
            [lo, hi],
            [
                reg.intercept_bp + reg.slope_bp_per_year * lo,
                reg.intercept_bp + reg.slope_bp_per_year * hi,
            ],
            color="C1",
            linewidth=1.2,
            label="fitted line",
        )
    ax.set_xlabel("time to maturity (years)")
    ax.set_ylabel("funding spread (bp)")
    ax.set_title(f"{market.market_id}  funding spread panel")
    ax.legend(loc="best")
    return data, _render(fig)


def market_plot_files(market: MarketResult) -> dict[str, bytes]:
    """All plot outputs for one market as relative path -> bytes."""
    out: dict[str, bytes] = {}
    scatter = forward_scatter_files(market)
    if scatter is not None:
        out[f"plots/forward_scatter_{market.market_id}.csv"] = scatter[0]
        out[f"plots/forward_scatter_{market.market_id}.svg"] = scatter[1]
    band = forward_bid_ask_files(market)
    if band is not None:
        out[f"plots/forward_bid_ask_{market.market_id}.csv"] = band[0]
        out[f"plots/forward_bid_ask_{market.market_id}.svg"] = band[1]
    cloud = spread_cloud_files(market)
    if cloud is not None:
        out[f"plots/spread_cloud_{market.market_id}.csv"] = cloud[0]
        out[f"plots/spread_cloud_{market.market_id}.svg"] = cloud[1]
    return out
