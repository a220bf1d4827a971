"""End-to-end analysis: filter quotes, fit discounts, regress spreads.

The stages are plain functions over immutable inputs so they compose in
scripts and in the service; the report writer at the end renders one
deterministic output tree.  All file content is assembled in memory
before anything touches disk, which keeps reruns byte-for-byte
reproducible and avoids half-written trees.
"""

from __future__ import annotations

import concurrent.futures
import io
from dataclasses import dataclass, field, replace
from datetime import date
from decimal import Decimal

from .errors import InputError
from .liquidity_filter import (
    DEFAULT_MAX_BID_ASK_RATIO,
    DEFAULT_MIN_STRIKES,
    DEFAULT_PENNY_THRESHOLD,
    FilterConfig,
    FilterReport,
    filter_chain,
)
from .market_data import OisQuoteSet, OptionChain, year_fraction
from .ois_curve import OisCurve, bootstrap_ois_curve
from .spread_analytics import (
    BASE_VARIANT,
    DEFAULT_MIN_TTM_DAYS,
    RobustnessVariant,
    SpreadObservation,
    SpreadRegression,
    StatSummary,
    build_observation,
    describe_dataset,
    filter_observations,
    fit_spread_panel,
    standard_robustness_variants,
)
from .synthetic_forward import (
    FLAG_CROSSED_FORWARD,
    ForwardBidAsk,
    ImpliedDiscountFit,
    fit_slice,
    forward_bid_ask,
)


@dataclass(frozen=True)
class RunConfig:
    """Knobs for one analysis run; defaults mirror the CLI defaults."""

    penny_threshold: Decimal = DEFAULT_PENNY_THRESHOLD
    max_bid_ask_ratio: Decimal = DEFAULT_MAX_BID_ASK_RATIO
    min_strikes: int = DEFAULT_MIN_STRIKES
    min_ttm_days: int = DEFAULT_MIN_TTM_DAYS
    weighted: bool = False
    # Explicit market-to-currency pairs; needed only when the OIS file
    # quotes more than one currency.
    market_currency: tuple[tuple[str, str], ...] = ()
    include_variants: bool = False
    workers: int = 1

    def as_variant(self) -> RobustnessVariant:
        return RobustnessVariant(
            name="base",
            penny_threshold=self.penny_threshold,
            max_bid_ask_ratio=self.max_bid_ask_ratio,
            min_strikes=self.min_strikes,
            min_ttm_days=self.min_ttm_days,
            weighted=self.weighted,
        )


@dataclass(frozen=True)
class MarketDataset:
    """Parsed inputs: option chains keyed by market, OIS quote sets."""

    chains_by_market: dict[str, tuple[OptionChain, ...]] = field(compare=False)
    ois_sets: tuple[OisQuoteSet, ...] = field(compare=False)


@dataclass(frozen=True)
class FitRecord:
    """One maturity's discount fit together with its forward quotes."""

    market_id: str
    fit: ImpliedDiscountFit
    forward_quotes: ForwardBidAsk | None

    @property
    def flags(self) -> tuple[str, ...]:
        flags = self.fit.flags
        if self.forward_quotes is not None and self.forward_quotes.crossed:
            flags = flags + (FLAG_CROSSED_FORWARD,)
        return flags


@dataclass(frozen=True)
class MarketResult:
    market_id: str
    currency: str
    filter_reports: tuple[FilterReport, ...]
    filtered_chains: tuple[OptionChain, ...] = field(compare=False)
    fits: tuple[FitRecord, ...]
    observations: tuple[SpreadObservation, ...]
    regression: SpreadRegression | None
    descriptives: tuple[StatSummary, ...]


@dataclass(frozen=True)
class VariantRow:
    market_id: str
    variant: RobustnessVariant
    regression: SpreadRegression | None
    # Intercept shift against the base run, basis points; None when
    # either side lacks a regression.
    deviation_bp: float | None


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    markets: tuple[MarketResult, ...]
    variants: tuple[VariantRow, ...] = ()

    def market(self, market_id: str) -> MarketResult:
        for m in self.markets:
            if m.market_id == market_id:
                return m
        raise InputError(f"no results for market {market_id!r}")


def resolve_currencies(
    dataset: MarketDataset, config: RunConfig
) -> dict[str, str]:
    """Decide which OIS currency discounts each market.

    An explicit mapping wins; otherwise a single-currency OIS file
    applies to every market, and anything else is ambiguous.
    """
    explicit = dict(config.market_currency)
    available = sorted({s.currency for s in dataset.ois_sets})
    out: dict[str, str] = {}
    for market_id in dataset.chains_by_market:
        if market_id in explicit:
            currency = explicit[market_id]
            if currency not in available:
                raise InputError(
                    f"market {market_id!r} mapped to currency {currency!r} "
                    f"but the OIS data only quotes {', '.join(available)}"
                )
            out[market_id] = currency
        elif len(available) == 1:
            out[market_id] = available[0]
        else:
            raise InputError(
                f"OIS data quotes several currencies ({', '.join(available)}); "
                f"map market {market_id!r} explicitly"
            )
    unknown = set(explicit) - set(dataset.chains_by_market)
    if unknown:
        raise InputError(
            f"currency mapping names unknown markets: {', '.join(sorted(unknown))}"
        )
    return out


def build_curves(
    ois_sets: tuple[OisQuoteSet, ...],
) -> dict[tuple[date, str], OisCurve]:
    curves: dict[tuple[date, str], OisCurve] = {}
    for quote_set in ois_sets:
        key = (quote_set.value_date, quote_set.currency)
        if key in curves:
            raise InputError(
                f"duplicate OIS quote set for {quote_set.currency} "
                f"{quote_set.value_date}"
            )
        curves[key] = bootstrap_ois_curve(quote_set)
    return curves


def _curve_for(
    curves: dict[tuple[date, str], OisCurve],
    value_date: date,
    currency: str,
    market_id: str,
) -> OisCurve:
    try:
        return curves[(value_date, currency)]
    except KeyError:
        raise InputError(
            f"no OIS quotes for {currency} on {value_date} "
            f"(needed by market {market_id!r})"
        ) from None


def analyze_market(
    market_id: str,
    chains: tuple[OptionChain, ...],
    curves: dict[tuple[date, str], OisCurve] | None,
    currency: str,
    variant: RobustnessVariant,
) -> MarketResult:
    """Run filter, fit, spread, and regression stages for one market.

    With `curves` set to None only the filter and fit stages run, which
    serves callers that have no rate data.  Maturities with fewer than
    two surviving strikes cannot pin down a line and are skipped at the
    fit stage (this only happens when the minimum-strikes filter is
    relaxed below its default).  Fits with a non-positive discount are
    reported but excluded from the spread panel.
    """
    filter_cfg = FilterConfig(
        penny_threshold=variant.penny_threshold,
        max_bid_ask_ratio=variant.max_bid_ask_ratio,
        min_strikes_per_maturity=variant.min_strikes,
    )
    filtered: list[OptionChain] = []
    reports: list[FilterReport] = []
    for chain in chains:
        kept, report = filter_chain(chain, filter_cfg)
        filtered.append(kept)
        reports.append(report)

    fits: list[FitRecord] = []
    observations: list[SpreadObservation] = []
    for chain in filtered:
        for slice_ in chain.slices:
            if len(slice_.quotes) < 2:
                continue
            fit = fit_slice(slice_, chain.value_date)
            quotes = None
            if fit.discount > 0.0:
                quotes = forward_bid_ask(slice_, fit.discount)
            fits.append(
                FitRecord(market_id=market_id, fit=fit, forward_quotes=quotes)
            )
            if fit.discount > 0.0 and curves is not None:
                curve = _curve_for(curves, chain.value_date, currency, market_id)
                try:
                    b_ois = curve.discount(slice_.maturity)
                except InputError as exc:
                    raise InputError(f"market {market_id!r}: {exc}") from None
                observations.append(
                    build_observation(
                        value_date=chain.value_date,
                        maturity=slice_.maturity,
                        b_bar=fit.discount,
                        b_ois=b_ois,
                    )
                )

    panel = filter_observations(observations, variant.min_ttm_days)
    regression = (
        fit_spread_panel(panel, weighted=variant.weighted) if len(panel) >= 3 else None
    )
    descriptives = (
        tuple(describe_dataset(filtered, panel))
        if any(c.n_quotes for c in filtered)
        else ()
    )
    return MarketResult(
        market_id=market_id,
        currency=currency,
        filter_reports=tuple(reports),
        filtered_chains=tuple(filtered),
        fits=tuple(fits),
        observations=tuple(panel),
        regression=regression,
        descriptives=descriptives,
    )


def run_analysis(dataset: MarketDataset, config: RunConfig) -> RunResult:
    """Base run over every market, plus robustness reruns if asked."""
    currencies = resolve_currencies(dataset, config)
    curves = build_curves(dataset.ois_sets)
    base_variant = config.as_variant()
    markets = tuple(
        analyze_market(
            market_id,
            dataset.chains_by_market[market_id],
            curves,
            currencies[market_id],
            base_variant,
        )
        for market_id in sorted(dataset.chains_by_market)
    )
    result = RunResult(config=config, markets=markets)
    if config.include_variants:
        result = replace(
            result, variants=_run_variants(dataset, config, curves, currencies, markets)
        )
    return result


def _run_variants(
    dataset: MarketDataset,
    config: RunConfig,
    curves: dict[tuple[date, str], OisCurve],
    currencies: dict[str, str],
    base_markets: tuple[MarketResult, ...],
) -> tuple[VariantRow, ...]:
    base_by_market = {m.market_id: m for m in base_markets}
    market_ids = sorted(dataset.chains_by_market)
    variants = standard_robustness_variants()
    tasks = [(market_id, variant) for market_id in market_ids for variant in variants]

    def run_one(task: tuple[str, RobustnessVariant]) -> MarketResult:
        market_id, variant = task
        return analyze_market(
            market_id,
            dataset.chains_by_market[market_id],
            curves,
            currencies[market_id],
            variant,
        )

    if config.workers > 1:
        with concurrent.futures.ThreadPoolExecutor(config.workers) as pool:
            outcomes = list(pool.map(run_one, tasks))
    else:
        outcomes = [run_one(task) for task in tasks]

    rows: list[VariantRow] = []
    for market_id in market_ids:
        base_reg = base_by_market[market_id].regression
        base_row = VariantRow(
            market_id=market_id,
            variant=BASE_VARIANT,
            regression=base_reg,
            deviation_bp=0.0 if base_reg is not None else None,
        )
        rows.append(base_row)
        for (task, outcome) in zip(tasks, outcomes):
            if task[0] != market_id:
                continue
            reg = outcome.regression
            deviation = None
            if reg is not None and base_reg is not None:
                deviation = reg.intercept_bp - base_reg.intercept_bp
            rows.append(
                VariantRow(
                    market_id=market_id,
                    variant=task[1],
                    regression=reg,
                    deviation_bp=deviation,
                )
            )
    return tuple(rows)


def max_intercept_deviation_bp(result: RunResult) -> float:
    """Largest absolute intercept shift across all variant reruns."""
    deviations = [
        abs(row.deviation_bp)
        for row in result.variants
        if row.deviation_bp is not None and row.variant.name != "base"
    ]
    if not deviations:
        raise InputError("run has no variant results to compare")
    return max(deviations)


# ---------------------------------------------------------------------------
# Report rendering.


def _csv(header: list[str], rows: list[list[str]]) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(row) + "\n")
    return out.getvalue()


def _f(value: float) -> str:
    # repr of a float is its shortest round-tripping decimal form.
    return repr(float(value))


def fits_csv(result: RunResult) -> str:
    header = [
        "market",
        "value_date",
        "maturity",
        "n_strikes",
        "b_bar",
        "forward",
        "r_squared",
        "f_bid",
        "f_ask",
        "flags",
    ]
    rows = []
    for market in result.markets:
        for record in market.fits:
            fit = record.fit
            quotes = record.forward_quotes
            rows.append(
                [
                    market.market_id,
                    fit.value_date.isoformat(),
                    fit.maturity.isoformat(),
                    str(fit.n_strikes),
                    _f(fit.discount),
                    _f(fit.forward),
                    _f(fit.r_squared),
                    _f(quotes.bid) if quotes is not None else "nan",
                    _f(quotes.ask) if quotes is not None else "nan",
                    "|".join(record.flags),
                ]
            )
    return _csv(header, rows)


def spread_panel_csv(result: RunResult) -> str:
    header = [
        "market",
        "value_date",
        "maturity",
        "ttm_years",
        "b_bar",
        "b_ois",
        "spread_bp",
    ]
    rows = []
    for market in result.markets:
        for obs in market.observations:
            rows.append(
                [
                    market.market_id,
                    obs.value_date.isoformat(),
                    obs.maturity.isoformat(),
                    _f(obs.ttm_years),
                    _f(obs.b_bar),
                    _f(obs.b_ois),
                    _f(obs.spread_bp),
                ]
            )
    return _csv(header, rows)


def parse_spread_panel(text: str) -> dict[str, list[SpreadObservation]]:
    """Read a spread panel CSV back into observations per market."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputError("spread panel is empty")
    header = [c.strip().lower() for c in lines[0].split(",")]
    expected = ["market", "value_date", "maturity", "ttm_years", "b_bar", "b_ois", "spread_bp"]
    if header != expected:
        raise InputError(
            f"spread panel header mismatch: expected {','.join(expected)}, "
            f"got {','.join(header)}"
        )
    out: dict[str, list[SpreadObservation]] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(expected):
            raise InputError(f"line {line_no}: expected {len(expected)} fields")
        try:
            market_id = cells[0].strip()
            obs = SpreadObservation(
                value_date=date.fromisoformat(cells[1].strip()),
                maturity=date.fromisoformat(cells[2].strip()),
                ttm_years=float(cells[3]),
                b_bar=float(cells[4]),
                b_ois=float(cells[5]),
                spread=float(cells[6]) / 1e4,
            )
        except (ValueError, InputError) as exc:
            raise InputError(f"line {line_no}: {exc}") from None
        if not market_id:
            raise InputError(f"line {line_no}: empty market id")
        out.setdefault(market_id, []).append(obs)
    return out


def filter_report_csv(result: RunResult) -> str:
    header = [
        "market",
        "value_date",
        "maturity",
        "input_quotes",
        "kept",
        "missing_side",
        "penny",
        "wide_spread",
        "maturity_dropped",
    ]
    rows = []
    for market in result.markets:
        for report in market.filter_reports:
            for counts in report.slices:
                rows.append(
                    [
                        market.market_id,
                        report.value_date.isoformat(),
                        counts.maturity.isoformat(),
                        str(counts.input_quotes),
                        str(counts.kept),
                        str(counts.missing_side),
                        str(counts.penny),
                        str(counts.wide_spread),
                        str(counts.maturity_dropped),
                    ]
                )
    return _csv(header, rows)


def _regression_cells(reg: SpreadRegression) -> list[str]:
    return [
        str(reg.n),
        f"{reg.intercept_bp:.1f}",
        _f(reg.p_intercept),
        f"{reg.slope_bp_per_year:.1f}",
        _f(reg.p_slope),
        f"{reg.intercept_no_slope_bp:.1f}",
        "true" if reg.weighted else "false",
    ]


def regression_csv(result: RunResult) -> str:
    header = [
        "market",
        "variant",
        "n",
        "intercept_bp",
        "p_intercept",
        "slope_bp_per_year",
        "p_slope",
        "intercept_no_slope_bp",
        "weighted",
    ]
    rows = []
    for market in result.markets:
        if market.regression is None:
            continue
        rows.append([market.market_id, "base"] + _regression_cells(market.regression))
    return _csv(header, rows)


def descriptive_stats_csv(result: RunResult) -> str:
    header = [
        "market",
        "metric",
        "count",
        "mean",
        "std",
        "min",
        "q05",
        "median",
        "q95",
        "max",
    ]
    rows = []
    for market in result.markets:
        for stat in market.descriptives:
            rows.append(
                [
                    market.market_id,
                    stat.metric,
                    str(stat.count),
                    f"{stat.mean:.2f}",
                    f"{stat.std:.2f}",
                    f"{stat.minimum:.2f}",
                    f"{stat.q05:.2f}",
                    f"{stat.median:.2f}",
                    f"{stat.q95:.2f}",
                    f"{stat.maximum:.2f}",
                ]
            )
    return _csv(header, rows)


def robustness_summary_csv(result: RunResult) -> str:
    header = [
        "market",
        "variant",
        "n",
        "intercept_bp",
        "p_intercept",
        "slope_bp_per_year",
        "p_slope",
        "intercept_no_slope_bp",
        "weighted",
        "deviation_bp",
    ]
    rows = []
    for row in result.variants:
        reg = row.regression
        if reg is None:
            cells = ["0", "", "", "", "", "", "true" if row.variant.weighted else "false", ""]
        else:
            cells = [
                str(reg.n),
                f"{reg.intercept_bp:.4f}",
                _f(reg.p_intercept),
                f"{reg.slope_bp_per_year:.4f}",
                _f(reg.p_slope),
                f"{reg.intercept_no_slope_bp:.4f}",
                "true" if reg.weighted else "false",
                "" if row.deviation_bp is None else f"{row.deviation_bp:.4f}",
            ]
        rows.append([row.market_id, row.variant.name] + cells)
    return _csv(header, rows)


def render_report_files(result: RunResult, include_plots: bool = True) -> dict[str, bytes]:
    """All output files as relative path -> bytes, ready to write."""
    files: dict[str, bytes] = {
        "fits.csv": fits_csv(result).encode(),
        "spread_panel.csv": spread_panel_csv(result).encode(),
        "filter_report.csv": filter_report_csv(result).encode(),
        "regression.csv": regression_csv(result).encode(),
        "descriptive_stats.csv": descriptive_stats_csv(result).encode(),
    }
    if result.variants:
        files["robustness_summary.csv"] = robustness_summary_csv(result).encode()
    if include_plots:
        from . import plots

        for market in result.markets:
            files.update(plots.market_plot_files(market))
    return files


def write_report(result: RunResult, out_dir, include_plots: bool = True) -> list[str]:
    """Write the report tree; returns relative paths written, sorted.

    Stale files from a previous run of this writer are removed first so
    the directory always reflects exactly one run.
    """
    from pathlib import Path

    files = render_report_files(result, include_plots=include_plots)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _remove_stale(out, files)
    for rel in sorted(files):
        target = out / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(files[rel])
    return sorted(files)


_OWNED_TOPLEVEL = (
    "fits.csv",
    "spread_panel.csv",
    "filter_report.csv",
    "regression.csv",
    "descriptive_stats.csv",
    "robustness_summary.csv",
)


def _remove_stale(out, files: dict[str, bytes]) -> None:
    for name in _OWNED_TOPLEVEL:
        if name not in files and (out / name).exists():
            (out / name).unlink()
    plots_dir = out / "plots"
    if plots_dir.is_dir():
        for existing in plots_dir.iterdir():
            rel = f"plots/{existing.name}"
            if rel not in files and existing.is_file():
                existing.unlink()
