"""Command-line entry points.

Thin orchestration over the library: each subcommand parses files, runs
the corresponding stage, and writes CSVs (to --out when given, stdout
otherwise).  Exit codes: 0 on success, 2 for bad input, 3 when the
numbers cannot be computed from valid input.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import __version__
from .errors import InputError, NumericalError
from .liquidity_filter import (
    DEFAULT_MAX_BID_ASK_RATIO,
    DEFAULT_MIN_STRIKES,
    DEFAULT_PENNY_THRESHOLD,
)
from .market_data import load_ois_quote_sets, load_option_chains
from .pipeline import (
    MarketDataset,
    MarketResult,
    RunConfig,
    RunResult,
    analyze_market,
    fits_csv,
    filter_report_csv,
    parse_spread_panel,
    regression_csv,
    robustness_summary_csv,
    run_analysis,
    spread_panel_csv,
    write_report,
)
from .spread_analytics import DEFAULT_MIN_TTM_DAYS, fit_spread_panel
from .synthetic import SyntheticConfig, SyntheticMarket, generate_dataset, write_dataset


def _decimal_arg(text: str) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a decimal number: {text!r}") from None
    if not value.is_finite():
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return value


def _date_arg(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from None


def _market_spec(text: str) -> SyntheticMarket:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise argparse.ArgumentTypeError(
            f"expected ID:CCY:SPREAD_BP[:SLOPE_BP], got {text!r}"
        )
    try:
        spread = float(parts[2])
        slope = float(parts[3]) if len(parts) == 4 else 0.0
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"spread fields must be numeric in {text!r}"
        ) from None
    return SyntheticMarket(
        market_id=parts[0],
        currency=parts[1],
        spread_bp=spread,
        spread_slope_bp_per_year=slope,
    )


def _mapping_arg(text: str) -> tuple[str, str]:
    market, sep, currency = text.partition("=")
    if not sep or not market or not currency:
        raise argparse.ArgumentTypeError(
            f"expected MARKET=CCY, got {text!r}"
        )
    return market, currency.upper()


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _market_id_for(path: Path) -> str:
    stem = path.stem
    prefix = "options_"
    if stem.startswith(prefix) and len(stem) > len(prefix):
        return stem[len(prefix):]
    return stem


def _load_chains(option_paths: list[str]) -> dict[str, tuple]:
    chains_by_market: dict[str, tuple] = {}
    for raw in option_paths:
        path = Path(raw)
        market_id = _market_id_for(path)
        if market_id in chains_by_market:
            raise InputError(
                f"two options files map to market id {market_id!r}; rename one"
            )
        chains_by_market[market_id] = load_option_chains(_read_text(raw), market_id)
    return chains_by_market


def _load_dataset(args: argparse.Namespace) -> MarketDataset:
    return MarketDataset(
        chains_by_market=_load_chains(args.options),
        ois_sets=load_ois_quote_sets(_read_text(args.ois)),
    )


def _run_config(args: argparse.Namespace, include_variants: bool = False) -> RunConfig:
    return RunConfig(
        penny_threshold=args.penny_threshold,
        max_bid_ask_ratio=args.max_spread_ratio,
        min_strikes=args.min_strikes,
        min_ttm_days=getattr(args, "min_ttm_days", DEFAULT_MIN_TTM_DAYS),
        weighted=getattr(args, "weighted", False),
        market_currency=tuple(getattr(args, "market_currency", None) or ()),
        include_variants=include_variants,
        workers=getattr(args, "workers", 1),
    )


def _emit(text: str, out_dir: str | None, filename: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / filename).write_text(text, newline="")
    print(f"wrote {out / filename}")


def _cmd_fit(args: argparse.Namespace) -> int:
    chains_by_market = _load_chains(args.options)
    config = _run_config(args)
    variant = config.as_variant()
    markets = tuple(
        analyze_market(market_id, chains_by_market[market_id], None, "", variant)
        for market_id in sorted(chains_by_market)
    )
    result = RunResult(config=config, markets=markets)
    if args.out is None:
        sys.stdout.write(fits_csv(result))
    else:
        _emit(fits_csv(result), args.out, "fits.csv")
        _emit(filter_report_csv(result), args.out, "filter_report.csv")
    return 0


def _cmd_spreads(args: argparse.Namespace) -> int:
    result = run_analysis(_load_dataset(args), _run_config(args))
    _emit(spread_panel_csv(result), args.out, "spread_panel.csv")
    return 0


def _cmd_regress(args: argparse.Namespace) -> int:
    panel = parse_spread_panel(_read_text(args.panel))
    markets = []
    for market_id in sorted(panel):
        regression = fit_spread_panel(panel[market_id], weighted=args.weighted)
        markets.append(
            MarketResult(
                market_id=market_id,
                currency="",
                filter_reports=(),
                filtered_chains=(),
                fits=(),
                observations=tuple(panel[market_id]),
                regression=regression,
                descriptives=(),
            )
        )
    result = RunResult(config=RunConfig(weighted=args.weighted), markets=tuple(markets))
    _emit(regression_csv(result), args.out, "regression.csv")
    return 0


def _cmd_robustness(args: argparse.Namespace) -> int:
    result = run_analysis(_load_dataset(args), _run_config(args, include_variants=True))
    _emit(robustness_summary_csv(result), args.out, "robustness_summary.csv")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    result = run_analysis(
        _load_dataset(args), _run_config(args, include_variants=args.variants)
    )
    written = write_report(result, args.out, include_plots=not args.no_plots)
    for rel in written:
        print(f"wrote {Path(args.out) / rel}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    config = SyntheticConfig(
        start_date=args.start_date,
        n_dates=args.dates,
        markets=tuple(args.market),
        n_strikes=args.strikes,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    created = write_dataset(generate_dataset(config), args.out)
    for path in created:
        print(f"wrote {path}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def _add_filter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--penny-threshold",
        type=_decimal_arg,
        default=DEFAULT_PENNY_THRESHOLD,
        help="drop quotes whose call or put mid is below this price "
        "(default %(default)s)",
    )
    parser.add_argument(
        "--max-spread-ratio",
        type=_decimal_arg,
        default=DEFAULT_MAX_BID_ASK_RATIO,
        help="drop quotes whose (ask-bid)/ask exceeds this on either side "
        "(default %(default)s)",
    )
    parser.add_argument(
        "--min-strikes",
        type=int,
        default=DEFAULT_MIN_STRIKES,
        help="drop maturities with fewer surviving strikes (default %(default)s)",
    )


def _add_analysis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--min-ttm-days",
        type=int,
        default=DEFAULT_MIN_TTM_DAYS,
        help="exclude maturities this close to the value date from the "
        "spread panel (default %(default)s)",
    )
    parser.add_argument(
        "--weighted",
        action="store_true",
        help="reweight the panel regression by inverse squared residuals",
    )
    parser.add_argument(
        "--market-currency",
        action="append",
        type=_mapping_arg,
        metavar="MARKET=CCY",
        help="discount a market with this OIS currency; repeatable, only "
        "needed when the OIS file quotes several currencies",
    )


def _add_options_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--options",
        nargs="+",
        required=True,
        metavar="PATH",
        help="option chain CSVs, one market each; the market id is the "
        "file stem (a leading 'options_' is stripped)",
    )


def _add_ois_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--ois", required=True, metavar="PATH", help="OIS quotes CSV"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fundingspread",
        description="Implied discount factors and funding spreads from "
        "listed option quotes",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser(
        "fit", help="filter chains and fit per-maturity implied discounts"
    )
    _add_options_flag(p_fit)
    _add_filter_flags(p_fit)
    p_fit.add_argument("--out", help="directory for fits.csv and filter_report.csv")
    p_fit.set_defaults(func=_cmd_fit)

    p_spreads = sub.add_parser(
        "spreads", help="build the funding-spread panel against the OIS curve"
    )
    _add_options_flag(p_spreads)
    _add_ois_flag(p_spreads)
    _add_filter_flags(p_spreads)
    _add_analysis_flags(p_spreads)
    p_spreads.add_argument("--out", help="directory for spread_panel.csv")
    p_spreads.set_defaults(func=_cmd_spreads)

    p_regress = sub.add_parser(
        "regress", help="regress an existing spread panel on time to maturity"
    )
    p_regress.add_argument(
        "--panel", required=True, metavar="PATH", help="spread panel CSV"
    )
    p_regress.add_argument(
        "--weighted",
        action="store_true",
        help="reweight by inverse squared residuals",
    )
    p_regress.add_argument("--out", help="directory for regression.csv")
    p_regress.set_defaults(func=_cmd_regress)

    p_rob = sub.add_parser(
        "robustness", help="rerun the analysis across the perturbation grid"
    )
    _add_options_flag(p_rob)
    _add_ois_flag(p_rob)
    _add_filter_flags(p_rob)
    _add_analysis_flags(p_rob)
    p_rob.add_argument(
        "--workers", type=int, default=1, help="parallel reruns (default 1)"
    )
    p_rob.add_argument("--out", help="directory for robustness_summary.csv")
    p_rob.set_defaults(func=_cmd_robustness)

    p_report = sub.add_parser(
        "report", help="run everything and write the full report tree"
    )
    _add_options_flag(p_report)
    _add_ois_flag(p_report)
    _add_filter_flags(p_report)
    _add_analysis_flags(p_report)
    p_report.add_argument(
        "--variants",
        action="store_true",
        help="include the robustness perturbation grid",
    )
    p_report.add_argument(
        "--workers", type=int, default=1, help="parallel variant reruns (default 1)"
    )
    p_report.add_argument(
        "--no-plots", action="store_true", help="skip SVG plot generation"
    )
    p_report.add_argument("--out", required=True, help="report directory")
    p_report.set_defaults(func=_cmd_report)

    p_synth = sub.add_parser(
        "synth", help="generate a synthetic dataset with a known spread"
    )
    p_synth.add_argument(
        "--start-date", type=_date_arg, default=date(2023, 1, 2)
    )
    p_synth.add_argument("--dates", type=int, default=60, help="number of value dates")
    p_synth.add_argument("--strikes", type=int, default=25, help="strikes per maturity")
    p_synth.add_argument(
        "--sigma", type=float, default=0.01, help="price noise standard deviation"
    )
    p_synth.add_argument("--seed", type=int, default=0, help="random seed")
    p_synth.add_argument(
        "--market",
        action="append",
        type=_market_spec,
        metavar="ID:CCY:SPREAD_BP[:SLOPE_BP]",
        help="synthetic market; repeatable (default: one 34 bp USD market "
        "and one 0 bp EUR market)",
    )
    p_synth.add_argument("--out", required=True, help="dataset directory")
    p_synth.set_defaults(func=_cmd_synth)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


_DEFAULT_MARKETS = (
    SyntheticMarket(market_id="USIDX", currency="USD", spread_bp=34.0),
    SyntheticMarket(
        market_id="EUIDX", currency="EUR", spread_bp=0.0, initial_spot=3600.0
    ),
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "market", None) is None and args.command == "synth":
        args.market = list(_DEFAULT_MARKETS)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
