"""HTTP facade over the analysis stages.

Each endpoint accepts raw CSV payloads in the same schemas the CLI
reads, runs one stage, and returns structured JSON.  Bad input maps to
400, numerically impossible requests to 422, so callers can tell a
malformed file from a quote set that defeats the math.
"""

from __future__ import annotations

import math
from datetime import date
from decimal import Decimal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .errors import InputError, NumericalError
from .liquidity_filter import (
    DEFAULT_MAX_BID_ASK_RATIO,
    DEFAULT_MIN_STRIKES,
    DEFAULT_PENNY_THRESHOLD,
    FilterConfig,
    filter_chain,
)
from .market_data import (
    load_ois_quote_sets,
    load_option_chains,
    parse_ois_quotes,
    serialize_option_chain,
)
from .ois_curve import bootstrap_ois_curve
from .pipeline import (
    MarketDataset,
    RunConfig,
    max_intercept_deviation_bp,
    run_analysis,
)
from .spread_analytics import DEFAULT_MIN_TTM_DAYS, SpreadRegression


def _clean(value: float) -> float | None:
    # NaN is not valid JSON; absent is the honest encoding.
    return None if math.isnan(value) else value


class FilterParams(BaseModel):
    penny_threshold: Decimal = DEFAULT_PENNY_THRESHOLD
    max_bid_ask_ratio: Decimal = DEFAULT_MAX_BID_ASK_RATIO
    min_strikes: int = DEFAULT_MIN_STRIKES


class FilterRequest(FilterParams):
    options_csv: str
    market_id: str = "MKT"


class SliceCounts(BaseModel):
    maturity: date
    input_quotes: int
    kept: int
    missing_side: int
    penny: int
    wide_spread: int
    maturity_dropped: int


class ChainFilterResult(BaseModel):
    value_date: date
    filtered_csv: str
    slices: list[SliceCounts]
    total_kept: int


class FilterResponse(BaseModel):
    market_id: str
    chains: list[ChainFilterResult]


class FitRequest(FilterParams):
    options_csv: str
    market_id: str = "MKT"


class FitRow(BaseModel):
    value_date: date
    maturity: date
    n_strikes: int
    b_bar: float
    forward: float | None
    r_squared: float
    f_bid: float | None
    f_ask: float | None
    flags: list[str]


class FitResponse(BaseModel):
    market_id: str
    fits: list[FitRow]


class CurveRequest(BaseModel):
    ois_csv: str


class CurvePillar(BaseModel):
    date: date
    discount: float


class CurveResponse(BaseModel):
    currency: str
    value_date: date
    pillars: list[CurvePillar]


class DiscountRequest(BaseModel):
    ois_csv: str
    dates: list[date]


class DiscountResponse(BaseModel):
    currency: str
    value_date: date
    discounts: list[float]


class AnalysisParams(FilterParams):
    min_ttm_days: int = DEFAULT_MIN_TTM_DAYS
    weighted: bool = False
    currency: str | None = None


class SpreadsRequest(AnalysisParams):
    options_csv: str
    ois_csv: str
    market_id: str = "MKT"


class SpreadRow(BaseModel):
    value_date: date
    maturity: date
    ttm_years: float
    b_bar: float
    b_ois: float
    spread_bp: float


class SpreadsResponse(BaseModel):
    market_id: str
    observations: list[SpreadRow]


class RegressionRequest(SpreadsRequest):
    pass


class RegressionOut(BaseModel):
    n: int
    weighted: bool
    intercept_bp: float
    slope_bp_per_year: float
    intercept_no_slope_bp: float
    se_intercept_bp: float
    se_slope_bp_per_year: float
    p_intercept: float
    p_slope: float
    p_intercept_no_slope: float
    r_squared: float
    perfect_fit: bool


class RegressionResponse(BaseModel):
    market_id: str
    regression: RegressionOut


class RobustnessRequest(SpreadsRequest):
    pass


class VariantOut(BaseModel):
    variant: str
    n: int | None
    intercept_bp: float | None
    p_intercept: float | None
    slope_bp_per_year: float | None
    p_slope: float | None
    weighted: bool
    deviation_bp: float | None


class RobustnessResponse(BaseModel):
    market_id: str
    rows: list[VariantOut]
    max_abs_deviation_bp: float


def _run_config(params: AnalysisParams, market_id: str, include_variants: bool = False) -> RunConfig:
    mapping: tuple[tuple[str, str], ...] = ()
    if params.currency is not None:
        mapping = ((market_id, params.currency),)
    return RunConfig(
        penny_threshold=params.penny_threshold,
        max_bid_ask_ratio=params.max_bid_ask_ratio,
        min_strikes=params.min_strikes,
        min_ttm_days=params.min_ttm_days,
        weighted=params.weighted,
        market_currency=mapping,
        include_variants=include_variants,
    )


def _analyze(req: SpreadsRequest, include_variants: bool = False):
    chains = load_option_chains(req.options_csv, req.market_id)
    ois_sets = load_ois_quote_sets(req.ois_csv)
    dataset = MarketDataset(
        chains_by_market={req.market_id: chains}, ois_sets=ois_sets
    )
    result = run_analysis(dataset, _run_config(req, req.market_id, include_variants))
    return result


def _regression_out(reg: SpreadRegression) -> RegressionOut:
    return RegressionOut(
        n=reg.n,
        weighted=reg.weighted,
        intercept_bp=reg.intercept_bp,
        slope_bp_per_year=reg.slope_bp_per_year,
        intercept_no_slope_bp=reg.intercept_no_slope_bp,
        se_intercept_bp=reg.se_intercept * 1e4,
        se_slope_bp_per_year=reg.se_slope * 1e4,
        p_intercept=reg.p_intercept,
        p_slope=reg.p_slope,
        p_intercept_no_slope=reg.p_intercept_no_slope,
        r_squared=reg.r_squared,
        perfect_fit=reg.perfect_fit,
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="fundingspread",
        version=__version__,
        description=(
            "Implied discount factors from option chains and the funding "
            "spread they carry over the OIS curve"
        ),
    )

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NumericalError)
    async def _numerical_error(
        request: Request, exc: NumericalError
    ) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health")
    async def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.post("/filter", response_model=FilterResponse)
    async def filter_endpoint(req: FilterRequest) -> FilterResponse:
        cfg = FilterConfig(
            penny_threshold=req.penny_threshold,
            max_bid_ask_ratio=req.max_bid_ask_ratio,
            min_strikes_per_maturity=req.min_strikes,
        )
        chains = load_option_chains(req.options_csv, req.market_id)
        results = []
        for chain in chains:
            kept, report = filter_chain(chain, cfg)
            results.append(
                ChainFilterResult(
                    value_date=chain.value_date,
                    filtered_csv=serialize_option_chain(kept),
                    slices=[
                        SliceCounts(
                            maturity=c.maturity,
                            input_quotes=c.input_quotes,
                            kept=c.kept,
                            missing_side=c.missing_side,
                            penny=c.penny,
                            wide_spread=c.wide_spread,
                            maturity_dropped=c.maturity_dropped,
                        )
                        for c in report.slices
                    ],
                    total_kept=report.total_kept,
                )
            )
        return FilterResponse(market_id=req.market_id, chains=results)

    @app.post("/fit", response_model=FitResponse)
    async def fit_endpoint(req: FitRequest) -> FitResponse:
        from .synthetic_forward import fit_slice, forward_bid_ask

        chains = load_option_chains(req.options_csv, req.market_id)
        cfg = FilterConfig(
            penny_threshold=req.penny_threshold,
            max_bid_ask_ratio=req.max_bid_ask_ratio,
            min_strikes_per_maturity=req.min_strikes,
        )
        rows: list[FitRow] = []
        for chain in chains:
            kept, _ = filter_chain(chain, cfg)
            for slice_ in kept.slices:
                if len(slice_.quotes) < 2:
                    continue
                fit = fit_slice(slice_, chain.value_date)
                quotes = (
                    forward_bid_ask(slice_, fit.discount)
                    if fit.discount > 0.0
                    else None
                )
                flags = list(fit.flags)
                if quotes is not None and quotes.crossed:
                    flags.append("crossed_forward")
                rows.append(
                    FitRow(
                        value_date=chain.value_date,
                        maturity=slice_.maturity,
                        n_strikes=fit.n_strikes,
                        b_bar=fit.discount,
                        forward=_clean(fit.forward),
                        r_squared=fit.r_squared,
                        f_bid=quotes.bid if quotes is not None else None,
                        f_ask=quotes.ask if quotes is not None else None,
                        flags=flags,
                    )
                )
        return FitResponse(market_id=req.market_id, fits=rows)

    @app.post("/curve/bootstrap", response_model=CurveResponse)
    async def bootstrap_endpoint(req: CurveRequest) -> CurveResponse:
        quotes = parse_ois_quotes(req.ois_csv)
        curve = bootstrap_ois_curve(quotes)
        return CurveResponse(
            currency=quotes.currency,
            value_date=curve.value_date,
            pillars=[
                CurvePillar(date=d, discount=b) for d, b in curve.pillars
            ],
        )

    @app.post("/curve/discount", response_model=DiscountResponse)
    async def discount_endpoint(req: DiscountRequest) -> DiscountResponse:
        quotes = parse_ois_quotes(req.ois_csv)
        curve = bootstrap_ois_curve(quotes)
        return DiscountResponse(
            currency=quotes.currency,
            value_date=curve.value_date,
            discounts=[curve.discount(d) for d in req.dates],
        )

    @app.post("/spreads", response_model=SpreadsResponse)
    async def spreads_endpoint(req: SpreadsRequest) -> SpreadsResponse:
        result = _analyze(req)
        market = result.markets[0]
        return SpreadsResponse(
            market_id=req.market_id,
            observations=[
                SpreadRow(
                    value_date=o.value_date,
                    maturity=o.maturity,
                    ttm_years=o.ttm_years,
                    b_bar=o.b_bar,
                    b_ois=o.b_ois,
                    spread_bp=o.spread_bp,
                )
                for o in market.observations
            ],
        )

    @app.post("/regression", response_model=RegressionResponse)
    async def regression_endpoint(req: RegressionRequest) -> RegressionResponse:
        result = _analyze(req)
        market = result.markets[0]
        if market.regression is None:
            raise InputError(
                f"market {req.market_id!r} has fewer than 3 usable spread "
                f"observations; cannot regress"
            )
        return RegressionResponse(
            market_id=req.market_id, regression=_regression_out(market.regression)
        )

    @app.post("/robustness", response_model=RobustnessResponse)
    async def robustness_endpoint(req: RobustnessRequest) -> RobustnessResponse:
        result = _analyze(req, include_variants=True)
        rows = []
        for row in result.variants:
            reg = row.regression
            rows.append(
                VariantOut(
                    variant=row.variant.name,
                    n=reg.n if reg is not None else None,
                    intercept_bp=reg.intercept_bp if reg is not None else None,
                    p_intercept=reg.p_intercept if reg is not None else None,
                    slope_bp_per_year=(
                        reg.slope_bp_per_year if reg is not None else None
                    ),
                    p_slope=reg.p_slope if reg is not None else None,
                    weighted=row.variant.weighted,
                    deviation_bp=row.deviation_bp,
                )
            )
        return RobustnessResponse(
            market_id=req.market_id,
            rows=rows,
            max_abs_deviation_bp=max_intercept_deviation_bp(result),
        )

    return app
