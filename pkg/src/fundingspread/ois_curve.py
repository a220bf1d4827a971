"""OIS discount-curve bootstrap and queries.

Conventions (confined to this module): fixed legs accrue Act/360; quotes
up to one year are single-payment, longer quotes pay annually with a
short front stub; payment dates are whole-month shifts of the value date
with no business-day adjustment.  Queries interpolate log-linearly in
discount factors on an Act/365 time axis, which matches the spread day
count and is equivalent to piecewise-constant overnight forwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from functools import cached_property

from .errors import InputError, NumericalError
from .market_data import OisQuoteSet, add_months, format_tenor, year_fraction

FIXPOINT_TOL = 1e-14
FIXPOINT_MAX_ITER = 100

# A pillar discount above 1.5x the previous one implies a wildly negative
# forward rate; treat it as bad input rather than a curve.
MAX_DISCOUNT_STEP_UP = 1.5


def act360(start: date, end: date) -> float:
    """Act/360 accrual fraction between two dates."""
    if end < start:
        raise InputError(f"end date {end} precedes start date {start}")
    return (end - start).days / 360


@dataclass(frozen=True)
class OisCurve:
    """Bootstrapped discount factors with log-linear interpolation.

    The curve discounts to the value date (discount there is 1 by
    construction) and is queryable for any date up to the last pillar.
    Instances are immutable and safe to share across threads.
    """

    value_date: date
    pillars: tuple[tuple[date, float], ...]

    def __post_init__(self) -> None:
        if not self.pillars:
            raise InputError("curve must have at least one pillar")
        prev = self.value_date
        for pillar_date, discount in self.pillars:
            if pillar_date <= prev:
                raise InputError(
                    f"pillar dates must be strictly increasing after "
                    f"{self.value_date}; got {pillar_date}"
                )
            if not discount > 0.0:
                raise InputError(f"pillar discount at {pillar_date} not positive")
            prev = pillar_date

    @cached_property
    def _times(self) -> tuple[float, ...]:
        return tuple(year_fraction(self.value_date, d) for d, _ in self.pillars)

    @cached_property
    def _log_discounts(self) -> tuple[float, ...]:
        return tuple(math.log(b) for _, b in self.pillars)

    @property
    def last_pillar_date(self) -> date:
        return self.pillars[-1][0]

    def discount(self, target: date) -> float:
        """Discount factor from the value date to `target`.

        Exact at the value date and at pillars; log-linear in between;
        dates beyond the last pillar are refused (no extrapolation).
        """
        if target < self.value_date:
            raise InputError(
                f"date {target} precedes curve value date {self.value_date}"
            )
        if target == self.value_date:
            return 1.0
        if target > self.last_pillar_date:
            raise InputError(
                f"date {target} beyond last pillar {self.last_pillar_date}; "
                f"the curve does not extrapolate"
            )
        for pillar_date, discount in self.pillars:
            if target == pillar_date:
                return discount
        t = year_fraction(self.value_date, target)
        times = (0.0,) + self._times
        logs = (0.0,) + self._log_discounts
        hi = next(i for i, ti in enumerate(times) if ti >= t)
        lo = hi - 1
        w = (t - times[lo]) / (times[hi] - times[lo])
        return math.exp(logs[lo] + w * (logs[hi] - logs[lo]))


def _payment_offsets(tenor_months: int) -> list[int]:
    """Annual payment offsets in months, shortest (stub) first."""
    offsets = []
    remaining = tenor_months
    while remaining > 12:
        offsets.append(remaining)
        remaining -= 12
    offsets.append(remaining)
    offsets.reverse()
    return offsets


def bootstrap_ois_curve(quotes: OisQuoteSet) -> OisCurve:
    """Solve pillar discounts sequentially from OIS par rates.

    Quotes up to one year give the discount directly; longer quotes are
    par swaps whose earlier annual payments are discounted off the curve
    built so far (interpolating, and iterating to a fixpoint when a
    payment date falls beyond the last solved pillar).
    """
    value_date = quotes.value_date
    solved: list[tuple[date, float]] = []
    prev_discount = 1.0
    for q in quotes.quotes:
        maturity = add_months(value_date, q.tenor_months)
        rate = float(q.rate)
        if q.tenor_months <= 12:
            tau = act360(value_date, maturity)
            discount = 1.0 / (1.0 + rate * tau)
        else:
            discount = _solve_swap_pillar(
                value_date, solved, q.tenor_months, rate, prev_discount
            )
        label = format_tenor(q.tenor_months)
        if discount <= 0.0:
            raise NumericalError(
                f"bootstrap produced a non-positive discount at pillar {label}"
            )
        if discount > prev_discount * MAX_DISCOUNT_STEP_UP:
            raise NumericalError(
                f"arbitrage-violating input: discount at pillar {label} "
                f"({discount:.6f}) exceeds {MAX_DISCOUNT_STEP_UP}x the previous one"
            )
        solved.append((maturity, discount))
        prev_discount = discount
    return OisCurve(value_date=value_date, pillars=tuple(solved))


def _solve_swap_pillar(
    value_date: date,
    solved: list[tuple[date, float]],
    tenor_months: int,
    rate: float,
    initial_guess: float,
) -> float:
    offsets = _payment_offsets(tenor_months)
    pay_dates = [add_months(value_date, o) for o in offsets]
    accrual_starts = [value_date] + pay_dates[:-1]
    taus = [act360(s, e) for s, e in zip(accrual_starts, pay_dates)]
    discount = initial_guess
    for _ in range(FIXPOINT_MAX_ITER):
        trial = OisCurve(
            value_date=value_date, pillars=tuple(solved) + ((pay_dates[-1], discount),)
        )
        annuity_known = sum(
            tau * trial.discount(d) for tau, d in zip(taus[:-1], pay_dates[:-1])
        )
        updated = (1.0 - rate * annuity_known) / (1.0 + rate * taus[-1])
        if updated <= 0.0:
            # Let the caller report the pillar; no point iterating further.
            return updated
        if abs(updated - discount) < FIXPOINT_TOL:
            return updated
        discount = updated
    raise NumericalError(
        f"bootstrap fixpoint did not converge at pillar {format_tenor(tenor_months)}"
    )


def implied_par_rate(curve: OisCurve, tenor_months: int) -> float:
    """Par rate a quote of this tenor would need to reprice on the curve.

    Used to verify the bootstrap round trip: feeding back the input
    tenors must reproduce the input rates.
    """
    value_date = curve.value_date
    maturity = add_months(value_date, tenor_months)
    if tenor_months <= 12:
        tau = act360(value_date, maturity)
        return (1.0 / curve.discount(maturity) - 1.0) / tau
    offsets = _payment_offsets(tenor_months)
    pay_dates = [add_months(value_date, o) for o in offsets]
    accrual_starts = [value_date] + pay_dates[:-1]
    taus = [act360(s, e) for s, e in zip(accrual_starts, pay_dates)]
    annuity = sum(tau * curve.discount(d) for tau, d in zip(taus, pay_dates))
    return (1.0 - curve.discount(maturity)) / annuity


def curve_to_csv(curve: OisCurve) -> str:
    """Pillar dump in ``date,discount`` form."""
    lines = ["date,discount"]
    for pillar_date, discount in curve.pillars:
        lines.append(f"{pillar_date.isoformat()},{discount!r}")
    return "\n".join(lines) + "\n"
