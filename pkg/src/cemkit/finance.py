"""Annuities and discounting, including tax-credit levelization."""

from __future__ import annotations

import math

from cemkit.domain import Period, PlanningHorizon
from cemkit.errors import InvalidParameterError


def capital_recovery_factor(rate: float, life_years: int) -> float:
    """Annual payment per unit of overnight cost, ``r(1+r)^n / ((1+r)^n - 1)``."""
    if life_years < 1 or int(life_years) != life_years:
        raise InvalidParameterError(f"life_years must be a positive integer, got {life_years}")
    if rate < 0:
        raise InvalidParameterError(f"rate must be >= 0, got {rate}")
    n = int(life_years)
    if rate == 0:
        return 1.0 / n
    growth = math.expm1(n * math.log1p(rate))  # (1+r)^n - 1 without cancellation at tiny r
    return rate * (growth + 1.0) / growth


def annuitize_capex(overnight: float, itc_fraction: float, rate: float, life: int) -> float:
    """$/kW overnight -> $/kW-yr, net of an investment tax credit."""
    if overnight < 0:
        raise InvalidParameterError(f"overnight cost must be >= 0, got {overnight}")
    if not 0.0 <= itc_fraction < 1.0:
        raise InvalidParameterError(f"itc_fraction must be in [0, 1), got {itc_fraction}")
    return (1.0 - itc_fraction) * overnight * capital_recovery_factor(rate, life)


def levelize_ptc(
    ptc_per_mwh: float,
    credit_years: int,
    life: int,
    rate: float,
    transfer_penalty: float,
    bonus: float = 0.0,
) -> float:
    """Spread a time-limited production credit evenly over the asset life.

    The credit (after the transfer penalty, plus an optional energy-community
    bonus) is received in years 1..credit_years; its present value is then
    re-annuitized over ``life`` years. Returns a nonnegative $/MWh magnitude.
    """
    if credit_years > life:
        raise InvalidParameterError("credit_years must not exceed life")
    if credit_years < 0 or ptc_per_mwh < 0:
        raise InvalidParameterError("credit_years and ptc_per_mwh must be >= 0")
    if not 0.0 <= transfer_penalty <= 1.0:
        raise InvalidParameterError("transfer_penalty outside [0, 1]")
    yearly = ptc_per_mwh * (1.0 + bonus) * (1.0 - transfer_penalty)
    pv = sum(yearly / (1.0 + rate) ** k for k in range(1, int(credit_years) + 1))
    return pv * capital_recovery_factor(rate, life)


def period_discount_weight(
    period: Period,
    horizon: PlanningHorizon,
    sequencing: str = "foresight",
    discount_rate: float | None = None,
) -> float:
    """Multiplier turning one year's cost in ``period`` into its objective weight.

    Myopic runs weight a period by its year count; foresight discounts each
    calendar year back to the first year of the horizon.
    """
    if period not in horizon.periods:
        raise InvalidParameterError(f"period {period.label} not in horizon")
    if sequencing == "myopic":
        return float(period.years)
    d = horizon.discount_rate if discount_rate is None else discount_rate
    base = horizon.base_year
    return sum((1.0 + d) ** -(y - base) for y in range(period.start_year, period.end_year + 1))
