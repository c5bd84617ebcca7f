import pytest
from hypothesis import given, strategies as st

from cemkit.domain import PlanningHorizon
from cemkit.errors import InvalidParameterError
from cemkit.finance import annuitize_capex, capital_recovery_factor, levelize_ptc, period_discount_weight


def pv_of_annuity(a, rate, life):
    return sum(a / (1 + rate) ** k for k in range(1, life + 1))


@given(st.floats(0.001, 0.2), st.integers(1, 60))
def test_annuity_repays_principal(rate, life):
    assert pv_of_annuity(capital_recovery_factor(rate, life), rate, life) == pytest.approx(1.0, rel=1e-12)


def test_zero_rate_annuity_is_straight_line():
    assert capital_recovery_factor(0.0, 25) == pytest.approx(1 / 25)


def test_itc_reduces_capex():
    assert annuitize_capex(1000.0, 0.3, 0.05, 20) == pytest.approx(700.0 * capital_recovery_factor(0.05, 20))


def _ptc_oracle(ptc, years, life, rate, penalty, bonus=0.0):
    """Year-by-year cash flows: credit for `years`, nothing after; level payment with the same PV."""
    cash = [ptc * (1 + bonus) * (1 - penalty) if y <= years else 0.0 for y in range(1, life + 1)]
    pv = sum(v / (1 + rate) ** y for y, v in enumerate(cash, start=1))
    return pv / sum((1 + rate) ** -y for y in range(1, life + 1))


def test_ptc_reference_value():
    v = levelize_ptc(27.5, 10, 30, 0.05, 0.075)
    assert v == pytest.approx(_ptc_oracle(27.5, 10, 30, 0.05, 0.075), rel=1e-12)
    assert v == pytest.approx(12.78, abs=0.01)


@given(st.floats(0, 50), st.integers(0, 20), st.floats(0.0, 0.15), st.floats(0, 0.5), st.floats(0, 0.2))
def test_ptc_matches_cash_flows(ptc, years, rate, penalty, bonus):
    got = levelize_ptc(ptc, years, 30, rate, penalty, bonus)
    assert got == pytest.approx(_ptc_oracle(ptc, years, 30, rate, penalty, bonus), rel=1e-9, abs=1e-12)


def test_ptc_edges():
    assert levelize_ptc(27.5, 0, 30, 0.05, 0.0) == 0.0
    # credit over the whole life with no penalty is the credit itself
    assert levelize_ptc(27.5, 30, 30, 0.05, 0.0) == pytest.approx(27.5)
    with pytest.raises(InvalidParameterError):
        levelize_ptc(27.5, 31, 30, 0.05, 0.0)
    with pytest.raises(InvalidParameterError):
        levelize_ptc(27.5, 10, 30, 0.05, 1.5)


def test_discount_weights():
    h = PlanningHorizon()
    p = h.period("2030")
    assert period_discount_weight(p, h, "myopic") == 3.0
    assert period_discount_weight(p, h, "foresight", 0.0) == 3.0
    want = sum(1.02 ** -(y - 2024) for y in (2028, 2029, 2030))
    assert period_discount_weight(p, h) == pytest.approx(want, rel=1e-14)
    total = sum(period_discount_weight(q, h, discount_rate=0.0) for q in h.periods)
    assert total == 27.0
