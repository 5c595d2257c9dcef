"""Hypothesis-driven invariants of the clearing map and its classifications."""

import pytest
from hypothesis import given, strategies as st

from runrisk.balance_sheet import BalanceSheet
from runrisk.clearing import (
    Liquidity,
    classify_liquidity,
    clear_algorithm,
    clearing_map,
)
from runrisk.market_impact import ExponentialImpact, LinearImpact


@st.composite
def clearing_cases(draw):
    cash = draw(st.floats(0, 40))
    afs = draw(st.floats(0.5, 80))
    htm = draw(st.floats(0, 80))
    nonmarketable = draw(st.floats(0, 80))
    price = draw(st.floats(0.5, 1.0))
    lam = draw(st.floats(1.2, 9.0))
    assets = cash + afs * price + htm + nonmarketable
    liabilities = assets * draw(st.floats(0.3, 1.1))
    uninsured = max(liabilities * draw(st.floats(0.05, 1.0)), 1e-6)
    sheet = BalanceSheet(
        cash=cash,
        afs=afs,
        htm=htm,
        nonmarketable=nonmarketable,
        price=price,
        insured=max(liabilities - uninsured, 0.0),
        uninsured=uninsured,
    )
    pool = afs + htm
    fraction = draw(st.floats(0.0, 0.9))
    if draw(st.booleans()):
        impact = ExponentialImpact(price, fraction / ((lam - 1.0) * pool), pool)
    else:
        bound = (1.0 / pool) if lam < 2.0 else 1.0 / ((lam - 1.0) * pool)
        impact = LinearImpact(price, fraction * bound, pool)
    return sheet, impact, lam


@given(
    case=clearing_cases(),
    w_frac=st.tuples(st.floats(0, 1), st.floats(0, 1)),
    q_frac=st.tuples(st.floats(0, 1), st.floats(0, 1)),
)
def test_clearing_map_is_monotone(case, w_frac, q_frac):
    sheet, impact, lam = case
    w_pair = sorted(f * sheet.uninsured for f in w_frac)
    q_pair = sorted(f * sheet.marketable for f in q_frac)
    lo = clearing_map(sheet, impact, lam, w_pair[0], q_pair[0])
    hi = clearing_map(sheet, impact, lam, w_pair[1], q_pair[1])
    assert lo[0] <= hi[0] + 1e-12
    assert lo[1] <= hi[1] + 1e-12


@given(case=clearing_cases())
def test_map_stays_in_domain_box(case):
    sheet, impact, lam = case
    w, q = clearing_map(sheet, impact, lam, sheet.uninsured, sheet.marketable)
    assert 0.0 <= w <= sheet.uninsured
    assert 0.0 <= q <= sheet.marketable


@given(case=clearing_cases())
def test_result_classification_is_consistent(case):
    sheet, impact, lam = case
    result = clear_algorithm(sheet, impact, lam)
    assert result.liquidity is classify_liquidity(sheet, impact, result.withdrawals)
    if result.step == 6:
        assert result.liquidity is Liquidity.ILLIQUID
        assert result.sold == sheet.marketable
    if result.liquidity is Liquidity.ILLIQUID:
        assert result.withdrawals - sheet.cash >= impact.proceeds(sheet.marketable) - 1e-9


@given(case=clearing_cases())
def test_equilibrium_withdrawals_are_self_consistent(case):
    sheet, impact, lam = case
    result = clear_algorithm(sheet, impact, lam)
    again_w, again_q = clearing_map(sheet, impact, lam, result.withdrawals, result.sold)
    scale = max(1.0, sheet.uninsured, sheet.marketable)
    assert again_w == pytest.approx(result.withdrawals, abs=1e-6 * scale)
    assert again_q == pytest.approx(result.sold, abs=1e-6 * scale)
