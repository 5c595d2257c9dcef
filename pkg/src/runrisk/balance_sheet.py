"""Stylized bank balance sheet and its realized value under withdrawals and sales.

The sheet carries four asset classes (cash, available-for-sale securities,
held-to-maturity securities, nonmarketable assets at book value) and two
funding classes (insured/stable and uninsured/run-prone). Marketable
securities are measured in units with par value 1: AfS units are marked at the
initial price, HtM units are carried in full until any one of them is sold, at
which point the whole HtM block is re-marked to the current market price.

All currency amounts are USD billions. Leverage (assets over equity) is
reported as ``math.inf`` whenever equity is non-positive, so that downstream
classification can proceed instead of raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .market_impact import InverseDemand

__all__ = [
    "BalanceSheet",
    "SheetTotals",
    "RealizedState",
    "validate",
    "sheet_warnings",
    "require_valid",
    "totals",
    "liquidation_value",
    "realized_assets",
    "realized_leverage",
    "realized_state",
]


@dataclass(frozen=True)
class BalanceSheet:
    """A priori balance sheet, before any run is resolved."""

    cash: float  # liquid assets at market value
    afs: float  # available-for-sale securities (units)
    htm: float  # held-to-maturity securities (units, carried at par 1)
    nonmarketable: float  # illiquid assets at book value
    price: float = 1.0  # initial unit price of marketable securities, in (0, 1]
    insured: float = 0.0  # insured / stable funding, never withdrawn
    uninsured: float = 0.0  # uninsured run-prone funding, must be > 0

    @property
    def marketable(self) -> float:
        """Total marketable securities in units (AfS plus HtM)."""
        return self.afs + self.htm

    @property
    def liabilities(self) -> float:
        return self.insured + self.uninsured

    @property
    def book_assets(self) -> float:
        """Total assets before any sales: cash + afs*price + htm + nonmarketable."""
        return self.cash + self.afs * self.price + self.htm + self.nonmarketable

    @property
    def equity(self) -> float:
        return self.book_assets - self.liabilities


@dataclass(frozen=True)
class SheetTotals:
    """Headline aggregates of an a priori sheet."""

    assets: float
    liabilities: float
    equity: float
    leverage: float  # assets / equity, math.inf when equity <= 0


@dataclass(frozen=True)
class RealizedState:
    """Balance-sheet state after withdrawals and sales are recognized."""

    withdrawals: float
    sold: float
    assets: float  # realized asset value net of withdrawals paid out
    equity: float  # assets - (liabilities - withdrawals)
    leverage: float  # assets / equity, math.inf when equity <= 0
    remarked: bool  # True iff sales dipped into the HtM block


def validate(sheet: BalanceSheet) -> list[str]:
    """Return all violated range constraints; an empty list means the sheet is usable.

    Negative a priori equity is deliberately not a violation (see
    :func:`sheet_warnings`): such sheets must still clear so they can be
    classified insolvent rather than rejected.
    """
    problems = []
    for name in ("cash", "afs", "htm", "nonmarketable", "price", "insured", "uninsured"):
        value = getattr(sheet, name)
        if not math.isfinite(value):
            problems.append(f"{name} must be finite, got {value!r}")
    if problems:
        return problems
    if sheet.cash < 0:
        problems.append("cash >= 0 required")
    if sheet.afs < 0:
        problems.append("afs >= 0 required")
    if sheet.htm < 0:
        problems.append("htm >= 0 required")
    if sheet.nonmarketable < 0:
        problems.append("nonmarketable >= 0 required")
    if not 0.0 < sheet.price <= 1.0:
        problems.append("price must lie in (0, 1]")
    if sheet.insured < 0:
        problems.append("insured >= 0 required")
    if sheet.uninsured <= 0:
        problems.append("uninsured > 0 required")
    return problems


def sheet_warnings(sheet: BalanceSheet) -> list[str]:
    """Advisory flags that do not block clearing."""
    notes = []
    if not validate(sheet) and sheet.equity <= 0:
        notes.append("a priori equity is non-positive; the sheet will classify as insolvent")
    return notes


def require_valid(sheet: BalanceSheet) -> None:
    """Raise ``ValueError`` listing every violated constraint."""
    problems = validate(sheet)
    if problems:
        raise ValueError("invalid balance sheet: " + "; ".join(problems))


def totals(sheet: BalanceSheet) -> SheetTotals:
    """Aggregate assets, liabilities, equity and leverage of the a priori sheet."""
    assets = sheet.book_assets
    liabilities = sheet.liabilities
    equity = assets - liabilities
    leverage = assets / equity if equity > 0 else math.inf
    return SheetTotals(assets=assets, liabilities=liabilities, equity=equity, leverage=leverage)


def liquidation_value(sheet: BalanceSheet, impact: InverseDemand, sold: float) -> float:
    """Mark-to-market value of all assets after selling ``sold`` units.

    Sale proceeds accrue at the volume-weighted average price. Unsold AfS
    units are marked at the post-sale price. The HtM block keeps its par value
    while untouched and is re-marked in full as soon as sold > afs. No
    withdrawals are netted here; subtract them separately.
    """
    _check_sold(sheet, sold)
    unit_price = impact.price(sold)
    proceeds = impact.proceeds(sold)
    if sold <= sheet.afs:
        afs_left = (sheet.afs - sold) * unit_price
        htm_left = sheet.htm
    else:
        afs_left = 0.0
        htm_left = (sheet.htm - (sold - sheet.afs)) * unit_price
    return sheet.cash + proceeds + afs_left + htm_left + sheet.nonmarketable


def realized_assets(
    sheet: BalanceSheet, impact: InverseDemand, withdrawals: float, sold: float
) -> float:
    """Realized asset value after paying ``withdrawals`` out of sale proceeds and cash."""
    _check_withdrawals(sheet, withdrawals)
    return liquidation_value(sheet, impact, sold) - withdrawals


def realized_leverage(
    sheet: BalanceSheet, impact: InverseDemand, withdrawals: float, sold: float
) -> float:
    """Realized assets over realized equity; ``math.inf`` when equity is non-positive."""
    assets = realized_assets(sheet, impact, withdrawals, sold)
    equity = assets - (sheet.liabilities - withdrawals)
    return assets / equity if equity > 0 else math.inf


def realized_state(
    sheet: BalanceSheet, impact: InverseDemand, withdrawals: float, sold: float
) -> RealizedState:
    """Bundle realized assets, equity, leverage and the re-marking flag."""
    assets = realized_assets(sheet, impact, withdrawals, sold)
    equity = assets - (sheet.liabilities - withdrawals)
    return RealizedState(
        withdrawals=withdrawals,
        sold=sold,
        assets=assets,
        equity=equity,
        leverage=assets / equity if equity > 0 else math.inf,
        remarked=sold > sheet.afs,
    )


def _check_sold(sheet: BalanceSheet, sold: float) -> None:
    slack = 1e-9 * max(1.0, sheet.marketable)
    if not -slack <= sold <= sheet.marketable + slack:
        raise ValueError(
            f"sold quantity {sold!r} outside [0, {sheet.marketable!r}] (afs + htm)"
        )


def _check_withdrawals(sheet: BalanceSheet, withdrawals: float) -> None:
    slack = 1e-9 * max(1.0, sheet.uninsured)
    if not -slack <= withdrawals <= sheet.uninsured + slack:
        raise ValueError(
            f"withdrawals {withdrawals!r} outside [0, {sheet.uninsured!r}] (uninsured funding)"
        )
