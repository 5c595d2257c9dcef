"""Clearing of a depositor run: equilibrium withdrawals and forced sales.

Uninsured depositors tolerate a maximum leverage ratio (assets over equity).
Above it they withdraw until realized leverage is back at the threshold, and
the bank sells marketable securities so that cash plus sale proceeds cover the
withdrawals. A run outcome is a joint fixed point (w, q) of

    map_w(q) = min(uninsured, max(0, lam * L - (lam - 1) * V(q)))
    map_q(w, q) = min(afs + htm, max(0, w - cash) / avg_price(q))

where V(q) is the marked asset value after selling q units (HtM re-marked in
full once q exceeds the AfS holdings) and L the total liabilities. Both
coordinates are non-decreasing in (w, q), so the iteration started from (0, 0)
increases to the minimal fixed point; that minimal solution is the outcome
reported everywhere in this package.

``clear_algorithm`` computes the same minimal solution directly through an
exhaustive six-branch case analysis (no sales / run met by AfS sales with the
threshold binding or with all uninsured funding gone / the same two cases with
the HtM block re-marked / illiquidity), then classifies liquidity and
solvency. ``clear_fixed_point`` is the independent iterative oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ._roots import bisect_increasing, quadratic_roots
from .balance_sheet import (
    BalanceSheet,
    RealizedState,
    liquidation_value,
    realized_state,
    require_valid,
)
from .market_impact import BISECTION_TOL, InverseDemand, LinearImpact

__all__ = [
    "Liquidity",
    "Solvency",
    "ClearingResult",
    "ConvergenceError",
    "AdmissibilityError",
    "clearing_map",
    "clear_fixed_point",
    "clear_algorithm",
    "check_solvency",
    "classify_liquidity",
    "infer_step",
    "picard_iterates",
]


class Liquidity(Enum):
    LIQUID = "liquid"
    ILLIQUID = "illiquid"


class Solvency(Enum):
    SOLVENT = "solvent"
    INSOLVENT = "insolvent"


class ConvergenceError(RuntimeError):
    """Fixed-point iteration hit the iteration cap; carries the last iterate."""

    def __init__(self, message: str, last_iterate: tuple[float, float], iterations: int):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class AdmissibilityError(ValueError):
    """Raised in strict mode when impact parameters violate admissibility."""


@dataclass(frozen=True)
class ClearingResult:
    """Minimal run equilibrium together with its classification."""

    withdrawals: float  # equilibrium withdrawal requests (USD bn)
    sold: float  # equilibrium quantity sold (units)
    step: int  # which of the six branches produced the solution
    liquidity: Liquidity
    solvency: Solvency
    realized: RealizedState
    max_leverage: float
    warnings: tuple[str, ...] = ()  # admissibility advisories
    diagnostics: tuple[str, ...] = ()  # float-boundary fallthrough notes


def clearing_map(
    sheet: BalanceSheet,
    impact: InverseDemand,
    max_leverage: float,
    withdrawals: float,
    sold: float,
) -> tuple[float, float]:
    """One application of the joint withdrawal/sale map on the domain box."""
    _check_leverage(max_leverage)
    value = liquidation_value(sheet, impact, sold)
    liabilities = sheet.liabilities
    demanded = max_leverage * liabilities - (max_leverage - 1.0) * value
    w_next = min(sheet.uninsured, max(0.0, demanded))
    q_next = min(
        sheet.marketable, max(0.0, withdrawals - sheet.cash) / impact.avg_price(sold)
    )
    return w_next, q_next


def clear_fixed_point(
    sheet: BalanceSheet,
    impact: InverseDemand,
    max_leverage: float,
    tol: float | None = None,
    max_iter: int = 1_000_000,
) -> tuple[float, float]:
    """Minimal clearing solution by monotone iteration from (0, 0).

    The map is non-decreasing and (0, 0) is the bottom of the domain box, so
    iterates increase componentwise to the minimal fixed point. Stops when
    the sup-norm change drops below ``tol`` (default: 1e-9 relative to
    max(uninsured, afs + htm)). Raises :class:`ConvergenceError` with the
    last iterate if ``max_iter`` is exhausted.
    """
    _prepare(sheet, impact, max_leverage)
    if tol is None:
        tol = 1e-9 * max(sheet.uninsured, sheet.marketable, 1.0)
    w, q = 0.0, 0.0
    for iteration in range(1, max_iter + 1):
        w_next, q_next = clearing_map(sheet, impact, max_leverage, w, q)
        if max(abs(w_next - w), abs(q_next - q)) < tol:
            return w_next, q_next
        w, q = w_next, q_next
    raise ConvergenceError(
        f"clearing iteration did not converge within {max_iter} steps",
        last_iterate=(w, q),
        iterations=max_iter,
    )


def picard_iterates(
    sheet: BalanceSheet,
    impact: InverseDemand,
    max_leverage: float,
    count: int,
) -> list[tuple[float, float]]:
    """The first ``count`` iterates from (0, 0), mainly for monotonicity checks."""
    _prepare(sheet, impact, max_leverage)
    out = [(0.0, 0.0)]
    for _ in range(count):
        out.append(clearing_map(sheet, impact, max_leverage, *out[-1]))
    return out


def check_solvency(sheet: BalanceSheet, impact: InverseDemand, sold: float) -> Solvency:
    """Solvent iff the marked asset value after selling ``sold`` strictly exceeds liabilities."""
    value = liquidation_value(sheet, impact, sold)
    return Solvency.SOLVENT if value > sheet.liabilities else Solvency.INSOLVENT


def classify_liquidity(sheet: BalanceSheet, impact: InverseDemand, withdrawals: float) -> Liquidity:
    """Illiquid iff withdrawal requests meet or exceed cash plus maximal sale proceeds."""
    if withdrawals <= sheet.cash:
        return Liquidity.LIQUID
    max_raise = impact.proceeds(sheet.marketable)
    if withdrawals - sheet.cash >= max_raise:
        return Liquidity.ILLIQUID
    return Liquidity.LIQUID


def clear_algorithm(
    sheet: BalanceSheet,
    impact: InverseDemand,
    max_leverage: float,
    strict: bool = False,
) -> ClearingResult:
    """Direct six-branch computation of the minimal clearing solution.

    Branches are tried in increasing order of the sale quantity; at an exact
    boundary the earlier branch wins. Interval memberships use the closed /
    open endpoints exactly as the case conditions state them. With ``strict``
    an admissibility violation raises instead of being attached as a warning.
    """
    warnings = _prepare(sheet, impact, max_leverage)
    if strict and warnings:
        raise AdmissibilityError("; ".join(warnings))

    lam = max_leverage
    kappa = 1.0 - 1.0 / lam  # equity share retained at the leverage threshold
    x, s, h = sheet.cash, sheet.afs, sheet.htm
    ell, price = sheet.nonmarketable, sheet.price
    insured, uninsured = sheet.insured, sheet.uninsured
    liabilities = sheet.liabilities
    sh = sheet.marketable
    diagnostics: list[str] = []

    def finish(step: int, withdrawals: float, sold: float) -> ClearingResult:
        return ClearingResult(
            withdrawals=withdrawals,
            sold=sold,
            step=step,
            liquidity=classify_liquidity(sheet, impact, withdrawals),
            solvency=check_solvency(sheet, impact, sold),
            realized=realized_state(sheet, impact, withdrawals, sold),
            max_leverage=lam,
            warnings=tuple(warnings),
            diagnostics=tuple(diagnostics),
        )

    # Step 1: withdrawals (if any) are covered by cash, nothing is sold.
    book_value = x + s * price + h + ell
    demanded_at_rest = lam * liabilities - (lam - 1.0) * book_value
    if uninsured <= x or demanded_at_rest <= x:
        w = min(uninsured, max(0.0, demanded_at_rest))
        return finish(1, w, 0.0)

    proceeds_afs = impact.proceeds(s)
    proceeds_all = impact.proceeds(sh)

    # Step 2: AfS sales only, leverage threshold binds, not all uninsured leaves.
    target2 = liabilities - x - kappa * (h + ell)
    if kappa * s * price <= target2 <= proceeds_afs:
        sold2 = _solve_threshold_equation(impact, kappa, s, 0.0, s, target2)
        if sold2 is None:
            diagnostics.append("step 2 interval matched but the root equation had no solution")
        else:
            w2 = x + impact.proceeds(sold2)
            if uninsured >= w2:
                return finish(2, w2, sold2)

    # Step 3: AfS sales only, every uninsured dollar is withdrawn.
    if x < uninsured <= x + proceeds_afs:
        sold3 = impact.invert_proceeds(uninsured - x, cap=s)
        if sold3 is None:
            diagnostics.append("step 3 interval matched but proceeds inversion failed")
        elif insured >= kappa * ((s - sold3) * impact.price(sold3) + h + ell):
            return finish(3, uninsured, sold3)

    # Step 4: sales dip into HtM (re-marking the block), threshold binds.
    target4 = liabilities - x - kappa * ell
    lower4 = proceeds_afs + kappa * h * impact.price(s)
    if lower4 <= target4 <= proceeds_all:
        sold4 = _solve_threshold_equation(impact, kappa, sh, s, sh, target4)
        if sold4 is None:
            diagnostics.append("step 4 interval matched but the root equation had no solution")
        else:
            w4 = x + impact.proceeds(sold4)
            if uninsured >= w4:
                return finish(4, w4, sold4)

    # Step 5: sales dip into HtM and all uninsured funding is withdrawn.
    if x < uninsured and proceeds_afs <= uninsured - x <= proceeds_all:
        sold5 = impact.invert_proceeds(uninsured - x, cap=sh)
        if sold5 is None:
            diagnostics.append("step 5 interval matched but proceeds inversion failed")
        elif insured >= kappa * ((sh - sold5) * impact.price(sold5) + ell):
            return finish(5, uninsured, sold5)

    # Step 6: illiquidity; everything is sold and requests cannot be met.
    # The reported withdrawals are the requests, not the actual payout.
    demanded_all_sold = lam * liabilities - (lam - 1.0) * (x + proceeds_all + ell)
    if demanded_all_sold >= uninsured and uninsured - x >= proceeds_all:
        return finish(6, uninsured, sh)
    if demanded_all_sold < uninsured and liabilities >= x + proceeds_all + kappa * ell:
        return finish(6, demanded_all_sold, sh)
    diagnostics.append(
        "no branch condition held exactly; clamped illiquidity withdrawals reported"
    )
    return finish(6, min(uninsured, max(0.0, demanded_all_sold)), sh)


def infer_step(
    sheet: BalanceSheet,
    impact: InverseDemand,
    max_leverage: float,
    withdrawals: float,
    sold: float,
    tol: float | None = None,
) -> int:
    """Classify a clearing solution (w, q) into the six-branch taxonomy.

    Used to compare the iterative oracle with the direct algorithm; ``tol`` is
    an absolute tolerance for the boundary comparisons.
    """
    if tol is None:
        tol = 1e-6 * max(sheet.uninsured, sheet.marketable, 1.0)
    if sold <= tol:
        return 1
    if sold >= sheet.marketable - tol and withdrawals - sheet.cash >= impact.proceeds(
        sheet.marketable
    ) - tol:
        return 6
    full_withdrawal = withdrawals >= sheet.uninsured - tol
    if sold <= sheet.afs + tol:
        return 3 if full_withdrawal else 2
    return 5 if full_withdrawal else 4


def _solve_threshold_equation(
    impact: InverseDemand,
    kappa: float,
    block: float,
    lo: float,
    hi: float,
    target: float,
) -> float | None:
    """Solve q*avg(q) + kappa*(block - q)*f(q) = target for q in [lo, hi].

    ``block`` is the marketable block being drawn down (afs only, or afs+htm
    after re-marking). Strictly increasing under admissible impact, so the
    root is unique; linear impact admits an exact quadratic solution and the
    other variants are bisected.
    """

    def value(q: float) -> float:
        return impact.proceeds(q) + kappa * (block - q) * impact.price(q)

    slack = 1e-9 * max(1.0, hi)
    if isinstance(impact, LinearImpact):
        p, b = impact.initial_price, impact.elasticity
        # p*q*(1-b*q/2) + kappa*(block-q)*p*(1-b*q) = target
        a2 = p * b * (kappa - 0.5)
        a1 = p * (1.0 - kappa * (1.0 + block * b))
        a0 = p * kappa * block - target
        roots = [r for r in quadratic_roots(a2, a1, a0) if lo - slack <= r <= hi + slack]
        if roots:
            root = min(roots)  # minimal solution when monotonicity is violated
            root = min(max(root, lo), hi)
            if abs(value(root) - target) <= 1e-7 * max(1.0, abs(target)):
                return root
    lo_val, hi_val = value(lo), value(hi)
    if not (min(lo_val, hi_val) - 1e-9 <= target <= max(lo_val, hi_val) + 1e-9):
        return None
    if hi_val >= lo_val:
        return bisect_increasing(value, lo, hi, target, tol=BISECTION_TOL)
    return bisect_increasing(lambda q: -value(q), lo, hi, -target, tol=BISECTION_TOL)


def _prepare(
    sheet: BalanceSheet, impact: InverseDemand, max_leverage: float
) -> list[str]:
    """Validate the inputs jointly and collect admissibility warnings."""
    _check_leverage(max_leverage)
    require_valid(sheet)
    if abs(impact.initial_price - sheet.price) > 1e-9:
        raise ValueError(
            f"impact initial price {impact.initial_price!r} does not match "
            f"sheet price {sheet.price!r}"
        )
    if impact.domain_max < sheet.marketable - 1e-9 * max(1.0, sheet.marketable):
        raise ValueError(
            f"impact domain {impact.domain_max!r} does not cover the marketable "
            f"portfolio {sheet.marketable!r}"
        )
    warning = impact.admissibility_warning(sheet.marketable, max_leverage)
    return [warning] if warning else []


def _check_leverage(max_leverage: float) -> None:
    if not max_leverage > 1.0 or not math.isfinite(max_leverage):
        raise ValueError(f"max_leverage must be finite and > 1, got {max_leverage!r}")
