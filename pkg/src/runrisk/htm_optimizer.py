"""Maximal safe held-to-maturity designation under a price shock.

A bank holds a fixed pool of marketable securities (par value ``marketable``)
and chooses how much to designate HtM before a one-period price shock brings
the unit price down to ``shock_price``. Holding HtM is attractive, but a run
at the shocked price must never force sales beyond the AfS block, since any
HtM sale re-marks the whole block. The optimizer therefore finds the minimal
AfS level s* such that the equilibrium quantity sold at the shocked price
stays within s*, and designates the rest (h* = marketable - s*) as HtM.

With linear price impact f(q) = shock_price * (1 - b*q) and a depositor
threshold above 2, the minimum has a closed form built from three candidates:

* ``s_partial``: smallest AfS supporting a partial-withdrawal equilibrium
  (threshold binds, not all uninsured funding leaves), subject to a feasible
  shock price and to an upper cap ``s_cap`` where withdrawal demand saturates;
* ``s_full``: smallest AfS whose sale proceeds cover every uninsured dollar
  while keeping withdrawal demand at that maximum;
* ``marketable`` itself: hold everything available-for-sale (always safe).

``optimal_htm`` evaluates the closed form; ``optimal_htm_oracle`` brute-forces
the same minimum on a grid by running the clearing fixed point on every
candidate split, and is the independent check for the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._roots import bisect_increasing
from .balance_sheet import BalanceSheet
from .clearing import clear_fixed_point

__all__ = [
    "HtmShell",
    "HtmCase",
    "BindingConstraint",
    "HtmIntermediates",
    "HtmDecision",
    "optimal_htm",
    "optimal_htm_oracle",
    "optimal_htm_profile",
    "implied_shock",
    "min_lambda_no_sale",
]


@dataclass(frozen=True)
class HtmShell:
    """Balance-sheet aggregates relevant to the HtM designation problem."""

    cash: float
    marketable: float  # securities pool to split between AfS and HtM, at par
    nonmarketable: float
    insured: float
    uninsured: float

    @property
    def liabilities(self) -> float:
        return self.insured + self.uninsured

    @classmethod
    def from_balance_sheet(cls, sheet: BalanceSheet) -> "HtmShell":
        return cls(
            cash=sheet.cash,
            marketable=sheet.afs * sheet.price + sheet.htm,
            nonmarketable=sheet.nonmarketable,
            insured=sheet.insured,
            uninsured=sheet.uninsured,
        )


class HtmCase(Enum):
    CASE_1 = "case1"  # full HtM is safe for any shock
    CASE_2 = "case2"  # a run can force sales; minimal AfS is interior


class BindingConstraint(Enum):
    PARTIAL_WITHDRAWAL = "partial-withdrawal"
    FULL_WITHDRAWAL = "full-withdrawal"
    ALL_AFS = "all-afs"


@dataclass(frozen=True)
class HtmIntermediates:
    """Quantities produced along the closed-form evaluation (Case 2 only)."""

    kappa: float  # 1 - 1/max_leverage
    funding_gap: float  # liabilities - cash - kappa*(marketable + nonmarketable)
    m_term: float | None  # partial-withdrawal discriminant root, None if negative
    c_term: float  # margin term inside the feasibility price floor
    price_floor: float  # minimal shock price admitting a partial withdrawal
    s1: float | None  # proceeds bound of the full-withdrawal case
    s2: float | None  # insured-funding bound of the full-withdrawal case
    s_cap: float  # AfS cap where partial-withdrawal demand saturates
    s_partial: float  # math.inf when infeasible
    s_full: float  # math.inf when infeasible


@dataclass(frozen=True)
class HtmDecision:
    """Optimal split of the marketable pool."""

    afs: float  # s*, minimal safe AfS designation
    htm: float  # h* = marketable - afs
    case: HtmCase
    binding: BindingConstraint | None  # None in Case 1 and for grid-oracle output
    intermediates: HtmIntermediates | None = None


def validate_shell(shell: HtmShell) -> list[str]:
    problems = []
    for name in ("cash", "marketable", "nonmarketable", "insured", "uninsured"):
        value = getattr(shell, name)
        if not math.isfinite(value):
            problems.append(f"{name} must be finite, got {value!r}")
        elif value < 0:
            problems.append(f"{name} >= 0 required")
    if not problems and shell.uninsured <= 0:
        problems.append("uninsured > 0 required")
    return problems


def _require_shell(shell: HtmShell) -> None:
    problems = validate_shell(shell)
    if problems:
        raise ValueError("invalid shell: " + "; ".join(problems))


def optimal_htm(
    shell: HtmShell,
    shock_price: float,
    max_leverage: float,
    elasticity: float,
) -> HtmDecision:
    """Closed-form maximal HtM designation for a linear-impact price shock.

    Requires max_leverage > 2, shock_price in (0, 1), and
    0 < elasticity < 1/((max_leverage - 1) * marketable). The frictionless
    limit is approached with a tiny positive elasticity; zero itself is
    rejected because the formulas divide by it.
    """
    _require_shell(shell)
    if not 0.0 < shock_price < 1.0:
        raise ValueError(f"shock price must lie in (0, 1), got {shock_price!r}")
    if not max_leverage > 2.0:
        raise ValueError(f"max_leverage must exceed 2, got {max_leverage!r}")
    pool = shell.marketable
    if elasticity <= 0.0:
        raise ValueError("elasticity must be positive (use a tiny value for the frictionless limit)")
    if pool > 0 and elasticity >= 1.0 / ((max_leverage - 1.0) * pool):
        raise ValueError(
            f"elasticity {elasticity!r} must stay below 1/((max_leverage-1)*marketable) "
            f"= {1.0 / ((max_leverage - 1.0) * pool)!r}"
        )

    lam = max_leverage
    kappa = 1.0 - 1.0 / lam
    x, ell = shell.cash, shell.nonmarketable
    insured, uninsured = shell.insured, shell.uninsured
    liabilities = shell.liabilities
    p1, b = shock_price, elasticity

    if uninsured <= x or liabilities <= x + kappa * (pool + ell):
        return HtmDecision(afs=0.0, htm=pool, case=HtmCase.CASE_1, binding=None)

    gap = liabilities - x - kappa * (pool + ell)  # positive here

    # Partial withdrawals: need the shock price above a floor, and the
    # candidate below the saturation cap.
    c_term = math.sqrt(b * gap * (2.0 * kappa + b * gap))
    price_floor = kappa + b * gap + c_term
    m_term: float | None = None
    s_partial = math.inf
    s_cap = _saturation_cap(shell, p1, lam, b)
    if p1 >= price_floor:
        disc = (p1 - kappa) ** 2 - 2.0 * p1 * b * gap
        m_term = math.sqrt(max(disc, 0.0))
        # (p1 - kappa - m_term) / (b * p1) in a cancellation-free form.
        candidate = 2.0 * gap / (p1 - kappa + m_term)
        if candidate <= s_cap:
            s_partial = candidate

    # Full withdrawals: proceeds of the AfS block must cover all uninsured
    # funding, and insured funding must keep withdrawal demand at the maximum.
    s1: float | None = None
    s2: float | None = None
    s_full = math.inf
    if p1 > 2.0 * b * (uninsured - x):
        ratio = 2.0 * b * (uninsured - x) / p1
        s1 = 2.0 * (uninsured - x) / (p1 * (1.0 + math.sqrt(1.0 - ratio)))
        sale_value = p1 * s1 * (1.0 - b * s1)
        s2 = (pool + ell - sale_value - insured / kappa) / (1.0 - p1 * (1.0 - b * s1))
        if max(s1, s2) <= pool:
            s_full = max(s1, s2)

    candidates = (
        (s_partial, BindingConstraint.PARTIAL_WITHDRAWAL),
        (s_full, BindingConstraint.FULL_WITHDRAWAL),
        (pool, BindingConstraint.ALL_AFS),
    )
    s_star, binding = candidates[0]
    for value, label in candidates[1:]:
        if value < s_star:
            s_star, binding = value, label

    return HtmDecision(
        afs=s_star,
        htm=pool - s_star,
        case=HtmCase.CASE_2,
        binding=binding,
        intermediates=HtmIntermediates(
            kappa=kappa,
            funding_gap=gap,
            m_term=m_term,
            c_term=c_term,
            price_floor=price_floor,
            s1=s1,
            s2=s2,
            s_cap=s_cap,
            s_partial=s_partial,
            s_full=s_full,
        ),
    )


def _gamma_bar(shell: HtmShell, afs: float, shock_price: float, lam: float, b: float) -> float:
    """Sale quantity of the partial-withdrawal equilibrium at AfS level ``afs``.

    Positive root of q^2 * p1 * (kappa - 1/2) * b + q * p1 * (1 - kappa*(afs*b + 1))
    = liabilities - cash - kappa*(pool + nonmarketable - afs*(1 - p1)), written
    in the stable two-term form.
    """
    kappa = 1.0 - 1.0 / lam
    p1 = shock_price
    rhs = shell.liabilities - shell.cash - kappa * (
        shell.marketable + shell.nonmarketable - afs * (1.0 - p1)
    )
    a2 = p1 * (kappa - 0.5) * b
    a1 = p1 * (1.0 - kappa * (afs * b + 1.0))
    return 2.0 * rhs / (a1 + math.sqrt(a1 * a1 + 4.0 * a2 * rhs))


def _saturation_cap(shell: HtmShell, shock_price: float, lam: float, b: float) -> float:
    """Largest AfS level at which partial-withdrawal demand stays within uninsured funding.

    Solves demand(s) = uninsured on (0, marketable), where demand(s) is the
    withdrawal level implied by the partial-withdrawal sale quantity; demand
    is strictly increasing in s, hence a bisection suffices. Endpoint rules:
    0 when even s = 0 saturates, marketable when nothing does.
    """
    pool = shell.marketable
    if pool == 0.0:
        return 0.0
    p1, kappa = shock_price, 1.0 - 1.0 / lam

    def demand(afs: float) -> float:
        q = _gamma_bar(shell, afs, p1, lam, b)
        price = p1 * (1.0 - b * q)
        avg = p1 * (1.0 - 0.5 * b * q)
        value = (
            shell.cash
            + q * avg
            + (afs - q) * price
            + shell.marketable
            + shell.nonmarketable
            - afs
        )
        return lam * shell.liabilities - (lam - 1.0) * value

    if shell.uninsured <= demand(0.0):
        return 0.0
    if shell.uninsured >= demand(pool):
        return pool
    return bisect_increasing(demand, 0.0, pool, shell.uninsured, tol=1e-10 * max(1.0, pool))


def optimal_htm_oracle(
    shell: HtmShell,
    shock_price: float,
    max_leverage: float,
    elasticity: float,
    grid_n: int = 10_000,
) -> HtmDecision:
    """Brute-force minimum over an AfS grid, via the clearing fixed point.

    For each candidate split (s, marketable - s) on a grid of grid_n + 1
    points the post-shock sheet is cleared and the split qualifies when the
    equilibrium sale quantity stays within the AfS block. Accepts any
    max_leverage > 1 and elasticity >= 0; this is the independent oracle for
    :func:`optimal_htm`.
    """
    _require_shell(shell)
    if not 0.0 < shock_price < 1.0:
        raise ValueError(f"shock price must lie in (0, 1), got {shock_price!r}")
    if not max_leverage > 1.0:
        raise ValueError(f"max_leverage must exceed 1, got {max_leverage!r}")
    if elasticity < 0.0:
        raise ValueError("elasticity must be >= 0")
    if grid_n < 1:
        raise ValueError("grid_n must be >= 1")

    pool = shell.marketable
    grid = np.linspace(0.0, pool, grid_n + 1)
    sold = _grid_equilibrium_sales(shell, shock_price, max_leverage, elasticity, grid)
    slack = 1e-7 * max(1.0, pool)
    qualifying = np.flatnonzero(sold <= grid + slack)
    # s = pool always qualifies (sales cannot exceed the whole pool).
    s_star = float(grid[qualifying[0]]) if qualifying.size else pool
    return HtmDecision(
        afs=s_star,
        htm=pool - s_star,
        case=HtmCase.CASE_1 if s_star == 0.0 else HtmCase.CASE_2,
        binding=None,
    )


def _grid_equilibrium_sales(
    shell: HtmShell,
    shock_price: float,
    max_leverage: float,
    elasticity: float,
    grid: np.ndarray,
    tol: float | None = None,
    max_iter: int = 200_000,
) -> np.ndarray:
    """Equilibrium sale quantities for every AfS split in ``grid``, batched.

    Runs the monotone clearing iteration from (0, 0) simultaneously for all
    splits; converged entries drop out of the active set. Matches the scalar
    :func:`runrisk.clearing.clear_fixed_point` on each grid point.
    """
    x, ell = shell.cash, shell.nonmarketable
    pool = shell.marketable
    uninsured, liabilities = shell.uninsured, shell.liabilities
    lam, p1, b = max_leverage, shock_price, elasticity
    if tol is None:
        tol = 1e-9 * max(uninsured, pool, 1.0)

    n = grid.size
    withdrawals = np.zeros(n)
    sold = np.zeros(n)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        s = grid[idx]
        w0 = withdrawals[idx]
        q0 = sold[idx]
        price = p1 * (1.0 - b * q0)
        avg = p1 * (1.0 - 0.5 * b * q0)
        unsold = np.where(q0 > s, (pool - q0) * price, (s - q0) * price + (pool - s))
        value = x + q0 * avg + unsold + ell
        w1 = np.minimum(uninsured, np.maximum(0.0, lam * liabilities - (lam - 1.0) * value))
        q1 = np.minimum(pool, np.maximum(0.0, w0 - x) / avg)
        moved = np.maximum(np.abs(w1 - w0), np.abs(q1 - q0))
        withdrawals[idx] = w1
        sold[idx] = q1
        active[idx] = moved >= tol
    return sold


def optimal_htm_profile(
    shell: HtmShell,
    price_grid,
    max_leverage: float,
    elasticity: float,
) -> list[tuple[float, HtmDecision]]:
    """Closed-form decisions over an ascending shock-price grid."""
    return [
        (p1, optimal_htm(shell, p1, max_leverage, elasticity)) for p1 in sorted(price_grid)
    ]


def implied_shock(
    shell: HtmShell,
    observed_htm: float,
    max_leverage: float,
    elasticity: float,
    price_grid,
) -> float | None:
    """Smallest grid shock price whose optimal HtM still covers the observed holding.

    Scans the grid in ascending order and returns the first price whose
    optimal HtM is at least ``observed_htm`` (ability semantics). ``None``
    means no grid price is consistent with the observed designation, the
    warning-sign regime.
    """
    _require_shell(shell)
    grid = sorted(price_grid)
    if not grid:
        raise ValueError("price grid must not be empty")
    if not 0.0 <= observed_htm <= shell.marketable + 1e-9 * max(1.0, shell.marketable):
        raise ValueError(
            f"observed HtM {observed_htm!r} outside [0, {shell.marketable!r}]"
        )
    slack = 1e-12 * max(1.0, shell.marketable)
    for p1 in grid:
        if optimal_htm(shell, p1, max_leverage, elasticity).htm >= observed_htm - slack:
            return p1
    return None


def min_lambda_no_sale(shell: HtmShell) -> float:
    """Smallest depositor leverage threshold making a full-HtM designation safe.

    At or above this threshold a fully HtM sheet never sells in equilibrium,
    whatever the shock price. Returns 1 when no run pressure exists at all,
    and math.inf when no threshold is lenient enough.
    """
    _require_shell(shell)
    gap = shell.liabilities - shell.cash
    if shell.uninsured <= shell.cash or gap <= 0.0:
        return 1.0
    pool = shell.marketable + shell.nonmarketable
    if gap >= pool:
        return math.inf
    return pool / (pool - gap)
