"""Shared fixtures and randomized-case generators for the test suite."""

from __future__ import annotations

import random

import pytest
from hypothesis import settings

from runrisk.balance_sheet import BalanceSheet
from runrisk.htm_optimizer import HtmShell
from runrisk.market_impact import ExponentialImpact, LinearImpact

settings.register_profile("deterministic", derandomize=True, max_examples=60, deadline=None)
settings.load_profile("deterministic")


def random_clearing_case(rng: random.Random, exponential: bool = False):
    """A valid random sheet with admissible impact and a leverage threshold.

    Elasticities stay at most 90% of the admissibility bound so the direct
    algorithm's monotonicity arguments hold with margin.
    """
    x = rng.uniform(0, 50)
    s = rng.uniform(0.5, 100)
    h = rng.uniform(0, 100)
    ell = rng.uniform(0, 100)
    p = rng.uniform(0.5, 1.0)
    lam = rng.uniform(1.1, 9.0)
    assets = x + s * p + h + ell
    liabilities = assets * rng.uniform(0.3, 1.1)
    uninsured = max(liabilities * rng.uniform(0.05, 1.0), 1e-6)
    insured = max(liabilities - uninsured, 0.0)
    sheet = BalanceSheet(
        cash=x, afs=s, htm=h, nonmarketable=ell, price=p, insured=insured, uninsured=uninsured
    )
    pool = s + h
    fraction = rng.uniform(0.05, 0.9)
    if exponential:
        impact = ExponentialImpact(p, fraction / ((lam - 1.0) * pool), pool)
    else:
        bound = (1.0 / pool) if lam < 2.0 else 1.0 / ((lam - 1.0) * pool)
        impact = LinearImpact(p, fraction * bound, pool)
    return sheet, impact, lam


def random_case2_shell(rng: random.Random, small_gap: bool, mild_shock: bool):
    """A shell in the run-prone regime, plus shock price, threshold, elasticity.

    ``small_gap`` keeps the funding gap close to the no-run boundary, which is
    where the partial-withdrawal branch binds; ``mild_shock`` samples prices
    near 1 for the same reason.
    """
    pool = rng.uniform(20, 200)
    x = rng.uniform(0, 40)
    ell = rng.uniform(0, 150)
    lam = rng.uniform(2.05, 9.0)
    kappa = 1.0 - 1.0 / lam
    gap_fraction = rng.uniform(0.001, 0.06) if small_gap else rng.uniform(0.05, 0.3)
    liabilities = x + kappa * (pool + ell) + gap_fraction * (pool + ell)
    uninsured = rng.uniform(max(x * 1.05, 0.3 * liabilities), liabilities)
    insured = liabilities - uninsured
    shell = HtmShell(
        cash=x, marketable=pool, nonmarketable=ell, insured=insured, uninsured=uninsured
    )
    shock = rng.uniform(0.85, 0.999) if mild_shock else rng.uniform(0.5, 0.999)
    elasticity = rng.uniform(0.05, 0.9) / ((lam - 1.0) * pool)
    return shell, shock, lam, elasticity


@pytest.fixture
def worked_step2_sheet():
    return BalanceSheet(
        cash=10, afs=40, htm=20, nonmarketable=30, price=1.0, insured=54, uninsured=30
    )


@pytest.fixture
def frictionless(worked_step2_sheet):
    return LinearImpact(1.0, 0.0, worked_step2_sheet.marketable)
