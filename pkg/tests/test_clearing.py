"""Clearing map, fixed-point solver, six-branch algorithm, classification."""

import random

import pytest

from runrisk.balance_sheet import BalanceSheet, realized_leverage
from runrisk.clearing import (
    AdmissibilityError,
    ConvergenceError,
    Liquidity,
    Solvency,
    check_solvency,
    classify_liquidity,
    clear_algorithm,
    clear_fixed_point,
    clearing_map,
    infer_step,
    picard_iterates,
)
from runrisk.market_impact import ExponentialImpact, LinearImpact, TabulatedImpact

from conftest import random_clearing_case

STEP1_SHEET = BalanceSheet(20, 30, 20, 30, 1.0, insured=60, uninsured=23)
STEP6_SHEET = BalanceSheet(5, 10, 5, 10, 1.0, insured=40, uninsured=30)


def frictionless_for(sheet):
    return LinearImpact(sheet.price, 0.0, sheet.marketable)


class TestClearingMap:
    def test_hand_sequence_to_fixed_point(self, worked_step2_sheet, frictionless):
        step0 = clearing_map(worked_step2_sheet, frictionless, 5.0, 0.0, 0.0)
        assert step0 == (20.0, 0.0)
        step1 = clearing_map(worked_step2_sheet, frictionless, 5.0, *step0)
        assert step1 == (20.0, 10.0)
        step2 = clearing_map(worked_step2_sheet, frictionless, 5.0, *step1)
        assert step2 == (20.0, 10.0)

    def test_below_threshold_clips_to_zero(self):
        sheet = BalanceSheet(30, 20, 10, 40, 1.0, insured=50, uninsured=25)
        out = clearing_map(sheet, frictionless_for(sheet), 7.5, 0.0, 0.0)
        assert out == (0.0, 0.0)

    def test_upper_corner_absorbs(self):
        sheet = STEP6_SHEET
        impact = frictionless_for(sheet)
        w, q = clearing_map(sheet, impact, 5.0, sheet.uninsured, sheet.marketable)
        assert q == sheet.marketable  # uninsured - cash = 25 >= proceeds 15

    def test_leverage_precondition(self, worked_step2_sheet, frictionless):
        with pytest.raises(ValueError):
            clearing_map(worked_step2_sheet, frictionless, 1.0, 0.0, 0.0)

    def test_componentwise_monotone(self):
        rng = random.Random(11)
        for _ in range(200):
            sheet, impact, lam = random_clearing_case(rng)
            w_lo = rng.uniform(0, sheet.uninsured)
            q_lo = rng.uniform(0, sheet.marketable)
            w_hi = rng.uniform(w_lo, sheet.uninsured)
            q_hi = rng.uniform(q_lo, sheet.marketable)
            lo = clearing_map(sheet, impact, lam, w_lo, q_lo)
            hi = clearing_map(sheet, impact, lam, w_hi, q_hi)
            assert lo[0] <= hi[0] + 1e-12
            assert lo[1] <= hi[1] + 1e-12


class TestFixedPoint:
    def test_worked_partial_run(self, worked_step2_sheet, frictionless):
        assert clear_fixed_point(worked_step2_sheet, frictionless, 5.0) == (20.0, 10.0)

    def test_no_run_when_leverage_is_comfortable(self):
        sheet = BalanceSheet(30, 20, 10, 40, 1.0, insured=50, uninsured=25)
        assert clear_fixed_point(sheet, frictionless_for(sheet), 7.5) == (0.0, 0.0)

    def test_illiquidity_instance(self):
        w, q = clear_fixed_point(STEP6_SHEET, frictionless_for(STEP6_SHEET), 5.0)
        assert (w, q) == (30.0, 15.0)

    def test_iteration_cap_reports_last_iterate(self, worked_step2_sheet, frictionless):
        with pytest.raises(ConvergenceError) as excinfo:
            clear_fixed_point(worked_step2_sheet, frictionless, 5.0, max_iter=2)
        assert excinfo.value.iterations == 2
        assert excinfo.value.last_iterate[0] <= 20.0

    def test_iterates_are_componentwise_nondecreasing(self):
        rng = random.Random(23)
        for _ in range(100):
            sheet, impact, lam = random_clearing_case(rng)
            path = picard_iterates(sheet, impact, lam, 60)
            for (w1, q1), (w2, q2) in zip(path, path[1:]):
                assert w2 >= w1 - 1e-12
                assert q2 >= q1 - 1e-12

    def test_top_corner_iteration_dominates_minimal_solution(self):
        # iterating down from the top of the box brackets the maximal fixed
        # point, which must dominate the minimal one at every stage
        rng = random.Random(61)
        for _ in range(60):
            sheet, impact, lam = random_clearing_case(rng)
            w, q = sheet.uninsured, sheet.marketable
            for _ in range(300):
                w_next, q_next = clearing_map(sheet, impact, lam, w, q)
                assert w_next <= w + 1e-12
                assert q_next <= q + 1e-12
                w, q = w_next, q_next
            scale = max(1.0, sheet.uninsured, sheet.marketable)
            w_min, q_min = clear_fixed_point(sheet, impact, lam, tol=1e-10 * scale)
            assert w >= w_min - 1e-6 * scale
            assert q >= q_min - 1e-6 * scale


class TestAlgorithmWorkedInstances:
    def test_step1_no_sales(self):
        result = clear_algorithm(STEP1_SHEET, frictionless_for(STEP1_SHEET), 5.0)
        assert result.step == 1
        assert result.withdrawals == pytest.approx(15.0, abs=1e-12)
        assert result.sold == 0.0
        assert result.liquidity is Liquidity.LIQUID
        assert result.solvency is Solvency.SOLVENT

    def test_step2_partial_run(self, worked_step2_sheet, frictionless):
        result = clear_algorithm(worked_step2_sheet, frictionless, 5.0)
        assert result.step == 2
        assert result.withdrawals == pytest.approx(20.0, abs=1e-9)
        assert result.sold == pytest.approx(10.0, abs=1e-9)
        assert result.liquidity is Liquidity.LIQUID
        assert result.solvency is Solvency.SOLVENT
        assert result.realized.leverage == pytest.approx(5.0, abs=1e-9)

    def test_step6_illiquidity(self):
        result = clear_algorithm(STEP6_SHEET, frictionless_for(STEP6_SHEET), 5.0)
        assert result.step == 6
        assert result.withdrawals == pytest.approx(30.0, abs=1e-12)
        assert result.sold == pytest.approx(15.0, abs=1e-12)
        assert result.liquidity is Liquidity.ILLIQUID
        assert result.solvency is Solvency.INSOLVENT


class TestSolvency:
    def test_positive_equity_at_rest(self):
        assert check_solvency(STEP1_SHEET, frictionless_for(STEP1_SHEET), 0.0) is Solvency.SOLVENT

    def test_illiquidity_instance_insolvent(self):
        # value 30 against liabilities 70 once everything is sold
        assert (
            check_solvency(STEP6_SHEET, frictionless_for(STEP6_SHEET), 15.0)
            is Solvency.INSOLVENT
        )

    def test_frictionless_remark_has_no_jump(self):
        sheet = BalanceSheet(10, 20, 15, 30, 1.0, insured=40, uninsured=30)
        impact = frictionless_for(sheet)
        at_boundary = check_solvency(sheet, impact, sheet.afs)
        just_past = check_solvency(sheet, impact, sheet.afs + 1e-9)
        assert at_boundary == just_past

    def test_insolvency_monotone_in_sales(self):
        rng = random.Random(41)
        for _ in range(150):
            sheet, impact, _ = random_clearing_case(rng)
            grid = [sheet.marketable * i / 60 for i in range(61)]
            flags = [check_solvency(sheet, impact, q) is Solvency.INSOLVENT for q in grid]
            first = flags.index(True) if True in flags else len(flags)
            assert all(flags[first:]), "insolvency must persist for larger sales"


class TestAlgorithmAgainstFixedPoint:
    def test_randomized_equivalence_and_classification(self):
        rng = random.Random(314)
        seen_steps = set()
        for trial in range(400):
            sheet, impact, lam = random_clearing_case(rng, exponential=bool(trial % 2))
            result = clear_algorithm(sheet, impact, lam)
            scale = max(1.0, sheet.uninsured, sheet.marketable)
            w, q = clear_fixed_point(sheet, impact, lam, tol=1e-10 * scale)
            assert result.withdrawals == pytest.approx(w, abs=1e-6)
            assert result.sold == pytest.approx(q, abs=1e-6)
            assert classify_liquidity(sheet, impact, w) is result.liquidity
            assert check_solvency(sheet, impact, q) is result.solvency
            assert infer_step(sheet, impact, lam, w, q) == result.step
            assert not result.diagnostics
            seen_steps.add(result.step)
        assert {1, 2, 3, 5, 6} <= seen_steps

    def test_branch_invariants(self):
        rng = random.Random(2718)
        for trial in range(300):
            sheet, impact, lam = random_clearing_case(rng, exponential=bool(trial % 3 == 0))
            r = clear_algorithm(sheet, impact, lam)
            assert 0.0 <= r.withdrawals <= sheet.uninsured + 1e-9
            assert 0.0 <= r.sold <= sheet.marketable + 1e-9
            if r.step == 1:
                assert r.sold == 0.0
                assert r.withdrawals <= sheet.cash + 1e-9
            if r.step in (2, 4):
                assert r.withdrawals == pytest.approx(
                    sheet.cash + impact.proceeds(r.sold), rel=1e-9, abs=1e-9
                )
                assert r.withdrawals < sheet.uninsured + 1e-9
                assert realized_leverage(
                    sheet, impact, r.withdrawals, r.sold
                ) == pytest.approx(lam, abs=1e-8)
            if r.step in (3, 5):
                assert r.withdrawals == sheet.uninsured
            if r.step in (2, 3):
                assert r.sold <= sheet.afs + 1e-9
            if r.step in (4, 5):
                assert sheet.afs - 1e-9 < r.sold < sheet.marketable + 1e-9
            if r.step == 6:
                assert r.sold == sheet.marketable
                assert r.liquidity is Liquidity.ILLIQUID


class TestInputChecks:
    def test_strict_admissibility_raises(self):
        sheet = BalanceSheet(8, 20, 108, 37, 1.0, insured=13.9, uninsured=51)
        steep = LinearImpact(1.0, 0.002, sheet.marketable)
        with pytest.raises(AdmissibilityError):
            clear_algorithm(sheet, steep, 7.5, strict=True)
        result = clear_algorithm(sheet, steep, 7.5)
        assert result.warnings

    def test_price_mismatch_rejected(self, worked_step2_sheet):
        impact = LinearImpact(0.9, 0.0, worked_step2_sheet.marketable)
        with pytest.raises(ValueError):
            clear_algorithm(worked_step2_sheet, impact, 5.0)

    def test_short_domain_rejected(self, worked_step2_sheet):
        impact = LinearImpact(1.0, 0.0, worked_step2_sheet.marketable / 2)
        with pytest.raises(ValueError):
            clear_fixed_point(worked_step2_sheet, impact, 5.0)

    def test_invalid_sheet_rejected(self):
        sheet = BalanceSheet(-8, 20, 10, 37, 1.0, insured=13.9, uninsured=51)
        with pytest.raises(ValueError):
            clear_algorithm(sheet, LinearImpact(1.0, 0.0, 30), 5.0)

    def test_exponential_variant_clears(self):
        sheet = BalanceSheet(8, 20, 10, 37, 1.0, insured=13.9, uninsured=51)
        impact = ExponentialImpact(1.0, 0.001, sheet.marketable)
        result = clear_algorithm(sheet, impact, 6.5)
        w, q = clear_fixed_point(sheet, impact, 6.5, tol=1e-12 * 60)
        assert result.withdrawals == pytest.approx(w, abs=1e-7)
        assert result.sold == pytest.approx(q, abs=1e-7)

    def test_exponential_remark_branch_uses_bisection(self):
        # stressed 2022q1-style sheet where sales must dip into the HtM block
        sheet = BalanceSheet(22, 25.5, 93.5, 75, 1.0, insured=26.3, uninsured=172)
        impact = ExponentialImpact(1.0, 0.001, sheet.marketable)
        result = clear_algorithm(sheet, impact, 7.5)
        assert result.step == 4
        assert sheet.afs < result.sold < sheet.marketable
        assert result.realized.remarked
        assert result.realized.leverage == pytest.approx(7.5, abs=1e-8)
        w, q = clear_fixed_point(sheet, impact, 7.5, tol=1e-11 * 200)
        assert result.withdrawals == pytest.approx(w, abs=1e-6)
        assert result.sold == pytest.approx(q, abs=1e-6)

    def test_tabulated_curve_tracks_its_linear_source(self):
        sheet = BalanceSheet(22, 25.5, 93.5, 75, 1.0, insured=26.3, uninsured=172)
        linear = LinearImpact(1.0, 0.001, sheet.marketable)
        knots = tuple(sheet.marketable * i / 300 for i in range(301))
        table = TabulatedImpact(knots, tuple(linear.price(k) for k in knots))
        from_table = clear_algorithm(sheet, table, 7.5)
        from_linear = clear_algorithm(sheet, linear, 7.5)
        assert from_table.step == from_linear.step == 4
        assert from_table.sold == pytest.approx(from_linear.sold, abs=1e-3)
        w, q = clear_fixed_point(sheet, table, 7.5, tol=1e-11 * 200)
        assert from_table.withdrawals == pytest.approx(w, abs=1e-6)
        assert from_table.sold == pytest.approx(q, abs=1e-6)
