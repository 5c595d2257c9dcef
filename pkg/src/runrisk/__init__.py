"""Depositor-run clearing equilibria and HtM designation analysis for stylized bank balance sheets."""

from .balance_sheet import (
    BalanceSheet,
    RealizedState,
    SheetTotals,
    realized_assets,
    realized_leverage,
    realized_state,
    sheet_warnings,
    totals,
    validate,
)
from .clearing import (
    AdmissibilityError,
    ClearingResult,
    ConvergenceError,
    Liquidity,
    Solvency,
    check_solvency,
    classify_liquidity,
    clear_algorithm,
    clear_fixed_point,
    clearing_map,
)
from .htm_optimizer import (
    BindingConstraint,
    HtmCase,
    HtmDecision,
    HtmShell,
    implied_shock,
    min_lambda_no_sale,
    optimal_htm,
    optimal_htm_oracle,
)
from .market_impact import (
    ExponentialImpact,
    InverseDemand,
    LinearImpact,
    TabulatedImpact,
    check_admissible,
)
from .scenario import (
    BankRecord,
    ConvertUninsured,
    ImpactSpec,
    RealizeUnrealizedLosses,
    ReallocateHtmToAfs,
    RecordError,
    SetInitialPrice,
    apply_transform,
    calibrate,
    implied_leverage,
    load_records,
    svb_records,
    sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BalanceSheet",
    "SheetTotals",
    "RealizedState",
    "validate",
    "sheet_warnings",
    "totals",
    "realized_assets",
    "realized_leverage",
    "realized_state",
    "LinearImpact",
    "ExponentialImpact",
    "TabulatedImpact",
    "InverseDemand",
    "check_admissible",
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
    "HtmShell",
    "HtmCase",
    "BindingConstraint",
    "HtmDecision",
    "optimal_htm",
    "optimal_htm_oracle",
    "implied_shock",
    "min_lambda_no_sale",
    "BankRecord",
    "RecordError",
    "load_records",
    "svb_records",
    "calibrate",
    "implied_leverage",
    "RealizeUnrealizedLosses",
    "ConvertUninsured",
    "ReallocateHtmToAfs",
    "SetInitialPrice",
    "apply_transform",
    "ImpactSpec",
    "sweep",
    "__version__",
]
