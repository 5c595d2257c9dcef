"""Quarterly bank records, calibration to balance sheets, and scenario sweeps.

A record is one reported quarter in the delimited schema

    period,total_deposits,other_funding,insured_deposits,capital,total_assets,
    cash,afs,htm,ugl_htm,ugl_afs

with amounts in USD billions and unrealized gains/losses signed (losses
negative). Calibration maps a record onto the stylized sheet: cash, AfS and
HtM quantities are taken as reported at an initial price of 1, nonmarketable
assets absorb the remainder of total assets, uninsured funding is the
uninsured share of deposits, and other funding is folded into the stable side
(it balances the accounting identity and is not treated as run-prone; pass
``other_funding_runnable=True`` to stress that classification). The identity
makes calibrated equity equal reported capital.

Counterfactual transforms cover the standard what-ifs: realizing unrealized
losses in book values, converting uninsured deposits to insured, reallocating
HtM to AfS at par, and re-marking the initial price. ``sweep`` clears the
Cartesian product of periods, leverage thresholds, impact parameterizations
and transform chains into a flat, deterministically ordered result table.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .balance_sheet import BalanceSheet
from .clearing import ClearingResult, clear_algorithm
from .market_impact import ExponentialImpact, InverseDemand, LinearImpact

__all__ = [
    "BankRecord",
    "RecordError",
    "RECORD_FIELDS",
    "load_records",
    "svb_records",
    "calibrate",
    "implied_leverage",
    "RealizeUnrealizedLosses",
    "ConvertUninsured",
    "ReallocateHtmToAfs",
    "SetInitialPrice",
    "Transform",
    "apply_transform",
    "apply_chain",
    "parse_transform",
    "parse_chain",
    "chain_label",
    "ImpactSpec",
    "SweepCell",
    "sweep",
]

RECORD_FIELDS = (
    "period",
    "total_deposits",
    "other_funding",
    "insured_deposits",
    "capital",
    "total_assets",
    "cash",
    "afs",
    "htm",
    "ugl_htm",
    "ugl_afs",
)


class RecordError(ValueError):
    """Malformed or inconsistent record input."""


@dataclass(frozen=True)
class BankRecord:
    """One reported quarter of balance-sheet data (USD bn, UGL signed)."""

    period: str
    total_deposits: float
    other_funding: float
    insured_deposits: float
    capital: float
    total_assets: float
    cash: float
    afs: float
    htm: float
    ugl_htm: float
    ugl_afs: float


def _record_problems(rec: BankRecord) -> list[str]:
    problems = []
    for name in RECORD_FIELDS[1:]:
        if not math.isfinite(getattr(rec, name)):
            problems.append(f"{name} must be finite")
    if problems:
        return problems
    if rec.total_assets < rec.cash + rec.afs + rec.htm:
        problems.append("total_assets must cover cash + afs + htm")
    if rec.insured_deposits > rec.total_deposits:
        problems.append("insured_deposits must not exceed total_deposits")
    return problems


def load_records(source) -> list[BankRecord]:
    """Parse and validate a record file (path, path-like, or open text stream)."""
    if hasattr(source, "read"):
        return _parse_records(source, getattr(source, "name", "<stream>"))
    path = Path(source)
    with open(path, newline="") as handle:
        return _parse_records(handle, str(path))


def _parse_records(handle, label: str) -> list[BankRecord]:
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        raise RecordError(f"{label}: no records") from None
    if tuple(field.strip() for field in header) != RECORD_FIELDS:
        raise RecordError(
            f"{label}: header mismatch, expected {','.join(RECORD_FIELDS)}"
        )
    records = []
    for row_index, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(RECORD_FIELDS):
            raise RecordError(f"{label}: row {row_index}: expected {len(RECORD_FIELDS)} fields")
        period = row[0].strip()
        try:
            values = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise RecordError(f"{label}: row {row_index}: {exc}") from None
        rec = BankRecord(period, *values)
        problems = _record_problems(rec)
        if problems:
            raise RecordError(f"{label}: row {row_index}: " + "; ".join(problems))
        records.append(rec)
    if not records:
        raise RecordError(f"{label}: no records")
    return records


def svb_records() -> list[BankRecord]:
    """The bundled quarterly SVB dataset (2020q1 through 2022q4)."""
    data = resources.files("runrisk").joinpath("data/svb.csv").read_text()
    return _parse_records(io.StringIO(data), "bundled svb.csv")


def calibrate(rec: BankRecord, other_funding_runnable: bool = False) -> BalanceSheet:
    """Map a reported quarter onto the stylized sheet (initial price 1).

    Equity of the result equals reported capital by the accounting identity.
    Other funding counts as stable unless ``other_funding_runnable`` is set.
    """
    nonmarketable = rec.total_assets - rec.cash - rec.afs - rec.htm
    uninsured = rec.total_deposits - rec.insured_deposits
    insured = rec.insured_deposits + rec.other_funding
    if other_funding_runnable:
        uninsured += rec.other_funding
        insured -= rec.other_funding
    if nonmarketable < 0:
        raise RecordError(f"{rec.period}: negative nonmarketable residual {nonmarketable!r}")
    if uninsured < 0:
        raise RecordError(f"{rec.period}: negative uninsured funding {uninsured!r}")
    return BalanceSheet(
        cash=rec.cash,
        afs=rec.afs,
        htm=rec.htm,
        nonmarketable=nonmarketable,
        price=1.0,
        insured=insured,
        uninsured=uninsured,
    )


def implied_leverage(rec: BankRecord) -> float:
    """Total assets over capital adjusted for signed unrealized gains/losses.

    Losses (negative UGL) shrink the denominator and push the ratio up;
    returns math.inf when the adjusted capital is not positive.
    """
    denominator = rec.capital + rec.ugl_htm + rec.ugl_afs
    if denominator <= 0:
        return math.inf
    return rec.total_assets / denominator


@dataclass(frozen=True)
class RealizeUnrealizedLosses:
    """Fold the record's unrealized gains/losses into the book values."""


@dataclass(frozen=True)
class ConvertUninsured:
    """Move a fraction of uninsured deposits into the insured category."""

    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction!r}")


@dataclass(frozen=True)
class ReallocateHtmToAfs:
    """Move a fraction of the HtM block into AfS at par."""

    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.fraction!r}")


@dataclass(frozen=True)
class SetInitialPrice:
    """Re-mark the initial unit price, keeping quantities unchanged."""

    price: float

    def __post_init__(self):
        if not 0.0 < self.price <= 1.0:
            raise ValueError(f"price must lie in (0, 1], got {self.price!r}")


Transform = RealizeUnrealizedLosses | ConvertUninsured | ReallocateHtmToAfs | SetInitialPrice


def apply_transform(sheet: BalanceSheet, rec: BankRecord, transform: Transform) -> BalanceSheet:
    """Apply one counterfactual transform; raises if a field would turn negative."""
    if isinstance(transform, RealizeUnrealizedLosses):
        out = replace(
            sheet,
            htm=sheet.htm + rec.ugl_htm,
            afs=sheet.afs + rec.ugl_afs / sheet.price,
        )
    elif isinstance(transform, ConvertUninsured):
        moved = transform.fraction * sheet.uninsured
        out = replace(sheet, uninsured=sheet.uninsured - moved, insured=sheet.insured + moved)
    elif isinstance(transform, ReallocateHtmToAfs):
        moved = transform.fraction * sheet.htm
        out = replace(sheet, htm=sheet.htm - moved, afs=sheet.afs + moved / sheet.price)
    elif isinstance(transform, SetInitialPrice):
        out = replace(sheet, price=transform.price)
    else:
        raise TypeError(f"unknown transform {transform!r}")
    for name in ("afs", "htm", "uninsured", "insured"):
        if getattr(out, name) < 0:
            raise ValueError(
                f"transform {transform!r} drives {name} negative on period {rec.period}"
            )
    return out


def apply_chain(sheet: BalanceSheet, rec: BankRecord, chain) -> BalanceSheet:
    for transform in chain:
        sheet = apply_transform(sheet, rec, transform)
    return sheet


def parse_transform(text: str) -> Transform:
    """Parse a transform spec: realize-ugl | convert-uninsured:F | reallocate-htm:F | set-price:P."""
    name, _, arg = text.strip().partition(":")
    try:
        if name == "realize-ugl":
            if arg:
                raise ValueError("realize-ugl takes no argument")
            return RealizeUnrealizedLosses()
        if name == "convert-uninsured":
            return ConvertUninsured(float(arg))
        if name == "reallocate-htm":
            return ReallocateHtmToAfs(float(arg))
        if name == "set-price":
            return SetInitialPrice(float(arg))
    except ValueError as exc:
        raise ValueError(f"bad transform {text!r}: {exc}") from None
    raise ValueError(f"unknown transform {text!r}")


def parse_chain(text: str) -> tuple[Transform, ...]:
    """Parse a plus-separated transform chain; 'baseline' or '' is the empty chain."""
    text = text.strip()
    if not text or text == "baseline":
        return ()
    return tuple(parse_transform(part) for part in text.split("+"))


def _transform_label(transform: Transform) -> str:
    if isinstance(transform, RealizeUnrealizedLosses):
        return "realize-ugl"
    if isinstance(transform, ConvertUninsured):
        return f"convert-uninsured:{transform.fraction:g}"
    if isinstance(transform, ReallocateHtmToAfs):
        return f"reallocate-htm:{transform.fraction:g}"
    return f"set-price:{transform.price:g}"


def chain_label(chain) -> str:
    return "+".join(_transform_label(t) for t in chain) if chain else "baseline"


@dataclass(frozen=True)
class ImpactSpec:
    """Impact parameterization for sweeps: kind, elasticity, optional pinned price.

    When ``initial_price`` is None the impact follows the sheet's (possibly
    transformed) price; a pinned price re-marks the sheet to match, so the
    price of the impact curve and the sheet always agree.
    """

    kind: str  # "linear" or "exponential"
    elasticity: float
    initial_price: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "exponential"):
            raise ValueError(f"unknown impact kind {self.kind!r}")
        if self.elasticity < 0:
            raise ValueError("elasticity must be >= 0")

    @classmethod
    def parse(cls, text: str) -> "ImpactSpec":
        """Parse specs like ``linear:p=1,b=0.0005`` or ``exponential:b=0.001``."""
        kind, _, rest = text.strip().partition(":")
        price = None
        elasticity = None
        for part in filter(None, (piece.strip() for piece in rest.split(","))):
            key, _, value = part.partition("=")
            try:
                if key == "p":
                    price = float(value)
                elif key == "b":
                    elasticity = float(value)
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"bad impact spec {text!r}: {exc}") from None
        if elasticity is None:
            raise ValueError(f"impact spec {text!r} must set b=<elasticity>")
        return cls(kind=kind, elasticity=elasticity, initial_price=price)

    def label(self) -> str:
        if self.initial_price is None:
            return f"{self.kind}:b={self.elasticity:g}"
        return f"{self.kind}:p={self.initial_price:g},b={self.elasticity:g}"

    def build(self, initial_price: float, domain_max: float) -> InverseDemand:
        if self.kind == "linear":
            return LinearImpact(
                initial_price=initial_price, elasticity=self.elasticity, domain_max=domain_max
            )
        return ExponentialImpact(
            initial_price=initial_price, elasticity=self.elasticity, domain_max=domain_max
        )


@dataclass(frozen=True)
class SweepCell:
    """One cleared cell of the scenario grid."""

    period: str
    max_leverage: float
    impact_label: str
    transform_label: str
    sheet: BalanceSheet
    result: ClearingResult


def sweep(
    records,
    leverage_values,
    impact_specs,
    transform_chains=((),),
    strict: bool = False,
) -> list[SweepCell]:
    """Clear every (period, leverage, impact, transform chain) combination.

    Output rows follow exactly that nesting order, independent of how the
    cells are evaluated; each row carries the transformed sheet and the full
    clearing result.
    """
    records = list(records)
    leverage_values = list(leverage_values)
    impact_specs = list(impact_specs)
    transform_chains = [tuple(chain) for chain in transform_chains]
    if not records or not leverage_values or not impact_specs or not transform_chains:
        raise ValueError("sweep requires non-empty records, leverages, impacts and chains")

    cells = []
    for rec in records:
        base = calibrate(rec)
        for leverage in leverage_values:
            for spec in impact_specs:
                for chain in transform_chains:
                    sheet = apply_chain(base, rec, chain)
                    if spec.initial_price is not None and spec.initial_price != sheet.price:
                        sheet = replace(sheet, price=spec.initial_price)
                    impact = spec.build(sheet.price, sheet.marketable)
                    result = clear_algorithm(sheet, impact, leverage, strict=strict)
                    cells.append(
                        SweepCell(
                            period=rec.period,
                            max_leverage=leverage,
                            impact_label=spec.label(),
                            transform_label=chain_label(chain),
                            sheet=sheet,
                            result=result,
                        )
                    )
    return cells
