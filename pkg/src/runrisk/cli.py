"""Command-line front end.

Subcommands:

* ``validate``      check a record file, calibrated sheets, and admissibility
* ``clear``         clear one sheet (a record period or an explicit sheet)
* ``sweep``         clear the full scenario grid and emit the result table
* ``optimize-htm``  optimal AfS/HtM split per period over a shock-price grid
* ``implied-shock`` smallest shock price consistent with the observed HtM
* ``min-lambda``    smallest leverage threshold with no equilibrium sales

Records default to the path in ``$RUNRISK_RECORDS`` and then to the bundled
SVB dataset. Options can also be supplied via ``--config file.json`` (a flat
JSON object keyed by option name); explicit flags override config values.
Output is deterministic: fixed ordering, numbers at six significant digits.
Exit codes: 0 success, 1 input error, 2 numerical non-convergence.

``--figures DIR`` on the report subcommands also renders the matching charts
(grouped bars for sweeps, lines/scatters for the series) as PNG files next to
the delimited output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import replace

from .balance_sheet import BalanceSheet, sheet_warnings, validate
from .clearing import (
    ClearingResult,
    ConvergenceError,
    check_solvency,
    classify_liquidity,
    clear_algorithm,
    clear_fixed_point,
    infer_step,
    realized_state,
)
from .htm_optimizer import (
    HtmShell,
    implied_shock,
    min_lambda_no_sale,
    optimal_htm_profile,
)
from .scenario import (
    ImpactSpec,
    RecordError,
    apply_chain,
    calibrate,
    load_records,
    parse_chain,
    svb_records,
    sweep,
)

__all__ = ["run_cli", "main"]

RECORDS_ENV = "RUNRISK_RECORDS"

SWEEP_COLUMNS = (
    "period",
    "lambda_max",
    "impact",
    "transforms",
    "w",
    "gamma",
    "step",
    "liquidity",
    "solvency",
    "realized_leverage",
)


class CliInputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line diagnostics, exit code 1
        raise CliInputError(message)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return format(value, ".6g")
    return str(value)


def _json_safe(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(format(value, ".6g"))
    return value


def _emit(rows: list[dict], columns: tuple[str, ...], fmt: str, output: str | None) -> None:
    if fmt == "json":
        payload = [
            {key: _json_safe(row.get(key)) for key in columns} for row in rows
        ]
        text = json.dumps(payload, indent=2) + "\n"
    elif fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(key)) for key in columns])
        text = buffer.getvalue()
    else:
        cells = [[_fmt(row.get(key)) for key in columns] for row in rows]
        widths = [
            max(len(columns[i]), *(len(row[i]) for row in cells)) if cells else len(columns[i])
            for i in range(len(columns))
        ]
        lines = ["  ".join(name.ljust(widths[i]) for i, name in enumerate(columns)).rstrip()]
        lines += ["  ".join(row[i].ljust(widths[i]) for i in range(len(columns))).rstrip() for row in cells]
        text = "\n".join(lines) + "\n"
    if output:
        with open(output, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise CliInputError(f"bad number list {text!r}: {exc}") from None


def _parse_grid(text: str) -> list[float]:
    """Grid spec: either a comma list or start:stop:step (inclusive)."""
    if ":" in text:
        try:
            start, stop, step = (float(part) for part in text.split(":"))
        except ValueError as exc:
            raise CliInputError(f"bad grid spec {text!r}: {exc}") from None
        if step <= 0 or stop < start:
            raise CliInputError(f"bad grid spec {text!r}: need start <= stop and step > 0")
        count = int((stop - start) / step + 1e-9)
        return [start + i * step for i in range(count + 1)]
    return _parse_floats(text)


def _parse_sheet(text: str) -> BalanceSheet:
    keys = {"x": "cash", "s": "afs", "h": "htm", "ell": "nonmarketable",
            "p": "price", "li": "insured", "lu": "uninsured"}
    values = {}
    for part in filter(None, (piece.strip() for piece in text.split(","))):
        key, _, raw = part.partition("=")
        if key not in keys:
            raise CliInputError(f"unknown sheet field {key!r} (use {','.join(keys)})")
        try:
            values[keys[key]] = float(raw)
        except ValueError:
            raise CliInputError(f"bad sheet value {part!r}") from None
    missing = [short for short, long in keys.items() if long not in values and long != "price"]
    if missing:
        raise CliInputError(f"sheet spec missing fields: {','.join(missing)}")
    return BalanceSheet(**values)


def _load_config(path: str) -> dict:
    try:
        with open(path) as handle:
            config = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(config, dict):
        raise CliInputError(f"config {path!r} must hold a JSON object")
    return config


def _merge_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    config = _load_config(args.config)
    for key, value in config.items():
        dest = "leverage" if key == "lambda" else key.replace("-", "_")
        if not hasattr(args, dest):
            raise CliInputError(f"config key {key!r} is not an option of this subcommand")
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def _records_from(args: argparse.Namespace):
    path = getattr(args, "records", None) or os.environ.get(RECORDS_ENV)
    if path:
        return load_records(path)
    return svb_records()


def _result_row(period: str, lev: float, impact_label: str, transform_label: str,
                result: ClearingResult) -> dict:
    return {
        "period": period,
        "lambda_max": lev,
        "impact": impact_label,
        "transforms": transform_label,
        "w": result.withdrawals,
        "gamma": result.sold,
        "step": result.step,
        "liquidity": result.liquidity.value,
        "solvency": result.solvency.value,
        "realized_leverage": result.realized.leverage,
    }


def build_parser() -> _Parser:
    parser = _Parser(prog="runrisk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, records=True):
        if records:
            p.add_argument("--records", help=f"record CSV (default ${RECORDS_ENV}, then bundled SVB)")
        p.add_argument("--format", choices=("table", "csv", "json"), default=None)
        p.add_argument("--output", help="write the table to this file instead of stdout")
        p.add_argument("--config", help="JSON config file; explicit flags win")

    p = sub.add_parser("validate", help="validate records, sheets, and admissibility")
    common(p)
    p.add_argument("--impact", action="append", help="impact spec, e.g. linear:p=1,b=0.0005")
    p.add_argument("--lambda", dest="leverage", help="comma list of leverage thresholds")
    p.add_argument("--strict", action="store_true", help="treat warnings as errors")

    p = sub.add_parser("clear", help="clear one balance sheet")
    common(p)
    p.add_argument("--period", help="record period to clear")
    p.add_argument("--sheet", help="explicit sheet, e.g. x=10,s=40,h=20,ell=30,p=1,li=54,lu=30")
    p.add_argument("--lambda", dest="leverage", help="leverage threshold (default 7.5)")
    p.add_argument("--impact", help="impact spec (default linear:b=0.0005)")
    p.add_argument("--transforms", help="plus-separated transform chain (record periods only)")
    p.add_argument("--method", choices=("algorithm", "fixed-point"), default=None)
    p.add_argument("--max-iter", type=int, default=None, help="iteration cap for fixed-point")
    p.add_argument("--strict", action="store_true")

    p = sub.add_parser("sweep", help="clear the scenario grid")
    common(p)
    p.add_argument("--lambda", dest="leverage", help="comma list (default 7.5)")
    p.add_argument("--impact", action="append", help="impact spec, repeatable")
    p.add_argument("--transforms", action="append",
                   help="transform chain, repeatable; 'baseline' for none")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--figures", help="directory for rendered charts")

    p = sub.add_parser("optimize-htm", help="optimal AfS/HtM split per period")
    common(p)
    p.add_argument("--lambda", dest="leverage", help="leverage threshold (default 7.5)")
    p.add_argument("--b", dest="elasticity", help="linear impact elasticity (default 0.0005)")
    p.add_argument("--p1-grid", help="shock grid, list or start:stop:step (default 0.5:0.9975:0.0025)")
    p.add_argument("--figures", help="directory for rendered charts")

    p = sub.add_parser("implied-shock", help="smallest shock consistent with observed HtM")
    common(p)
    p.add_argument("--lambda", dest="leverage", help="leverage threshold (default 6.5)")
    p.add_argument("--b", dest="elasticity", help="linear impact elasticity (default 0.0005)")
    p.add_argument("--p1-grid", help="shock grid (default 0.5:0.9975:0.0025)")

    p = sub.add_parser("min-lambda", help="minimal no-sale leverage threshold per period")
    common(p)
    p.add_argument("--figures", help="directory for rendered charts")

    return parser


def _cmd_validate(args) -> int:
    records = _records_from(args)
    leverages = _parse_floats(args.leverage) if args.leverage else []
    impacts = [ImpactSpec.parse(text) for text in (args.impact or [])]
    rows, failed = [], False
    for rec in records:
        sheet = calibrate(rec)
        problems = validate(sheet)
        notes = sheet_warnings(sheet)
        for spec in impacts:
            impact = spec.build(spec.initial_price or sheet.price, sheet.marketable)
            for lev in leverages or [7.5]:
                warning = impact.admissibility_warning(sheet.marketable, lev)
                if warning:
                    notes.append(warning)
        status = "invalid" if problems else ("warnings" if notes else "ok")
        failed = failed or bool(problems) or (args.strict and bool(notes))
        rows.append({"period": rec.period, "status": status,
                     "detail": "; ".join(problems + notes)})
    _emit(rows, ("period", "status", "detail"), args.format or "table", args.output)
    return 1 if failed else 0


def _cmd_clear(args) -> int:
    leverage = float(args.leverage) if args.leverage else 7.5
    spec = ImpactSpec.parse(args.impact) if args.impact else ImpactSpec("linear", 0.0005)
    if args.sheet and args.period:
        raise CliInputError("give either --period or --sheet, not both")
    if args.sheet:
        sheet = _parse_sheet(args.sheet)
        period = "custom"
    elif args.period:
        records = _records_from(args)
        matches = [rec for rec in records if rec.period == args.period]
        if not matches:
            raise CliInputError(f"period {args.period!r} not found in the records")
        rec = matches[0]
        sheet = apply_chain(calibrate(rec), rec, parse_chain(args.transforms or ""))
        period = rec.period
    else:
        raise CliInputError("clear needs --period or --sheet")
    if spec.initial_price is not None and spec.initial_price != sheet.price:
        sheet = replace(sheet, price=spec.initial_price)
    impact = spec.build(sheet.price, sheet.marketable)

    if (args.method or "algorithm") == "fixed-point":
        kwargs = {"max_iter": args.max_iter} if args.max_iter else {}
        w, sold = clear_fixed_point(sheet, impact, leverage, **kwargs)
        result = ClearingResult(
            withdrawals=w,
            sold=sold,
            step=infer_step(sheet, impact, leverage, w, sold),
            liquidity=classify_liquidity(sheet, impact, w),
            solvency=check_solvency(sheet, impact, sold),
            realized=realized_state(sheet, impact, w, sold),
            max_leverage=leverage,
        )
    else:
        result = clear_algorithm(sheet, impact, leverage, strict=args.strict)
    rows = [_result_row(period, leverage, spec.label(), args.transforms or "baseline", result)]
    _emit(rows, SWEEP_COLUMNS, args.format or "table", args.output)
    return 0


def _cmd_sweep(args) -> int:
    records = _records_from(args)
    leverages = _parse_floats(args.leverage) if args.leverage else [7.5]
    impact_texts = args.impact or ["linear:p=1,b=0.0005"]
    specs = [ImpactSpec.parse(text) for text in impact_texts]
    chains = [parse_chain(text) for text in (args.transforms or ["baseline"])]
    cells = sweep(records, leverages, specs, chains, strict=args.strict)
    rows = [
        _result_row(c.period, c.max_leverage, c.impact_label, c.transform_label, c.result)
        for c in cells
    ]
    _emit(rows, SWEEP_COLUMNS, args.format or "table", args.output)
    if args.figures:
        from . import figures

        figures.render_sweep(cells, args.figures, metric="withdrawals")
        figures.render_sweep(cells, args.figures, metric="sold")
    return 0


def _cmd_optimize_htm(args) -> int:
    records = _records_from(args)
    leverage = float(args.leverage) if args.leverage else 7.5
    elasticity = float(args.elasticity) if args.elasticity else 0.0005
    grid = _parse_grid(args.p1_grid or "0.5:0.9975:0.0025")
    rows, profiles = [], []
    for rec in records:
        shell = HtmShell.from_balance_sheet(calibrate(rec))
        profile = optimal_htm_profile(shell, grid, leverage, elasticity)
        profiles.append((rec.period, rec.htm, profile))
        for p1, decision in profile:
            rows.append({
                "period": rec.period,
                "p1": p1,
                "s_star": decision.afs,
                "h_star": decision.htm,
                "case": decision.case.value,
                "binding": decision.binding.value if decision.binding else "",
            })
    _emit(rows, ("period", "p1", "s_star", "h_star", "case", "binding"),
          args.format or "table", args.output)
    if args.figures:
        from . import figures

        figures.render_htm_profile(profiles, args.figures)
    return 0


def _cmd_implied_shock(args) -> int:
    records = _records_from(args)
    leverage = float(args.leverage) if args.leverage else 6.5
    elasticity = float(args.elasticity) if args.elasticity else 0.0005
    grid = _parse_grid(args.p1_grid or "0.5:0.9975:0.0025")
    rows = []
    for rec in records:
        shell = HtmShell.from_balance_sheet(calibrate(rec))
        shock = implied_shock(shell, rec.htm, leverage, elasticity, grid)
        rows.append({
            "period": rec.period,
            "lambda_max": leverage,
            "observed_htm": rec.htm,
            "implied_p1": shock if shock is not None else "none",
        })
    _emit(rows, ("period", "lambda_max", "observed_htm", "implied_p1"),
          args.format or "table", args.output)
    return 0


def _cmd_min_lambda(args) -> int:
    records = _records_from(args)
    series = []
    for rec in records:
        shell = HtmShell.from_balance_sheet(calibrate(rec))
        series.append((rec.period, min_lambda_no_sale(shell)))
    rows = [{"period": period, "min_lambda": value} for period, value in series]
    _emit(rows, ("period", "min_lambda"), args.format or "table", args.output)
    if args.figures:
        from . import figures

        figures.render_min_lambda(series, args.figures)
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "clear": _cmd_clear,
    "sweep": _cmd_sweep,
    "optimize-htm": _cmd_optimize_htm,
    "implied-shock": _cmd_implied_shock,
    "min-lambda": _cmd_min_lambda,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _merge_config(args)
        return _COMMANDS[args.command](args)
    except CliInputError as exc:
        print(f"runrisk: error: {exc}", file=sys.stderr)
        return 1
    except (RecordError, ValueError, OSError) as exc:
        print(f"runrisk: error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"runrisk: non-convergence: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
