"""Matplotlib renderings of sweep results, written to files next to the tables.

Each sweep figure shows one group of bars per period, one bar per scenario
combination (leverage threshold, impact parameterization, transform chain).
Bar heights are equilibrium withdrawals or sales, bar colors encode which of
the six clearing branches produced the solution, and insolvent outcomes are
overpainted grey (still liquid) or black (also illiquid).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Patch

from .clearing import Liquidity, Solvency
from .htm_optimizer import HtmDecision
from .scenario import SweepCell

__all__ = ["render_sweep", "render_min_lambda", "render_htm_profile"]

STEP_COLORS = {
    1: "#2ca02c",  # covered by cash
    2: "#9edae5",  # AfS sales, threshold binds
    3: "#1f77b4",  # AfS sales, all uninsured gone
    4: "#ffbb78",  # HtM re-marked, threshold binds
    5: "#ff7f0e",  # HtM re-marked, all uninsured gone
    6: "#d62728",  # illiquid
}
INSOLVENT_LIQUID = "#7f7f7f"
INSOLVENT_ILLIQUID = "#000000"


def _bar_color(cell: SweepCell) -> str:
    if cell.result.solvency is Solvency.INSOLVENT:
        if cell.result.liquidity is Liquidity.ILLIQUID:
            return INSOLVENT_ILLIQUID
        return INSOLVENT_LIQUID
    return STEP_COLORS[cell.result.step]


def render_sweep(cells: list[SweepCell], directory, metric: str = "withdrawals") -> Path:
    """Grouped bar chart of a sweep; returns the written file path."""
    if metric not in ("withdrawals", "sold"):
        raise ValueError(f"metric must be 'withdrawals' or 'sold', got {metric!r}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    periods = list(dict.fromkeys(cell.period for cell in cells))
    combos = list(
        dict.fromkeys(
            (cell.max_leverage, cell.impact_label, cell.transform_label) for cell in cells
        )
    )
    lookup = {
        (cell.period, cell.max_leverage, cell.impact_label, cell.transform_label): cell
        for cell in cells
    }

    width = 0.8 / max(len(combos), 1)
    fig, ax = plt.subplots(figsize=(max(8.0, 1.0 + 0.9 * len(periods)), 4.5))
    for k, combo in enumerate(combos):
        offsets, heights, colors = [], [], []
        for i, period in enumerate(periods):
            cell = lookup.get((period, *combo))
            if cell is None:
                continue
            offsets.append(i + (k - 0.5 * (len(combos) - 1)) * width)
            heights.append(getattr(cell.result, metric))
            colors.append(_bar_color(cell))
        ax.bar(offsets, heights, width=width, color=colors, edgecolor="white", linewidth=0.3)

    ax.set_xticks(range(len(periods)))
    ax.set_xticklabels(periods, rotation=45, ha="right")
    ax.set_ylabel(
        "equilibrium withdrawals (USD bn)" if metric == "withdrawals" else "equilibrium sales (units)"
    )
    if len(combos) > 1:
        ax.set_title(
            "bars per period: "
            + ", ".join(f"lam={lev:g} {imp} {tr}" for lev, imp, tr in combos)[:220],
            fontsize=7,
        )
    handles = [Patch(color=color, label=f"step {step}") for step, color in STEP_COLORS.items()]
    handles.append(Patch(color=INSOLVENT_LIQUID, label="insolvent (liquid)"))
    handles.append(Patch(color=INSOLVENT_ILLIQUID, label="insolvent (illiquid)"))
    ax.legend(handles=handles, fontsize=7, ncol=4, loc="upper left")
    fig.tight_layout()
    path = directory / f"sweep_{metric}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_min_lambda(series: list[tuple[str, float]], directory) -> Path:
    """Line chart of the minimal no-sale leverage threshold per period."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    periods = [period for period, _ in series]
    values = [value for _, value in series]
    fig, ax = plt.subplots(figsize=(max(8.0, 1.0 + 0.7 * len(periods)), 4.0))
    ax.plot(range(len(periods)), values, marker="o", color="#1f77b4")
    ax.set_xticks(range(len(periods)))
    ax.set_xticklabels(periods, rotation=45, ha="right")
    ax.set_ylabel("smallest leverage threshold with no equilibrium sales")
    fig.tight_layout()
    path = directory / "min_lambda.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_htm_profile(
    profiles: list[tuple[str, float, list[tuple[float, HtmDecision]]]], directory
) -> Path:
    """Optimal HtM per period over the shock-price grid, observed HtM dashed.

    ``profiles`` holds (period, observed_htm, [(shock_price, decision), ...]).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    periods = [period for period, _, _ in profiles]
    fig, ax = plt.subplots(figsize=(max(8.0, 1.0 + 0.9 * len(periods)), 4.5))
    scatter = None
    for i, (_, _, profile) in enumerate(profiles):
        prices = [p for p, _ in profile]
        optima = [decision.htm for _, decision in profile]
        scatter = ax.scatter(
            [i] * len(profile), optima, c=prices, cmap="viridis", vmin=0.0, vmax=1.0, s=14
        )
    observed = [observed_htm for _, observed_htm, _ in profiles]
    ax.plot(range(len(periods)), observed, "k--", label="observed HtM")
    if scatter is not None:
        fig.colorbar(scatter, ax=ax, label="shock price")
    ax.set_xticks(range(len(periods)))
    ax.set_xticklabels(periods, rotation=45, ha="right")
    ax.set_ylabel("optimal HtM (USD bn)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = directory / "optimal_htm.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
