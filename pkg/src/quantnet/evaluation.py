"""Backtest driver: strategy -> signals -> pnl -> metric report.

The pnl convention is shared with the training objective (same-day
x = s * r), so a Sharpe computed here matches sharpe_per_asset on the same
window exactly. Warm-up or pre-evaluation columns are cut before metrics:
the scored span starts at max(signals.first_active, eval_start).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, ShapeError
from .metrics import MetricsReport
from .panels import ReturnsPanel
from .signals import SignalMatrix
from .stats import ks_test, rank_sum_test
from .validation import check_signals_match


@dataclass
class BacktestResult:
    market_id: str
    signals: SignalMatrix
    start: int  # first scored column of the panel
    dates: list[str]  # dates of the scored span
    pnl: np.ndarray  # (n_assets, T - start)
    report: MetricsReport


def backtest(strategy, panel: ReturnsPanel, eval_start: int | None = None) -> BacktestResult:
    """Run one strategy over one panel and score the active span.

    ``eval_start`` is the train/validation boundary: stateful models reset
    there, and scoring never starts earlier even for strategies that warm up
    sooner, so every strategy is measured on the same columns.
    """
    signals = strategy.predict(panel, eval_start=eval_start)
    check_signals_match(signals, panel)
    start = max(signals.first_active, eval_start or 0)
    if start >= panel.n_obs - 1:
        raise InsufficientDataError(
            f"market {panel.market_id}: no scorable columns after warm-up "
            f"(start {start} of {panel.n_obs})"
        )
    pnl = signals.values[:, start:] * panel.returns[:, start:]
    report = MetricsReport.from_pnl(panel.market_id, list(panel.asset_ids), pnl)
    return BacktestResult(
        market_id=panel.market_id,
        signals=signals,
        start=start,
        dates=list(panel.dates[start:]),
        pnl=pnl,
        report=report,
    )


def write_pnl_csv(result: BacktestResult, path: str | Path) -> None:
    """Scored span only: header date,<asset>,... one row per date."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(result.signals.asset_ids))
        for j, d in enumerate(result.dates):
            writer.writerow([d] + [repr(float(v)) for v in result.pnl[:, j]])


def sharpe_samples(results: list[BacktestResult]) -> np.ndarray:
    """Per-asset Sharpe ratios pooled across markets, in market-id order."""
    if not results:
        raise ShapeError("no backtest results to pool")
    parts = [r.report.metric("sharpe") for r in sorted(results, key=lambda r: r.market_id)]
    return np.concatenate(parts)


def compare_strategies(
    results_a: list[BacktestResult], results_b: list[BacktestResult]
) -> dict:
    """Rank-sum and KS tests between two strategies' per-asset Sharpe pools."""
    a = sharpe_samples(results_a)
    b = sharpe_samples(results_b)
    w, p_w = rank_sum_test(a, b)
    d, p_d = ks_test(a, b)
    return {
        "n_a": int(a.size),
        "n_b": int(b.size),
        "mean_sharpe_a": float(a.mean()),
        "mean_sharpe_b": float(b.mean()),
        "rank_sum": {"W": w, "p_value": p_w},
        "ks": {"D": d, "p_value": p_d},
    }
