"""Performance metrics over daily pnl series.

All formulas operate on the same-day pnl convention x_t = s_t * r_t and are
written out explicitly because every vendor library picks slightly different
ones. Choices here: population standard deviation, non-excess kurtosis,
drawdowns on the compounded curve prod(1+x) measured from unit starting
capital, and a 1e-8 floor on every denominator so an all-zero pnl row yields
all-zero ratios instead of NaN.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .panels import TRADING_DAYS
from .validation import as_float_matrix

DENOM_FLOOR = 1e-8

METRIC_NAMES = (
    "ann_ret",
    "ann_vol",
    "sharpe",
    "calmar",
    "sortino",
    "downside_risk",
    "max_drawdown",
    "skew",
    "kurtosis",
)

AGGREGATE_NAMES = ("mean", "sd", "median", "mad")

_ANN = math.sqrt(float(TRADING_DAYS))


def max_drawdown(x: np.ndarray) -> float:
    """Largest peak-to-trough decline of prod(1+x), starting from capital 1."""
    curve = np.cumprod(1.0 + np.asarray(x, dtype=np.float64))
    peak = np.maximum.accumulate(np.concatenate(([1.0], curve)))[1:]
    return float(np.min(curve / peak - 1.0))


def asset_metrics(x: np.ndarray) -> dict[str, float]:
    """All nine metrics of one pnl series, keyed by METRIC_NAMES."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ShapeError(f"pnl series must be a vector of length >= 2, got {x.shape}")
    mean = float(x.mean())
    dev = x - mean
    var = float((dev * dev).mean())
    sd = math.sqrt(var)
    ann_ret = mean * TRADING_DAYS
    ann_vol = sd * _ANN
    sharpe = mean / max(sd, DENOM_FLOOR) * _ANN
    neg = np.minimum(x, 0.0)
    downside = math.sqrt(float((neg * neg).mean())) * _ANN
    sortino = ann_ret / max(downside, DENOM_FLOOR)
    mdd = max_drawdown(x)
    calmar = ann_ret / max(abs(mdd), DENOM_FLOOR)
    sd_f = max(sd, DENOM_FLOOR)
    skew = float((dev**3).mean()) / sd_f**3
    kurt = float((dev**4).mean()) / sd_f**4
    return {
        "ann_ret": ann_ret,
        "ann_vol": ann_vol,
        "sharpe": sharpe,
        "calmar": calmar,
        "sortino": sortino,
        "downside_risk": downside,
        "max_drawdown": mdd,
        "skew": skew,
        "kurtosis": kurt,
    }


def aggregate(values: np.ndarray) -> dict[str, float]:
    """Mean/SD (population) and median/MAD (mean abs deviation about the median)."""
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    sd = float(np.sqrt(((v - mean) ** 2).mean()))
    med = float(np.median(v))
    mad = float(np.abs(v - med).mean())
    return {"mean": mean, "sd": sd, "median": med, "mad": mad}


@dataclass
class MetricsReport:
    """Per-asset metric table plus cross-asset aggregates for one strategy run."""

    market_id: str
    asset_ids: list[str]
    table: np.ndarray  # (n_assets, len(METRIC_NAMES))

    @classmethod
    def from_pnl(cls, market_id: str, asset_ids: list[str], pnl: np.ndarray) -> "MetricsReport":
        pnl = as_float_matrix(pnl, "pnl")
        if pnl.shape[0] != len(asset_ids):
            raise ShapeError(f"{len(asset_ids)} asset ids vs {pnl.shape[0]} pnl rows")
        rows = np.empty((pnl.shape[0], len(METRIC_NAMES)))
        for j in range(pnl.shape[0]):
            m = asset_metrics(pnl[j])
            rows[j] = [m[name] for name in METRIC_NAMES]
        return cls(market_id=market_id, asset_ids=list(asset_ids), table=rows)

    def metric(self, name: str) -> np.ndarray:
        return self.table[:, METRIC_NAMES.index(name)]

    def aggregates(self) -> dict[str, dict[str, float]]:
        return {name: aggregate(self.metric(name)) for name in METRIC_NAMES}

    def write_csv(self, path: str | Path) -> None:
        """One row per asset; floats via repr so reloads are exact."""
        lines = ["asset_id," + ",".join(METRIC_NAMES)]
        for j, aid in enumerate(self.asset_ids):
            lines.append(aid + "," + ",".join(repr(float(v)) for v in self.table[j]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def write_json(self, path: str | Path) -> None:
        payload = {
            "market_id": self.market_id,
            "n_assets": len(self.asset_ids),
            "aggregates": self.aggregates(),
        }
        text = json.dumps(payload, separators=(",", ":"), allow_nan=False)
        Path(path).write_text(text + "\n", encoding="utf-8")
