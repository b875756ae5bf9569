"""Cross-market trading models with a shared transfer bottleneck.

Per-market encoder/decoder networks pass through one market-agnostic
transfer map, trained end to end on an annualized-Sharpe objective, next to
classical baselines, a backtest engine, and a command line pipeline.

Attribute access is lazy (PEP 562) so the CLI can apply the QUANTNET_THREADS
cap to the BLAS environment before numpy first loads.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "ReturnsPanel": "panels",
    "PanelSplit": "panels",
    "ingest_csv": "panels",
    "split_holdout": "panels",
    "load_panel_dir": "panels",
    "write_panel_dir": "panels",
    "SynthSpec": "synthetic",
    "generate_synth": "synthetic",
    "SignalMatrix": "signals",
    "BuyAndHold": "baselines",
    "RiskParity": "baselines",
    "TimeSeriesMomentum": "baselines",
    "CrossSectionalMomentum": "baselines",
    "BASELINES": "baselines",
    "ArchSpec": "model",
    "QuantNetModel": "model",
    "NoTransferModel": "model",
    "eval_signal_matrix": "model",
    "model_from_payload": "model",
    "sharpe_per_asset": "objective",
    "quantnet_loss": "objective",
    "loss_backward": "objective",
    "AmsGrad": "optim",
    "TrainConfig": "trainer",
    "SearchSpace": "trainer",
    "train": "trainer",
    "random_search": "trainer",
    "build_model": "trainer",
    "QuantNetStrategy": "strategies",
    "NoTransferStrategy": "strategies",
    "MetricsReport": "metrics",
    "asset_metrics": "metrics",
    "backtest": "evaluation",
    "compare_strategies": "evaluation",
    "rank_sum_test": "stats",
    "ks_test": "stats",
    "factor_regression": "stats",
    "load_factors": "stats",
    "cluster_markets": "cluster",
    "RunManifest": "manifest",
    "render_report": "report",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name: str):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(importlib.import_module(f".{module}", __name__), name)


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
