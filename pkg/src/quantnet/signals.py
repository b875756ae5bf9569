"""Strategy output container.

A SignalMatrix is shaped exactly like the panel it was computed from, entries
in [-1, 1]. ``first_active`` marks the first column with live signals; columns
before it are warm-up zeros (trailing-window strategies) or pre-evaluation
placeholders (stateful models), and evaluation skips them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class SignalMatrix:
    market_id: str
    asset_ids: list[str]
    dates: list[str]
    values: np.ndarray  # (n, T) float64, entries in [-1, 1]
    first_active: int = 0


def write_signals_csv(signals: SignalMatrix, path: str | Path) -> None:
    """Same layout as a panel CSV: header date,<asset>,... one row per date."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(signals.asset_ids))
        for j, d in enumerate(signals.dates):
            writer.writerow([d] + [repr(float(v)) for v in signals.values[:, j]])
