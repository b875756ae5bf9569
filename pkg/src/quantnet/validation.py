"""Input validation helpers used across the package."""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ShapeError


def require_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {what}")


def as_float_matrix(values, what: str) -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{what} must be 2-D, got shape {arr.shape}")
    return arr


def check_matrix_shape(arr: np.ndarray, shape: tuple[int, int], what: str) -> None:
    if arr.shape != shape:
        raise ShapeError(f"{what} has shape {arr.shape}, expected {shape}")


def check_vector(arr: np.ndarray, length: int, what: str) -> None:
    if arr.ndim != 1 or arr.shape[0] != length:
        raise ShapeError(f"{what} has shape {arr.shape}, expected ({length},)")


def check_panel(panel) -> None:
    """Validate ReturnsPanel invariants; raises on violation."""
    from .panels import ReturnsPanel  # local import to avoid a cycle

    if not isinstance(panel, ReturnsPanel):
        raise ShapeError(f"expected ReturnsPanel, got {type(panel).__name__}")
    r = panel.returns
    n, t = r.shape
    if n < 1 or t < 2:
        raise ShapeError(f"panel {panel.market_id}: needs n >= 1 assets and T >= 2, got {r.shape}")
    if len(panel.asset_ids) != n:
        raise ShapeError(f"panel {panel.market_id}: {len(panel.asset_ids)} asset ids for {n} rows")
    if len(panel.dates) != t:
        raise ShapeError(f"panel {panel.market_id}: {len(panel.dates)} dates for {t} columns")
    require_finite(r, f"panel {panel.market_id}")
    for a, b in zip(panel.dates, panel.dates[1:]):
        if not a < b:
            raise ShapeError(f"panel {panel.market_id}: dates not strictly increasing at {b}")


def check_signals_match(signals, panel) -> None:
    """Signals must be shaped like, and bounded for, the panel they came from."""
    from .signals import SignalMatrix

    if not isinstance(signals, SignalMatrix):
        raise ShapeError(f"expected SignalMatrix, got {type(signals).__name__}")
    if signals.values.shape != panel.returns.shape:
        raise ShapeError(
            f"signals shape {signals.values.shape} does not match panel {panel.returns.shape}"
        )
    if np.any(np.abs(signals.values) > 1.0):
        raise ShapeError("signals exceed [-1, 1]")
