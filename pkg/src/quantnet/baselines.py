"""Classical benchmark strategies: pure, stateless signal generators.

All four are causal: the signal at column t is a function of returns strictly
before t (buy-and-hold is a constant, so the point is moot there). Trailing
statistics use the window [t-lookback, t), and columns before the first
complete window are zero (warm-up; ``first_active`` marks the boundary).

Estimator shape: ``fit`` is a no-op returning self (nothing to learn),
``predict(panel)`` emits the SignalMatrix. Hyperparameters live on the
constructor in the scikit-learn style, so ``get_params``/``clone`` work.
"""

from __future__ import annotations

import math

import numpy as np

from .base import ParamsMixin
from .errors import ConfigError, InsufficientDataError
from .panels import ReturnsPanel
from .signals import SignalMatrix
from .validation import check_panel

VOL_FLOOR = 1e-8


def quantile_linear(sorted_values, q: float) -> float:
    """Quantile by linear interpolation on sorted order statistics.

    h = (n-1) q; result = x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)]).
    The expression is pinned so independent reimplementations agree bitwise.
    """
    n = len(sorted_values)
    if n == 0:
        raise ConfigError("quantile of empty sample")
    h = (n - 1) * q
    lo = int(math.floor(h))
    if lo >= n - 1:
        return float(sorted_values[n - 1])
    frac = h - lo
    return float(sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]))


def _rolling_sums(x: np.ndarray, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Trailing-window sums of x and x^2 for every t >= w.

    Returns (s1, s2), each shaped (n, T-w): column j covers window [j, j+w),
    i.e. the stats that are current at t = w+j.
    """
    n, t = x.shape
    zero = np.zeros((n, 1))
    cs1 = np.hstack([zero, np.cumsum(x, axis=1)])
    cs2 = np.hstack([zero, np.cumsum(x * x, axis=1)])
    s1 = cs1[:, w:t] - cs1[:, : t - w]
    s2 = cs2[:, w:t] - cs2[:, : t - w]
    return s1, s2


def _check_lookback(panel: ReturnsPanel, lookback: int) -> None:
    if not isinstance(lookback, (int, np.integer)) or lookback < 2:
        raise ConfigError(f"lookback must be an integer >= 2, got {lookback!r}")
    if panel.n_obs <= lookback:
        raise InsufficientDataError(
            f"panel {panel.market_id}: T={panel.n_obs} leaves no complete "
            f"lookback-{lookback} window"
        )


class BuyAndHold(ParamsMixin):
    """Hold one unit of every asset: s = 1 everywhere."""

    def fit(self, panels=None, y=None):
        return self

    def predict(self, panel: ReturnsPanel, eval_start: int | None = None) -> SignalMatrix:
        check_panel(panel)
        return SignalMatrix(
            market_id=panel.market_id,
            asset_ids=list(panel.asset_ids),
            dates=list(panel.dates),
            values=np.ones_like(panel.returns),
            first_active=0,
        )


class RiskParity(ParamsMixin):
    """Inverse-volatility weights over a trailing window.

    w_j = (1/sigma_j) / sum_k (1/sigma_k), sigma_j the sample standard
    deviation of asset j over [t-lookback, t), floored at 1e-8 before
    inversion. Weights sum to 1 at every active t.
    """

    def __init__(self, lookback: int = 252):
        self.lookback = lookback

    def fit(self, panels=None, y=None):
        return self

    def predict(self, panel: ReturnsPanel, eval_start: int | None = None) -> SignalMatrix:
        check_panel(panel)
        w = self.lookback
        _check_lookback(panel, w)
        x = panel.returns
        s1, s2 = _rolling_sums(x, w)
        mean = s1 / w
        ss = s2 - s1 * mean  # sum of squared deviations, algebraically
        var = ss / (w - 1)
        sigma = np.sqrt(np.maximum(var, 0.0))
        inv = 1.0 / np.maximum(sigma, VOL_FLOOR)
        weights = inv / inv.sum(axis=0)
        values = np.zeros_like(x)
        values[:, w:] = weights
        return SignalMatrix(
            market_id=panel.market_id,
            asset_ids=list(panel.asset_ids),
            dates=list(panel.dates),
            values=values,
            first_active=w,
        )


class TimeSeriesMomentum(ParamsMixin):
    """Signal = trailing mean return, clamped to [-1, 1]."""

    def __init__(self, lookback: int = 252):
        self.lookback = lookback

    def fit(self, panels=None, y=None):
        return self

    def predict(self, panel: ReturnsPanel, eval_start: int | None = None) -> SignalMatrix:
        check_panel(panel)
        w = self.lookback
        _check_lookback(panel, w)
        x = panel.returns
        s1, _ = _rolling_sums(x, w)
        mu = s1 / w
        values = np.zeros_like(x)
        values[:, w:] = np.clip(mu, -1.0, 1.0)
        return SignalMatrix(
            market_id=panel.market_id,
            asset_ids=list(panel.asset_ids),
            dates=list(panel.dates),
            values=values,
            first_active=w,
        )


class CrossSectionalMomentum(ParamsMixin):
    """Long recent winners, short recent losers, by trailing-mean quantiles.

    Per date: mu_j > Q_{1-q} gets s = clamp(mu_j); mu_j < Q_q gets
    s = clamp(-mu_j) (note the literal sign convention: a loser with negative
    trailing mean receives a positive signal); everything else 0. Strict
    inequalities, so a flat cross-section emits nothing.
    """

    def __init__(self, lookback: int = 252, q: float = 0.33):
        self.lookback = lookback
        self.q = q

    def fit(self, panels=None, y=None):
        return self

    def predict(self, panel: ReturnsPanel, eval_start: int | None = None) -> SignalMatrix:
        check_panel(panel)
        w = self.lookback
        q = self.q
        _check_lookback(panel, w)
        if not (0.0 < q < 0.5):
            raise ConfigError(f"q must lie in (0, 0.5), got {q!r}")
        if panel.n_assets < 2:
            raise ConfigError("cross-sectional momentum needs at least 2 assets")
        x = panel.returns
        s1, _ = _rolling_sums(x, w)
        mu = s1 / w
        clipped = np.clip(mu, -1.0, 1.0)
        values = np.zeros_like(x)
        for j in range(mu.shape[1]):
            col = mu[:, j]
            order = np.sort(col)
            hi = quantile_linear(order, 1.0 - q)
            lo = quantile_linear(order, q)
            long_leg = col > hi
            short_leg = col < lo
            out = values[:, w + j]
            out[long_leg] = clipped[long_leg, j]
            out[short_leg] = -clipped[short_leg, j]
        return SignalMatrix(
            market_id=panel.market_id,
            asset_ids=list(panel.asset_ids),
            dates=list(panel.dates),
            values=values,
            first_active=w,
        )


BASELINES = {
    "buy_and_hold": BuyAndHold,
    "risk_parity": RiskParity,
    "ts_momentum": TimeSeriesMomentum,
    "cs_momentum": CrossSectionalMomentum,
}
