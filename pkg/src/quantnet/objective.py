"""Training objective: annualized per-asset Sharpe, averaged, negated.

The pnl convention is same-day: x_{j,t} = s_{j,t} * r_{j,t}, where the signal
at column t was computed from returns up to t-1. The per-asset score is

    rho_j = mean(x_j) / popstd(x_j) * sqrt(252)

with the population standard deviation (divide by k, not k-1) and a floor of
1e-8 on the denominator. The loss averages rho over assets within a market,
then over markets, and flips the sign so the trainer can minimize.

When the floor binds, the gradient flows through the mean only; the std is
treated as the constant 1e-8 there.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import ShapeError
from .panels import TRADING_DAYS
from .validation import as_float_matrix

SHARPE_FLOOR = 1e-8

_ANNUALIZER = math.sqrt(float(TRADING_DAYS))


def strategy_pnl(signals: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """Same-day pnl matrix x = signals * returns, shapes checked."""
    s = as_float_matrix(signals, "signals")
    r = as_float_matrix(returns, "returns")
    if s.shape != r.shape:
        raise ShapeError(f"signals {s.shape} vs returns {r.shape}")
    return s * r


def _moments(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise mean, population variance and std of a pnl matrix."""
    mean = x.mean(axis=1)
    dev = x - mean[:, None]
    var = (dev * dev).mean(axis=1)
    return mean, var, np.sqrt(var)


def sharpe_per_asset(signals: np.ndarray, returns: np.ndarray) -> np.ndarray:
    """Annualized Sharpe of each asset's pnl series over the window.

    Parameters
    ----------
    signals, returns : (n, k) matrices, k >= 2.

    Returns
    -------
    (n,) vector of mean/popstd * sqrt(252), denominator floored at 1e-8.
    """
    x = strategy_pnl(signals, returns)
    if x.shape[1] < 2:
        raise ShapeError(f"window of length {x.shape[1]} has no spread")
    mean, _, sd = _moments(x)
    denom = np.maximum(sd, SHARPE_FLOOR)
    return mean / denom * _ANNUALIZER


def quantnet_loss(
    all_signals: Sequence[np.ndarray], all_returns: Sequence[np.ndarray]
) -> float:
    """Negative mean Sharpe: -(1/N) sum_i (1/n_i) sum_j rho^i_j.

    ``all_signals`` and ``all_returns`` are parallel per-market lists; market
    sizes are read off the matrices.
    """
    if len(all_signals) == 0:
        raise ShapeError("loss over an empty market set")
    if len(all_signals) != len(all_returns):
        raise ShapeError(
            f"{len(all_signals)} signal blocks vs {len(all_returns)} return blocks"
        )
    total = 0.0
    for s, r in zip(all_signals, all_returns):
        total += float(np.mean(sharpe_per_asset(s, r)))
    return -total / len(all_signals)


def loss_backward(
    all_signals: Sequence[np.ndarray], all_returns: Sequence[np.ndarray]
) -> list[np.ndarray]:
    """Analytic gradient of quantnet_loss w.r.t. every signal entry.

    For an active row (std above the floor), with m = mean, v = variance,
    d_t = x_t - m:

        d rho / d x_t = sqrt(252) / (k * sd) * (1 - m * d_t / v)

    For a floored row the denominator is constant, so

        d rho / d x_t = sqrt(252) / (k * 1e-8)

    and the chain to the signal multiplies by r_{j,t}. Each market's block is
    scaled by -1/(N * n_i).
    """
    if len(all_signals) == 0:
        raise ShapeError("loss over an empty market set")
    n_markets = len(all_signals)
    grads: list[np.ndarray] = []
    for s, r in zip(all_signals, all_returns):
        x = strategy_pnl(s, r)
        n, k = x.shape
        if k < 2:
            raise ShapeError(f"window of length {k} has no spread")
        mean, var, sd = _moments(x)
        active = sd > SHARPE_FLOOR
        dev = x - mean[:, None]
        drho_dx = np.empty_like(x)
        # floored rows: constant denominator, gradient through the mean only
        drho_dx[:] = _ANNUALIZER / (k * SHARPE_FLOOR)
        if np.any(active):
            sd_a = sd[active][:, None]
            var_a = var[active][:, None]
            m_a = mean[active][:, None]
            drho_dx[active] = (
                _ANNUALIZER / (k * sd_a) * (1.0 - m_a * dev[active] / var_a)
            )
        scale = -1.0 / (n_markets * n)
        grads.append(scale * drho_dx * r)
    return grads
