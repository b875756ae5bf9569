"""Sharpe objective and its analytic gradient against loops and differences."""

from __future__ import annotations

import math

import numpy as np
import pytest

from quantnet.errors import ShapeError
from quantnet.objective import (
    SHARPE_FLOOR,
    loss_backward,
    quantnet_loss,
    sharpe_per_asset,
    strategy_pnl,
)


def _naive_sharpe_rows(signals, returns):
    """Per-asset Sharpe via plain python loops: mean/popstd * sqrt(252)."""
    out = []
    for s_row, r_row in zip(signals, returns):
        x = [float(a) * float(b) for a, b in zip(s_row, r_row)]
        k = len(x)
        m = sum(x) / k
        var = sum((v - m) ** 2 for v in x) / k
        out.append(m / max(math.sqrt(var), 1e-8) * math.sqrt(252.0))
    return np.array(out)


def _naive_loss(all_signals, all_returns):
    per_market = []
    for s, r in zip(all_signals, all_returns):
        rho = _naive_sharpe_rows(s, r)
        per_market.append(sum(rho) / len(rho))
    return -sum(per_market) / len(per_market)


def _random_pair(rng, n=None, k=None, scale=None):
    n = n or int(rng.integers(1, 6))
    k = k or int(rng.integers(2, 40))
    scale = scale or float(10.0 ** rng.integers(-3, 1))
    s = np.clip(rng.standard_normal((n, k)), -1.0, 1.0)
    r = scale * rng.standard_normal((n, k))
    return s, r


# =============================================================================
# forward values
# =============================================================================


def test_sharpe_hand_value():
    # pnl (0.01, 0.00, 0.02): mean 0.01, popstd 0.01*sqrt(2/3), so the ratio
    # is sqrt(3/2) and annualizing gives sqrt(3/2 * 252) = sqrt(378)
    s = np.ones((1, 3))
    r = np.array([[0.01, 0.00, 0.02]])
    (rho,) = sharpe_per_asset(s, r)
    assert abs(rho - math.sqrt(378.0)) < 1e-12


def test_sharpe_matches_naive_loops():
    rng = np.random.default_rng(42)
    for _ in range(100):
        s, r = _random_pair(rng)
        np.testing.assert_allclose(
            sharpe_per_asset(s, r), _naive_sharpe_rows(s, r), rtol=1e-10, atol=1e-10
        )


def test_loss_matches_naive_loops():
    rng = np.random.default_rng(7)
    for _ in range(100):
        blocks = [_random_pair(rng) for _ in range(int(rng.integers(1, 5)))]
        signals = [b[0] for b in blocks]
        returns = [b[1] for b in blocks]
        assert abs(quantnet_loss(signals, returns) - _naive_loss(signals, returns)) < 1e-12


def test_sharpe_scale_invariance_and_antisymmetry():
    rng = np.random.default_rng(3)
    s, r = _random_pair(rng, n=4, k=20, scale=0.01)
    base = sharpe_per_asset(s, r)
    # doubling the pnl doubles mean and std exactly, so rho is unchanged
    np.testing.assert_array_equal(sharpe_per_asset(2.0 * s, r), base)
    # negating the signal negates the mean and keeps the std
    np.testing.assert_array_equal(sharpe_per_asset(-s, r), -base)


def test_floored_rows_use_constant_denominator():
    s = np.full((1, 4), 0.5)
    r = np.full((1, 4), 2e-8)  # constant pnl: popstd is exactly 0
    (rho,) = sharpe_per_asset(s, r)
    assert rho == 1e-8 / SHARPE_FLOOR * math.sqrt(252.0)


# =============================================================================
# shape errors
# =============================================================================


def test_strategy_pnl_shape_mismatch():
    with pytest.raises(ShapeError):
        strategy_pnl(np.ones((2, 3)), np.ones((2, 4)))
    with pytest.raises(ShapeError):
        strategy_pnl(np.ones(3), np.ones(3))


def test_sharpe_needs_two_columns():
    with pytest.raises(ShapeError):
        sharpe_per_asset(np.ones((2, 1)), np.ones((2, 1)))


def test_loss_rejects_empty_and_mismatched_blocks():
    with pytest.raises(ShapeError):
        quantnet_loss([], [])
    s = np.ones((1, 3))
    with pytest.raises(ShapeError):
        quantnet_loss([s], [s, s])
    with pytest.raises(ShapeError):
        loss_backward([], [])


# =============================================================================
# analytic gradient
# =============================================================================


def test_loss_backward_matches_central_differences():
    rng = np.random.default_rng(11)
    blocks = [_random_pair(rng, n=2, k=8, scale=0.01), _random_pair(rng, n=3, k=8, scale=0.01)]
    signals = [b[0] for b in blocks]
    returns = [b[1] for b in blocks]
    grads = loss_backward(signals, returns)
    h = 1e-6
    worst = 0.0
    for i, s in enumerate(signals):
        for idx in np.ndindex(s.shape):
            plus = [m.copy() for m in signals]
            minus = [m.copy() for m in signals]
            plus[i][idx] += h
            minus[i][idx] -= h
            numeric = (quantnet_loss(plus, returns) - quantnet_loss(minus, returns)) / (2 * h)
            err = abs(numeric - grads[i][idx]) / max(1.0, abs(numeric), abs(grads[i][idx]))
            worst = max(worst, err)
    assert worst < 1e-6


def test_loss_backward_floored_branch_formula():
    # constant pnl row: gradient flows through the mean only, with the
    # denominator pinned at the floor
    s = np.full((1, 5), 0.5)
    r = np.full((1, 5), 1e-9)
    (grad,) = loss_backward([s], [r])
    expected = -1.0 * (math.sqrt(252.0) / (5 * SHARPE_FLOOR)) * r
    np.testing.assert_array_equal(grad, expected)


def test_loss_backward_block_scaling():
    # each market's block carries -1/(N * n_i); adding an unrelated second
    # market halves the first market's gradient exactly
    rng = np.random.default_rng(19)
    s1, r1 = _random_pair(rng, n=3, k=10, scale=0.01)
    s2, r2 = _random_pair(rng, n=2, k=10, scale=0.01)
    (alone,) = loss_backward([s1], [r1])
    paired = loss_backward([s1, s2], [r1, r2])
    np.testing.assert_allclose(paired[0], alone / 2.0, rtol=1e-15)
