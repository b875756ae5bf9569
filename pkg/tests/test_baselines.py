"""Benchmark strategies against the committed fixture and naive-loop oracles.

The fixture (tests/fixtures/baselines_3x600.csv) repeats a period-4 block per
asset, so every trailing length-4 window sees the same multiset of values no
matter its phase:

    A:   5/64,  9/64,  9/64,  9/64   window mean  8/64, sample sd 2/64
    B: -10/64, -2/64, -2/64, -2/64   window mean -4/64, sample sd 4/64
    C:  -4/64,  4/64,  4/64,  4/64   window mean  2/64, sample sd 4/64

All inputs are dyadic rationals and every step of the trailing statistics
stays on exactly representable values (window sums of /64 values, means via
division by 4, sum of squared deviations 12*(sd/2)^2, variance via division
by 3 landing on 4*(sd/2)^2, square roots of perfect squares), so the expected
signals below are exact float equalities, not approximations.
"""

from __future__ import annotations

import numpy as np
import pytest

from conftest import FIXTURES, make_panel
from quantnet.baselines import (
    BASELINES,
    BuyAndHold,
    CrossSectionalMomentum,
    RiskParity,
    TimeSeriesMomentum,
    quantile_linear,
)
from quantnet.errors import ConfigError, InsufficientDataError
from quantnet.panels import read_panel_csv

FIXTURE = FIXTURES / "baselines_3x600.csv"


@pytest.fixture(scope="module")
def fixture_panel():
    return read_panel_csv(FIXTURE)


def test_fixture_shape(fixture_panel):
    assert fixture_panel.asset_ids == ["A", "B", "C"]
    assert fixture_panel.returns.shape == (3, 600)


def test_buy_and_hold_fixture(fixture_panel):
    sig = BuyAndHold().fit().predict(fixture_panel)
    assert sig.first_active == 0
    np.testing.assert_array_equal(sig.values, np.ones((3, 600)))


def test_risk_parity_fixture_exact(fixture_panel):
    # sd = (2, 4, 4)/64, inverse vol = (32, 16, 16), sum 64 -> (1/2, 1/4, 1/4)
    sig = RiskParity(lookback=4).predict(fixture_panel)
    assert sig.first_active == 4
    np.testing.assert_array_equal(sig.values[:, :4], np.zeros((3, 4)))
    expected = np.tile(np.array([[0.5], [0.25], [0.25]]), (1, 596))
    np.testing.assert_array_equal(sig.values[:, 4:], expected)


def test_ts_momentum_fixture_exact(fixture_panel):
    # signals are the window means: (8, -4, 2)/64, well inside the clamp
    sig = TimeSeriesMomentum(lookback=4).predict(fixture_panel)
    assert sig.first_active == 4
    np.testing.assert_array_equal(sig.values[:, :4], np.zeros((3, 4)))
    expected = np.tile(np.array([[0.125], [-0.0625], [0.03125]]), (1, 596))
    np.testing.assert_array_equal(sig.values[:, 4:], expected)


def test_cs_momentum_fixture_exact(fixture_panel):
    # sorted means (-4, 2, 8)/64; with q = 1/4 the interpolated quantiles sit
    # at the midpoints: Q_.25 = -1/64, Q_.75 = 5/64. A (8/64) is above the
    # upper, B (-4/64) below the lower so its signal flips sign, C is inside.
    sig = CrossSectionalMomentum(lookback=4, q=0.25).predict(fixture_panel)
    assert sig.first_active == 4
    np.testing.assert_array_equal(sig.values[:, :4], np.zeros((3, 4)))
    expected = np.tile(np.array([[0.125], [0.0625], [0.0]]), (1, 596))
    np.testing.assert_array_equal(sig.values[:, 4:], expected)


# =============================================================================
# quantile helper
# =============================================================================


def test_quantile_linear_hand_values():
    xs = [1.0, 2.0, 4.0, 8.0]
    assert quantile_linear(xs, 0.0) == 1.0
    assert quantile_linear(xs, 1.0) == 8.0
    assert quantile_linear(xs, 0.5) == 3.0  # h = 1.5, halfway from 2 to 4
    assert quantile_linear(xs, 0.25) == 1.75  # h = 0.75
    assert quantile_linear([5.0], 0.3) == 5.0


def test_quantile_linear_matches_numpy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        xs = np.sort(rng.standard_normal(rng.integers(1, 12)))
        q = float(rng.random())
        np.testing.assert_allclose(
            quantile_linear(xs, q), np.quantile(xs, q), rtol=1e-13, atol=1e-15
        )


def test_quantile_linear_empty():
    with pytest.raises(ConfigError):
        quantile_linear([], 0.5)


# =============================================================================
# naive-loop oracles on random panels
# =============================================================================


def _naive_risk_parity(x, w):
    out = np.zeros_like(x)
    for t in range(w, x.shape[1]):
        sd = x[:, t - w : t].std(axis=1, ddof=1)
        inv = 1.0 / np.maximum(sd, 1e-8)
        out[:, t] = inv / inv.sum()
    return out


def _naive_ts_momentum(x, w):
    out = np.zeros_like(x)
    for t in range(w, x.shape[1]):
        out[:, t] = np.clip(x[:, t - w : t].mean(axis=1), -1.0, 1.0)
    return out


def _naive_cs_momentum(x, w, q):
    out = np.zeros_like(x)
    for t in range(w, x.shape[1]):
        mu = x[:, t - w : t].mean(axis=1)
        hi = np.quantile(mu, 1.0 - q)
        lo = np.quantile(mu, q)
        clipped = np.clip(mu, -1.0, 1.0)
        for j in range(len(mu)):
            if mu[j] > hi:
                out[j, t] = clipped[j]
            elif mu[j] < lo:
                out[j, t] = -clipped[j]
    return out


@pytest.mark.parametrize("lookback", [2, 5, 21])
def test_risk_parity_matches_naive(lookback):
    # the rolling one-pass variance loses a few digits to cancellation at
    # tiny windows, hence the looser tolerance than the momentum checks
    for seed in range(8):
        panel = make_panel(n_assets=4, n_obs=60, seed=seed)
        sig = RiskParity(lookback=lookback).predict(panel)
        np.testing.assert_allclose(
            sig.values, _naive_risk_parity(panel.returns, lookback), atol=1e-9
        )


@pytest.mark.parametrize("lookback", [2, 5, 21])
def test_ts_momentum_matches_naive(lookback):
    for seed in range(8):
        panel = make_panel(n_assets=4, n_obs=60, seed=seed)
        sig = TimeSeriesMomentum(lookback=lookback).predict(panel)
        np.testing.assert_allclose(
            sig.values, _naive_ts_momentum(panel.returns, lookback), atol=1e-12
        )


@pytest.mark.parametrize("lookback,q", [(2, 0.3), (7, 0.25), (5, 0.33)])
def test_cs_momentum_matches_naive(lookback, q):
    for seed in range(8):
        panel = make_panel(n_assets=6, n_obs=60, seed=seed)
        sig = CrossSectionalMomentum(lookback=lookback, q=q).predict(panel)
        np.testing.assert_allclose(
            sig.values, _naive_cs_momentum(panel.returns, lookback, q), atol=1e-12
        )


def test_ts_momentum_clamps_large_means():
    panel = make_panel(n_assets=2, n_obs=20, seed=1)
    panel.returns[:] = 3.0
    sig = TimeSeriesMomentum(lookback=4).predict(panel)
    np.testing.assert_array_equal(sig.values[:, 4:], np.ones((2, 16)))


def test_windowed_signals_are_causal():
    # the trailing window at t is [t - w, t), so changing the last return
    # cannot move any signal column
    panel = make_panel(n_assets=3, n_obs=30, seed=9)
    modified = make_panel(n_assets=3, n_obs=30, seed=9)
    modified.returns[:, -1] = 5.0
    for strategy in (
        RiskParity(lookback=5),
        TimeSeriesMomentum(lookback=5),
        CrossSectionalMomentum(lookback=5, q=0.3),
    ):
        a = strategy.predict(panel)
        b = strategy.predict(modified)
        np.testing.assert_array_equal(a.values, b.values)


def test_cs_momentum_flat_cross_section_emits_nothing():
    panel = make_panel(n_assets=3, n_obs=12)
    panel.returns[:] = 0.01
    sig = CrossSectionalMomentum(lookback=4, q=0.25).predict(panel)
    np.testing.assert_array_equal(sig.values, np.zeros((3, 12)))


# =============================================================================
# validation errors
# =============================================================================


@pytest.mark.parametrize("lookback", [1, 0, -3, 5.0, "21"])
def test_bad_lookbacks_rejected(lookback):
    panel = make_panel(n_obs=30)
    with pytest.raises(ConfigError):
        RiskParity(lookback=lookback).predict(panel)


def test_lookback_needs_a_complete_window():
    panel = make_panel(n_obs=10)
    with pytest.raises(InsufficientDataError):
        TimeSeriesMomentum(lookback=10).predict(panel)
    sig = TimeSeriesMomentum(lookback=9).predict(panel)
    assert sig.values.shape == (3, 10)


@pytest.mark.parametrize("q", [0.0, 0.5, 0.7, -0.1])
def test_cs_momentum_quantile_range(q):
    panel = make_panel(n_obs=30)
    with pytest.raises(ConfigError):
        CrossSectionalMomentum(lookback=4, q=q).predict(panel)


def test_cs_momentum_needs_two_assets():
    panel = make_panel(n_assets=1, n_obs=30)
    with pytest.raises(ConfigError):
        CrossSectionalMomentum(lookback=4, q=0.25).predict(panel)


# =============================================================================
# estimator surface
# =============================================================================


def test_get_set_params_roundtrip():
    rp = RiskParity(lookback=10)
    assert rp.get_params() == {"lookback": 10}
    rp.set_params(lookback=21)
    assert rp.lookback == 21

    cs = CrossSectionalMomentum(lookback=63, q=0.2)
    assert cs.get_params() == {"lookback": 63, "q": 0.2}


def test_sklearn_clone_compatible():
    from sklearn.base import clone

    cs = clone(CrossSectionalMomentum(lookback=10, q=0.4))
    assert cs.get_params() == {"lookback": 10, "q": 0.4}


def test_registry_names_and_defaults():
    assert set(BASELINES) == {
        "buy_and_hold",
        "risk_parity",
        "ts_momentum",
        "cs_momentum",
    }
    panel = make_panel(n_obs=300)
    for cls in BASELINES.values():
        sig = cls().fit().predict(panel)
        assert sig.values.shape == panel.returns.shape
