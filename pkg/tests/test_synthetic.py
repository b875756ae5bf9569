"""Synthetic panel generator: determinism, naming, and factor structure."""

from __future__ import annotations

import datetime

import numpy as np
import pytest

from quantnet.errors import ConfigError
from quantnet.synthetic import SynthSpec, generate_synth, weekday_dates


def test_weekday_dates_skips_weekends():
    dates = weekday_dates(7)
    assert dates[0] == "2010-01-04"  # a Monday
    assert dates[4] == "2010-01-08"  # Friday
    assert dates[5] == "2010-01-11"  # the next Monday
    for d in dates:
        assert datetime.date.fromisoformat(d).weekday() < 5
    assert dates == sorted(dates)


def test_generate_synth_is_deterministic():
    spec = SynthSpec(n_markets=3, assets_per_market=2, length=50, seed=7)
    a = generate_synth(spec)
    b = generate_synth(spec)
    for pa, pb in zip(a, b):
        assert pa.equals(pb)


def test_generate_synth_seed_changes_draws():
    a = generate_synth(SynthSpec(n_markets=1, assets_per_market=1, length=50, seed=0))
    b = generate_synth(SynthSpec(n_markets=1, assets_per_market=1, length=50, seed=1))
    assert not np.array_equal(a[0].returns, b[0].returns)


def test_synth_ids_shapes_and_dates():
    spec = SynthSpec(n_markets=10, assets_per_market=3, length=30, seed=0)
    panels = generate_synth(spec)
    assert [p.market_id for p in panels] == [f"SYN{m:02d}" for m in range(10)]
    assert panels[0].asset_ids == ["A00", "A01", "A02"]
    assert panels[0].dates == weekday_dates(30)
    assert panels[0].returns.shape == (3, 30)


def test_synth_id_width_grows_with_market_count():
    panels = generate_synth(SynthSpec(n_markets=101, assets_per_market=1, length=2))
    assert panels[0].market_id == "SYN000"
    assert panels[-1].market_id == "SYN100"


def test_synth_defaults():
    spec = SynthSpec()
    assert (spec.n_markets, spec.assets_per_market, spec.length) == (8, 5, 1500)
    assert (spec.factor_loading, spec.idio_vol, spec.factor_persistence) == (1.0, 1.0, 0.9)
    assert spec.seed == 0


@pytest.mark.parametrize("field,value", [
    ("n_markets", 0),
    ("assets_per_market", 0),
    ("length", 1),
    ("factor_loading", -0.1),
    ("idio_vol", 0.0),
    ("factor_persistence", 1.0),
    ("factor_persistence", -0.2),
])
def test_synth_spec_validate_rejects(field, value):
    spec = SynthSpec(n_markets=2, assets_per_market=2, length=10)
    setattr(spec, field, value)
    with pytest.raises(ConfigError):
        generate_synth(spec)


# =============================================================================
# factor structure (statistical, long samples, fixed seeds)
# =============================================================================


def test_factor_share_is_forty_percent_at_calibrated_idio_vol():
    # loading^2 / (loading^2 + idio^2) = 1 / (1 + 1.5) = 0.4, so per-asset
    # variance should sit near 2.5 and lag-1 autocorrelation near 0.9 * 0.4.
    spec = SynthSpec(
        n_markets=2,
        assets_per_market=4,
        length=20000,
        factor_loading=1.0,
        idio_vol=np.sqrt(1.5),
        factor_persistence=0.9,
        seed=11,
    )
    panels = generate_synth(spec)
    r = np.vstack([p.returns for p in panels])
    variances = r.var(axis=1)
    assert np.all(np.abs(variances - 2.5) < 0.25)
    for row in r:
        ac = np.corrcoef(row[:-1], row[1:])[0, 1]
        assert abs(ac - 0.36) < 0.05


def test_shared_factor_correlates_markets():
    spec = SynthSpec(
        n_markets=2,
        assets_per_market=2,
        length=20000,
        factor_loading=1.0,
        idio_vol=np.sqrt(1.5),
        seed=3,
    )
    a, b = generate_synth(spec)
    # |corr| between assets of different markets = factor share = 0.4
    for i in range(2):
        for j in range(2):
            c = np.corrcoef(a.returns[i], b.returns[j])[0, 1]
            assert abs(abs(c) - 0.4) < 0.05


def test_zero_loading_gives_independent_markets():
    spec = SynthSpec(
        n_markets=2,
        assets_per_market=2,
        length=20000,
        factor_loading=0.0,
        idio_vol=1.0,
        seed=5,
    )
    a, b = generate_synth(spec)
    assert np.all(np.abs(a.returns.var(axis=1) - 1.0) < 0.1)
    for i in range(2):
        ac = np.corrcoef(a.returns[i][:-1], a.returns[i][1:])[0, 1]
        assert abs(ac) < 0.05
        for j in range(2):
            c = np.corrcoef(a.returns[i], b.returns[j])[0, 1]
            assert abs(c) < 0.05


def test_betas_are_rademacher():
    # with the factor dominating, each asset is nearly +/- the factor, so
    # pairwise correlations within a market approach +/-1 and both signs occur
    spec = SynthSpec(
        n_markets=1,
        assets_per_market=16,
        length=5000,
        factor_loading=4.0,
        idio_vol=0.1,
        seed=0,
    )
    (panel,) = generate_synth(spec)
    signs = set()
    for i in range(1, 16):
        c = np.corrcoef(panel.returns[0], panel.returns[i])[0, 1]
        assert abs(c) > 0.98
        signs.add(1 if c > 0 else -1)
    assert signs == {-1, 1}
