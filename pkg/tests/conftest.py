"""Shared helpers: small random panels and the path to committed fixtures."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from quantnet.panels import ReturnsPanel
from quantnet.synthetic import weekday_dates

FIXTURES = Path(__file__).parent / "fixtures"


def make_panel(market_id="M0", n_assets=3, n_obs=40, seed=0, scale=0.01):
    rng = np.random.default_rng(seed)
    return ReturnsPanel(
        market_id=market_id,
        asset_ids=[f"A{j}" for j in range(n_assets)],
        dates=weekday_dates(n_obs),
        returns=scale * rng.standard_normal((n_assets, n_obs)),
    )


@pytest.fixture
def fixtures_dir():
    return FIXTURES
