"""Synthetic multi-market return panels with a shared AR(1) factor.

Every asset in every market loads on one common factor:

    f_t = rho * f_{t-1} + eps_t,   eps_t ~ N(0, 1 - rho^2),   rho = factor_persistence
    r_{a,t} = factor_loading * beta_a * f_t + idio_vol * eta_{a,t}

The innovation variance keeps the factor's stationary variance at exactly 1,
and f_0 is drawn from that stationary law. beta_a is Rademacher (+1 or -1,
equiprobable), drawn once per asset, so each asset's factor share of variance
is factor_loading^2 / (factor_loading^2 + idio_vol^2). factor_loading = 0
gives independent panels.

Generation is fully deterministic given the seed: one PCG64 stream, draws in
a fixed order (factor path, then per market in id order: betas, then noise).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import ConfigError
from .panels import ReturnsPanel


@dataclass
class SynthSpec:
    n_markets: int = 8
    assets_per_market: int = 5
    length: int = 1500
    factor_loading: float = 1.0
    idio_vol: float = 1.0
    factor_persistence: float = 0.9
    seed: int = 0

    def validate(self) -> None:
        if self.n_markets < 1:
            raise ConfigError(f"n_markets must be >= 1, got {self.n_markets}")
        if self.assets_per_market < 1:
            raise ConfigError(f"assets_per_market must be >= 1, got {self.assets_per_market}")
        if self.length < 2:
            raise ConfigError(f"length must be >= 2, got {self.length}")
        if self.factor_loading < 0:
            raise ConfigError(f"factor_loading must be >= 0, got {self.factor_loading}")
        if self.idio_vol <= 0:
            raise ConfigError(f"idio_vol must be > 0, got {self.idio_vol}")
        if not (0.0 <= self.factor_persistence < 1.0):
            raise ConfigError(
                f"factor_persistence must lie in [0, 1), got {self.factor_persistence}"
            )


def weekday_dates(count: int, start: date = date(2010, 1, 4)) -> list[str]:
    """A run of ``count`` consecutive weekdays as ISO strings."""
    out = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d.isoformat())
        d += timedelta(days=1)
    return out


def generate_synth(spec: SynthSpec) -> list[ReturnsPanel]:
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    t = spec.length
    rho = spec.factor_persistence
    factor = np.empty(t, dtype=np.float64)
    innov = rng.standard_normal(t)
    factor[0] = innov[0]  # stationary start: variance 1
    scale = np.sqrt(1.0 - rho * rho)
    for i in range(1, t):
        factor[i] = rho * factor[i - 1] + scale * innov[i]

    dates = weekday_dates(t)
    n = spec.assets_per_market
    width = max(2, len(str(spec.n_markets - 1)))
    awidth = max(2, len(str(n - 1)))
    panels = []
    for m in range(spec.n_markets):
        betas = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        noise = rng.standard_normal((n, t))
        returns = spec.factor_loading * betas[:, np.newaxis] * factor[np.newaxis, :]
        returns = returns + spec.idio_vol * noise
        panels.append(
            ReturnsPanel(
                market_id=f"SYN{m:0{width}d}",
                asset_ids=[f"A{a:0{awidth}d}" for a in range(n)],
                dates=list(dates),
                returns=returns,
            )
        )
    return panels
