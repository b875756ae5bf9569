"""AMSGrad optimizer over named parameter arrays.

Plain AMSGrad per Reddi et al.: Adam moments plus a running entrywise maximum
of the second moment, and no bias correction. State is kept per parameter
name, created lazily the first time a name is stepped, so an optimizer can be
shared by models whose parameter sets differ (only touched names move).
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import ConfigError, ShapeError
from .params import ParamStore


class AmsGrad:
    """theta <- theta - lr * m / (sqrt(v_max) + eps), moments updated in place."""

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if not learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {learning_rate}")
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.v_max: dict[str, np.ndarray] = {}
        self.steps = 0

    def step(self, store: ParamStore, names: Iterable[str] | None = None) -> None:
        """Apply one update to the named parameters (all of them by default).

        Gradients are read from the store's grad buffers; parameters are
        mutated in place. Names are processed in sorted order so the update
        itself is order-free but the lazy state creation is deterministic.
        """
        if names is None:
            names = store.names()
        for name in sorted(names):
            theta = store.entries[name]
            g = store.grads[name]
            if g.shape != theta.shape:
                raise ShapeError(f"grad shape {g.shape} vs param {theta.shape} [{name}]")
            if name not in self.m:
                self.m[name] = np.zeros_like(theta)
                self.v[name] = np.zeros_like(theta)
                self.v_max[name] = np.zeros_like(theta)
            m = self.m[name]
            v = self.v[name]
            vmax = self.v_max[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            np.maximum(vmax, v, out=vmax)
            theta -= self.learning_rate * m / (np.sqrt(vmax) + self.eps)
        self.steps += 1
