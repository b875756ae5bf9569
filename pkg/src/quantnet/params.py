"""Named parameter tensors with paired gradient buffers, plus checkpoint I/O.

All trainable state lives in a ParamStore: an ordered map name -> float64
array, with a same-shaped gradient buffer per entry. Layers hold views into
the store, and the optimizer updates arrays in place, so bindings stay valid
across steps and checkpoint reloads.

LSTM gate tensors are packed: W is (4h, in), V is (4h, h), b is (4h,), gate
rows ordered [input, forget, output, candidate] (slices p, f, o, g). The
forget-gate bias rows initialize to 1.0; every other bias is 0; weights draw
from Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).

Checkpoint format: JSON, ``{"format": "quantnet-params", "version": 1,
"entries": [{"name", "shape", "data"}, ...]}`` with row-major values written
via shortest round-trip floats, so save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError

CHECKPOINT_FORMAT = "quantnet-params"
CHECKPOINT_VERSION = 1


class ParamStore:
    def __init__(self):
        self.entries: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._frozen = False

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if self._frozen:
            raise ShapeError(f"store is frozen; cannot add {name!r}")
        if name in self.entries:
            raise ShapeError(f"duplicate parameter name {name!r}")
        arr = np.asarray(value, dtype=np.float64)
        self.entries[name] = arr
        self.grads[name] = np.zeros_like(arr)
        return arr

    def freeze(self) -> None:
        self._frozen = True

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def names(self) -> list[str]:
        return list(self.entries)

    def n_params(self) -> int:
        return sum(int(a.size) for a in self.entries.values())


def init_weight(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(float(fan_in))
    return rng.uniform(-bound, bound, size=shape)


def add_linear(store: ParamStore, prefix: str, out_dim: int, in_dim: int,
               rng: np.random.Generator) -> None:
    store.add(f"{prefix}/W", init_weight(rng, (out_dim, in_dim), in_dim))
    store.add(f"{prefix}/b", np.zeros(out_dim))


def add_lstm(store: ParamStore, prefix: str, in_dim: int, hidden: int,
             rng: np.random.Generator) -> None:
    store.add(f"{prefix}/W", init_weight(rng, (4 * hidden, in_dim), in_dim))
    store.add(f"{prefix}/V", init_weight(rng, (4 * hidden, hidden), hidden))
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0  # forget gate opens at init
    store.add(f"{prefix}/b", b)


def store_payload(store: ParamStore) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "entries": [
            {"name": name, "shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
            for name, arr in store.entries.items()
        ],
    }


def store_from_payload(payload: dict) -> ParamStore:
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"not a parameter checkpoint: format={payload.get('format')!r}")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {payload.get('version')!r}")
    store = ParamStore()
    for entry in payload["entries"]:
        shape = tuple(int(s) for s in entry["shape"])
        arr = np.array(entry["data"], dtype=np.float64).reshape(shape)
        store.add(entry["name"], arr)
    store.freeze()
    return store


def dump_json(payload: dict, path: str | Path) -> None:
    """Deterministic JSON serialization (fixed separators, trailing newline)."""
    path = Path(path)
    with path.open("w") as fh:
        json.dump(payload, fh, separators=(",", ":"), allow_nan=False)
        fh.write("\n")


def load_json(path: str | Path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)


def save_store(store: ParamStore, path: str | Path) -> None:
    dump_json(store_payload(store), path)


def load_store(path: str | Path) -> ParamStore:
    return store_from_payload(load_json(path))
