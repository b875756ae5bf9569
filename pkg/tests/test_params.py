"""Parameter store invariants and checkpoint serialization."""

from __future__ import annotations

import numpy as np
import pytest

from quantnet.errors import ConfigError, ShapeError
from quantnet.params import (
    ParamStore,
    add_linear,
    add_lstm,
    dump_json,
    init_weight,
    load_store,
    save_store,
    store_from_payload,
    store_payload,
)


def test_add_and_grad_buffers():
    store = ParamStore()
    w = store.add("w", np.arange(6.0).reshape(2, 3))
    assert w.dtype == np.float64
    assert store.grads["w"].shape == (2, 3)
    np.testing.assert_array_equal(store.grads["w"], 0.0)
    assert store.names() == ["w"]
    assert store.n_params() == 6


def test_add_rejects_duplicates_and_frozen():
    store = ParamStore()
    store.add("w", np.zeros(2))
    with pytest.raises(ShapeError):
        store.add("w", np.zeros(2))
    store.freeze()
    with pytest.raises(ShapeError):
        store.add("v", np.zeros(2))


def test_zero_grads():
    store = ParamStore()
    store.add("w", np.zeros(3))
    store.grads["w"] += 5.0
    store.zero_grads()
    np.testing.assert_array_equal(store.grads["w"], 0.0)


def test_names_preserve_insertion_order():
    store = ParamStore()
    for name in ("tl/W", "enc/M0/l0/W", "dec/M0/l0/W"):
        store.add(name, np.zeros(1))
    assert store.names() == ["tl/W", "enc/M0/l0/W", "dec/M0/l0/W"]


def test_init_weight_bounds_and_determinism():
    vals = init_weight(np.random.default_rng(0), (50, 16), fan_in=16)
    assert np.all(np.abs(vals) <= 1.0 / 4.0)
    again = init_weight(np.random.default_rng(0), (50, 16), fan_in=16)
    np.testing.assert_array_equal(vals, again)


def test_add_linear_shapes():
    store = ParamStore()
    add_linear(store, "head", 3, 5, np.random.default_rng(0))
    assert store.entries["head/W"].shape == (3, 5)
    np.testing.assert_array_equal(store.entries["head/b"], np.zeros(3))


def test_add_lstm_packing_and_forget_bias():
    store = ParamStore()
    add_lstm(store, "net", in_dim=3, hidden=4, rng=np.random.default_rng(0))
    assert store.entries["net/W"].shape == (16, 3)
    assert store.entries["net/V"].shape == (16, 4)
    b = store.entries["net/b"]
    assert b.shape == (16,)
    np.testing.assert_array_equal(b[4:8], np.ones(4))  # forget rows
    np.testing.assert_array_equal(b[:4], np.zeros(4))
    np.testing.assert_array_equal(b[8:], np.zeros(8))


def test_checkpoint_roundtrip_is_byte_identical(tmp_path):
    store = ParamStore()
    rng = np.random.default_rng(5)
    add_lstm(store, "enc/M0/l0", 2, 3, rng)
    add_linear(store, "head/M0", 2, 3, rng)
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_store(store, p1)
    save_store(load_store(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_loaded_store_matches_and_is_frozen(tmp_path):
    store = ParamStore()
    store.add("w", np.array([[0.1, -2.5e-17], [3.0, 4.0]]))
    path = tmp_path / "c.json"
    save_store(store, path)
    back = load_store(path)
    assert back.names() == ["w"]
    np.testing.assert_array_equal(back.entries["w"], store.entries["w"])
    with pytest.raises(ShapeError):
        back.add("v", np.zeros(1))


def test_payload_rejects_wrong_format_and_version():
    store = ParamStore()
    store.add("w", np.zeros(1))
    payload = store_payload(store)
    bad = dict(payload, format="something-else")
    with pytest.raises(ConfigError):
        store_from_payload(bad)
    bad = dict(payload, version=99)
    with pytest.raises(ConfigError):
        store_from_payload(bad)


def test_dump_json_is_compact_and_rejects_nan(tmp_path):
    path = tmp_path / "d.json"
    dump_json({"a": [1.5, 2.0]}, path)
    assert path.read_text() == '{"a":[1.5,2.0]}\n'
    with pytest.raises(ValueError):
        dump_json({"a": float("nan")}, path)
