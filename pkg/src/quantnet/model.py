"""Model assembly: per-market encoder/decoder around a shared transfer layer,
plus the no-transfer ablations.

QuantNet, per step t of a window (input column = previous-day returns):

    e_t = enc_i(r_{t-1}, e_{t-1})     per-market encoder (linear or LSTM stack)
    z_t = omega(e_t)                  shared transfer layer, one object for all markets
    d_t = dec_i(z_t, d_{t-1})         per-market decoder
    s_t = tanh(W_i d_t + b_i)         per-market signal head

Market-specific parameters and the shared transfer parameters live in one
ParamStore; the name groups below partition it, which is what makes the
"touched parameters only" optimizer step and the per-market gradient
bookkeeping exact rather than approximate.

An LSTM transfer layer's state is reset per window and per market, so batch
order cannot leak state across markets. Dropout (inverted convention) applies
only between stacked encoder/decoder layers, and only in training mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .layers import LinearMap, LstmCell, LstmState, TanhHead, dropout_mask, zero_state
from .panels import ReturnsPanel
from .params import ParamStore, add_linear, add_lstm, store_from_payload, store_payload
from .signals import SignalMatrix

MODEL_FORMAT = "quantnet-model"
MODEL_VERSION = 1

KINDS = ("linear", "lstm")


@dataclass
class ArchSpec:
    encoder_kind: str = "lstm"
    decoder_kind: str = "lstm"
    transfer_kind: str = "linear"
    dim: int = 10
    enc_dec_layers: int = 1
    dropout: float = 0.0

    def validate(self) -> None:
        for label, kind in (
            ("encoder_kind", self.encoder_kind),
            ("decoder_kind", self.decoder_kind),
            ("transfer_kind", self.transfer_kind),
        ):
            if kind not in KINDS:
                raise ConfigError(f"{label} must be one of {KINDS}, got {kind!r}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.enc_dec_layers not in (1, 2):
            raise ConfigError(f"enc_dec_layers must be 1 or 2, got {self.enc_dec_layers}")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")

    def to_dict(self) -> dict:
        return {
            "encoder_kind": self.encoder_kind,
            "decoder_kind": self.decoder_kind,
            "transfer_kind": self.transfer_kind,
            "dim": self.dim,
            "enc_dec_layers": self.enc_dec_layers,
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchSpec":
        spec = cls(**d)
        spec.validate()
        return spec


@dataclass
class Tape:
    """Recorded forward pass of one market window; feeds backward_window."""

    market_id: str
    shape: tuple[int, int]
    enc_cache: list
    tl_cache: object
    dec_cache: list
    head_cache: object
    final_states: object


class _Stack:
    """1-2 layers of one kind, dropout between stacked layers only."""

    def __init__(self, store, prefix, kind, in_dim, width, n_layers, rng=None, build=False):
        self.kind = kind
        self.dims = [(in_dim if j == 0 else width, width) for j in range(n_layers)]
        self.layers = []
        for j, (d_in, d_out) in enumerate(self.dims):
            name = f"{prefix}/l{j}"
            if build:
                if kind == "lstm":
                    add_lstm(store, name, d_in, d_out, rng)
                else:
                    add_linear(store, name, d_out, d_in, rng)
            self.layers.append(LstmCell(store, name) if kind == "lstm" else LinearMap(store, name))

    def forward_seq(self, x_seq, states=None, training=False, dropout=0.0, rng=None):
        if states is None:
            states = [None] * len(self.layers)
        cur = x_seq
        caches = []
        finals = []
        for j, layer in enumerate(self.layers):
            if self.kind == "lstm":
                st = states[j] if states[j] is not None else zero_state(layer.hidden)
                out, final, cache = layer.forward_seq(cur, st.hidden, st.cell)
                finals.append(final)
            else:
                out, cache = layer.forward_seq(cur)
                finals.append(None)
            mask = None
            if training and dropout > 0.0 and j < len(self.layers) - 1:
                mask = dropout_mask(rng, out.shape, dropout)
                out = out * mask
            caches.append((cache, mask))
            cur = out
        return cur, caches, finals

    def backward_seq(self, caches, d_top, want_dx=True):
        d = d_top
        for j in range(len(self.layers) - 1, -1, -1):
            cache, _ = caches[j]
            need = want_dx or j > 0
            if self.kind == "lstm":
                dx, _, _ = self.layers[j].backward_seq(cache, d, want_dx=need)
            else:
                dx = self.layers[j].backward_seq(cache, d, want_dx=need)
            if j > 0:
                _, mask_below = caches[j - 1]
                d = dx * mask_below if mask_below is not None else dx
        return d if want_dx else None


class _MarketNet:
    def __init__(self, store, arch, market_id, n_assets, rng=None, build=False):
        self.n_assets = n_assets
        self.enc = _Stack(
            store, f"enc/{market_id}", arch.encoder_kind, n_assets, arch.dim,
            arch.enc_dec_layers, rng, build,
        )
        self.dec = _Stack(
            store, f"dec/{market_id}", arch.decoder_kind, arch.dim, arch.dim,
            arch.enc_dec_layers, rng, build,
        )
        if build:
            add_linear(store, f"head/{market_id}", n_assets, arch.dim, rng)
        self.head = TanhHead(store, f"head/{market_id}")


def _group(store: ParamStore, prefixes: tuple[str, ...]) -> list[str]:
    return [n for n in store.names() if n.startswith(prefixes)]


class QuantNetModel:
    kind = "quantnet"

    def __init__(self, arch: ArchSpec, markets: dict[str, int], seed: int = 0,
                 store: ParamStore | None = None):
        arch.validate()
        if not markets:
            raise ConfigError("model needs at least one market")
        for mid, n in markets.items():
            if n < 1:
                raise ConfigError(f"market {mid}: asset count must be >= 1, got {n}")
        self.arch = arch
        self.markets = {mid: int(markets[mid]) for mid in sorted(markets)}
        build = store is None
        rng = np.random.default_rng(seed) if build else None
        self.store = ParamStore() if build else store

        # creation order is fixed (shared transfer, then markets sorted by id)
        # so a seed fully determines every tensor
        if build:
            if arch.transfer_kind == "lstm":
                add_lstm(self.store, "tl", arch.dim, arch.dim, rng)
            else:
                add_linear(self.store, "tl", arch.dim, arch.dim, rng)
        self.transfer = (
            LstmCell(self.store, "tl") if arch.transfer_kind == "lstm"
            else LinearMap(self.store, "tl")
        )
        self.nets = {
            mid: _MarketNet(self.store, arch, mid, n, rng, build)
            for mid, n in self.markets.items()
        }
        if build:
            self.store.freeze()
        self.shared_names = _group(self.store, ("tl/",))
        self.market_names = {
            mid: _group(self.store, (f"enc/{mid}/", f"dec/{mid}/", f"head/{mid}/"))
            for mid in self.markets
        }

    def _net(self, market_id: str) -> _MarketNet:
        if market_id not in self.nets:
            raise ConfigError(f"unknown market {market_id!r}")
        return self.nets[market_id]

    def forward_window(self, market_id: str, window: np.ndarray, init_states=None,
                       training: bool = False, rng=None):
        """Run one window; returns (signals n x k, Tape).

        window columns are the inputs consumed per step (previous-day
        returns), so the emitted signal at column j pairs with the return
        one day after the input in column j.
        """
        net = self._net(market_id)
        window = np.asarray(window, dtype=np.float64)
        if window.ndim != 2 or window.shape[0] != net.n_assets:
            raise ShapeError(
                f"market {market_id}: window shape {window.shape}, expected "
                f"({net.n_assets}, k)"
            )
        enc_states, tl_state, dec_states = init_states if init_states else (None, None, None)
        dropout = self.arch.dropout if training else 0.0
        enc_out, enc_cache, enc_fin = net.enc.forward_seq(
            window, enc_states, training, dropout, rng
        )
        if self.arch.transfer_kind == "lstm":
            st = tl_state if tl_state is not None else zero_state(self.arch.dim)
            z, tl_fin, tl_cache = self.transfer.forward_seq(enc_out, st.hidden, st.cell)
        else:
            z, tl_cache = self.transfer.forward_seq(enc_out)
            tl_fin = None
        dec_out, dec_cache, dec_fin = net.dec.forward_seq(z, dec_states, training, dropout, rng)
        signals, head_cache = net.head.forward_seq(dec_out)
        tape = Tape(
            market_id=market_id,
            shape=window.shape,
            enc_cache=enc_cache,
            tl_cache=tl_cache,
            dec_cache=dec_cache,
            head_cache=head_cache,
            final_states=(enc_fin, tl_fin, dec_fin),
        )
        return signals, tape

    def backward_window(self, tape: Tape, dsignals: np.ndarray) -> None:
        """Accumulate gradients for one recorded window."""
        net = self._net(tape.market_id)
        if dsignals.shape != tape.shape:
            raise ShapeError(
                f"loss gradient shape {dsignals.shape} does not match window {tape.shape}"
            )
        ddec = net.head.backward_seq(tape.head_cache, dsignals)
        dz = net.dec.backward_seq(tape.dec_cache, ddec, want_dx=True)
        if self.arch.transfer_kind == "lstm":
            de, _, _ = self.transfer.backward_seq(tape.tl_cache, dz, want_dx=True)
        else:
            de = self.transfer.backward_seq(tape.tl_cache, dz, want_dx=True)
        net.enc.backward_seq(tape.enc_cache, de, want_dx=False)

    def encoder_output(self, market_id: str, inputs: np.ndarray) -> np.ndarray:
        net = self._net(market_id)
        out, _, _ = net.enc.forward_seq(np.asarray(inputs, dtype=np.float64))
        return out

    def encoder_scores(self, panels: list[ReturnsPanel]) -> dict[str, np.ndarray]:
        """Time-mean of the encoder's top hidden output over each panel."""
        scores = {}
        for panel in panels:
            out = self.encoder_output(panel.market_id, panel.returns)
            scores[panel.market_id] = out.mean(axis=1)
        return scores

    def touched_names(self, market_ids) -> list[str]:
        names = list(self.shared_names)
        for mid in market_ids:
            names.extend(self.market_names[mid])
        return names

    def payload(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "arch": self.arch.to_dict(),
            "markets": {mid: self.markets[mid] for mid in self.markets},
            "params": store_payload(self.store),
        }


class NoTransferModel:
    """Independent per-market models; nothing is shared.

    lstm kind: an LSTM stack with hidden width = the market's asset count,
    then the tanh head. linear kind: s_t = tanh(W r_{t-1} + b) directly.
    """

    def __init__(self, kind: str, markets: dict[str, int], seed: int = 0,
                 enc_dec_layers: int = 1, dropout: float = 0.0,
                 store: ParamStore | None = None):
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
        if not markets:
            raise ConfigError("model needs at least one market")
        if enc_dec_layers not in (1, 2):
            raise ConfigError(f"enc_dec_layers must be 1 or 2, got {enc_dec_layers}")
        if not (0.0 <= dropout < 1.0):
            raise ConfigError(f"dropout must lie in [0, 1), got {dropout}")
        self.net_kind = kind
        self.kind = f"no-transfer-{kind}"
        self.markets = {mid: int(markets[mid]) for mid in sorted(markets)}
        self.enc_dec_layers = enc_dec_layers if kind == "lstm" else 1
        self.dropout = dropout if kind == "lstm" else 0.0
        build = store is None
        rng = np.random.default_rng(seed) if build else None
        self.store = ParamStore() if build else store
        self.stacks: dict[str, _Stack | None] = {}
        self.heads: dict[str, TanhHead] = {}
        for mid, n in self.markets.items():
            if n < 1:
                raise ConfigError(f"market {mid}: asset count must be >= 1, got {n}")
            if kind == "lstm":
                self.stacks[mid] = _Stack(
                    self.store, f"net/{mid}", "lstm", n, n, self.enc_dec_layers, rng, build
                )
            else:
                self.stacks[mid] = None
            if build:
                add_linear(self.store, f"head/{mid}", n, n, rng)
            self.heads[mid] = TanhHead(self.store, f"head/{mid}")
        if build:
            self.store.freeze()
        self.shared_names: list[str] = []
        self.market_names = {
            mid: _group(self.store, (f"net/{mid}/", f"head/{mid}/")) for mid in self.markets
        }

    def forward_window(self, market_id: str, window: np.ndarray, init_states=None,
                       training: bool = False, rng=None):
        if market_id not in self.markets:
            raise ConfigError(f"unknown market {market_id!r}")
        n = self.markets[market_id]
        window = np.asarray(window, dtype=np.float64)
        if window.ndim != 2 or window.shape[0] != n:
            raise ShapeError(
                f"market {market_id}: window shape {window.shape}, expected ({n}, k)"
            )
        stack = self.stacks[market_id]
        if stack is not None:
            states = init_states if init_states else None
            dropout = self.dropout if training else 0.0
            out, cache, fin = stack.forward_seq(window, states, training, dropout, rng)
        else:
            out, cache, fin = window, None, None
        signals, head_cache = self.heads[market_id].forward_seq(out)
        tape = Tape(
            market_id=market_id,
            shape=window.shape,
            enc_cache=cache,
            tl_cache=None,
            dec_cache=None,
            head_cache=head_cache,
            final_states=fin,
        )
        return signals, tape

    def backward_window(self, tape: Tape, dsignals: np.ndarray) -> None:
        if dsignals.shape != tape.shape:
            raise ShapeError(
                f"loss gradient shape {dsignals.shape} does not match window {tape.shape}"
            )
        stack = self.stacks[tape.market_id]
        dout = self.heads[tape.market_id].backward_seq(
            tape.head_cache, dsignals, want_dx=stack is not None
        )
        if stack is not None:
            stack.backward_seq(tape.enc_cache, dout, want_dx=False)

    def touched_names(self, market_ids) -> list[str]:
        names: list[str] = []
        for mid in market_ids:
            names.extend(self.market_names[mid])
        return names

    def payload(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "net_kind": self.net_kind,
            "enc_dec_layers": self.enc_dec_layers,
            "dropout": self.dropout,
            "markets": {mid: self.markets[mid] for mid in self.markets},
            "params": store_payload(self.store),
        }


def eval_signal_matrix(model, panel: ReturnsPanel, eval_start: int = 1) -> SignalMatrix:
    """Deterministic evaluation pass over a panel.

    States start at zero at ``eval_start`` (e.g. the train/validation
    boundary) and carry through the rest of the panel in one pass. The signal
    at column t consumes the return at column t-1, so eval_start >= 1.
    """
    t = panel.n_obs
    if not (1 <= eval_start < t):
        raise ConfigError(f"eval_start must lie in [1, {t - 1}], got {eval_start}")
    inputs = panel.returns[:, eval_start - 1 : t - 1]
    signals, _ = model.forward_window(panel.market_id, inputs, training=False)
    values = np.zeros_like(panel.returns)
    values[:, eval_start:] = signals
    return SignalMatrix(
        market_id=panel.market_id,
        asset_ids=list(panel.asset_ids),
        dates=list(panel.dates),
        values=values,
        first_active=eval_start,
    )


def model_from_payload(payload: dict):
    if payload.get("format") != MODEL_FORMAT:
        raise ConfigError(f"not a model checkpoint: format={payload.get('format')!r}")
    if payload.get("version") != MODEL_VERSION:
        raise ConfigError(f"unsupported model version {payload.get('version')!r}")
    store = store_from_payload(payload["params"])
    markets = {str(k): int(v) for k, v in payload["markets"].items()}
    kind = payload["kind"]
    if kind == "quantnet":
        arch = ArchSpec.from_dict(payload["arch"])
        return QuantNetModel(arch, markets, store=store)
    if kind in ("no-transfer-lstm", "no-transfer-linear"):
        return NoTransferModel(
            payload["net_kind"],
            markets,
            enc_dec_layers=int(payload.get("enc_dec_layers", 1)),
            dropout=float(payload.get("dropout", 0.0)),
            store=store,
        )
    raise ConfigError(f"unknown model kind {kind!r}")
