"""Training loop and random hyperparameter search.

One training step: draw a mini-batch of markets (uniform, without
replacement, capped at the market count), draw an independent window start
per market, run each window forward from fresh zero states, score the batch
with the negated mean Sharpe, backpropagate through the window, and apply an
AMSGrad update to every touched parameter. Shared parameters receive the sum
of per-market contributions in sorted market order, so a seed pins the whole
trajectory bit for bit.

A non-finite loss or parameter aborts immediately with the offending step
index; Sharpe training that quietly NaNs is worse than one that stops.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Sequence

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import BudgetExhausted, ConfigError, NumericError
from .model import ArchSpec, NoTransferModel, QuantNetModel
from .objective import loss_backward, quantnet_loss, sharpe_per_asset
from .optim import AmsGrad
from .panels import ReturnsPanel

logger = logging.getLogger(__name__)

MODEL_CHOICES = ("quantnet", "no-transfer-lstm", "no-transfer-linear")

_CONFIG_KEYS = (
    "batch_markets",
    "seq_len",
    "learning_rate",
    "steps",
    "seed",
    "grad_clip",
    "dim",
)
_ARCH_KEYS = ("encoder_kind", "decoder_kind", "transfer_kind", "enc_dec_layers", "dropout")


@dataclass
class TrainConfig:
    """Everything one training run depends on besides the data itself."""

    batch_markets: int = 8
    seq_len: int = 63
    learning_rate: float = 0.01
    steps: int = 2000
    arch: ArchSpec = field(default_factory=ArchSpec)
    seed: int = 0
    grad_clip: float | None = None

    @property
    def dim(self) -> int:
        return self.arch.dim

    def validate(self) -> None:
        if self.batch_markets < 1:
            raise ConfigError(f"batch_markets must be >= 1, got {self.batch_markets}")
        if self.seq_len < 2:
            raise ConfigError(f"seq_len must be >= 2, got {self.seq_len}")
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")
        if self.grad_clip is not None and not self.grad_clip > 0.0:
            raise ConfigError(f"grad_clip must be positive, got {self.grad_clip}")
        self.arch.validate()

    def to_dict(self) -> dict:
        d = {
            "batch_markets": self.batch_markets,
            "seq_len": self.seq_len,
            "learning_rate": self.learning_rate,
            "steps": self.steps,
            "seed": self.seed,
            "dim": self.arch.dim,
            "arch": {
                "encoder_kind": self.arch.encoder_kind,
                "decoder_kind": self.arch.decoder_kind,
                "transfer_kind": self.arch.transfer_kind,
                "enc_dec_layers": self.arch.enc_dec_layers,
                "dropout": self.arch.dropout,
            },
        }
        if self.grad_clip is not None:
            d["grad_clip"] = self.grad_clip
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        d = dict(data)
        arch_d = dict(d.pop("arch", {}))
        unknown = sorted(set(d) - set(_CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        unknown = sorted(set(arch_d) - set(_ARCH_KEYS) - {"dim"})
        if unknown:
            raise ConfigError(f"unknown arch keys: {', '.join(unknown)}")
        dim = d.pop("dim", None)
        if dim is not None:
            if "dim" in arch_d and int(arch_d["dim"]) != int(dim):
                raise ConfigError(
                    f"dim given twice with different values: {dim} vs {arch_d['dim']}"
                )
            arch_d["dim"] = int(dim)
        arch = ArchSpec(
            encoder_kind=str(arch_d.get("encoder_kind", "lstm")),
            decoder_kind=str(arch_d.get("decoder_kind", "lstm")),
            transfer_kind=str(arch_d.get("transfer_kind", "linear")),
            dim=int(arch_d.get("dim", 10)),
            enc_dec_layers=int(arch_d.get("enc_dec_layers", 1)),
            dropout=float(arch_d.get("dropout", 0.0)),
        )
        clip = d.get("grad_clip")
        cfg = cls(
            batch_markets=int(d.get("batch_markets", 8)),
            seq_len=int(d.get("seq_len", 63)),
            learning_rate=float(d.get("learning_rate", 0.01)),
            steps=int(d.get("steps", 2000)),
            arch=arch,
            seed=int(d.get("seed", 0)),
            grad_clip=None if clip is None else float(clip),
        )
        cfg.validate()
        return cfg


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ConfigError(f"non-finite value {v} has no TOML form")
        text = repr(v)
        return text if ("." in text or "e" in text or "E" in text) else text + ".0"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise ConfigError(f"cannot write {type(v).__name__} to a config file")


def write_config(cfg: TrainConfig, path: str | Path, model: str = "quantnet") -> None:
    """Write a TOML config file mirroring TrainConfig field names."""
    if model not in MODEL_CHOICES:
        raise ConfigError(f"model must be one of {MODEL_CHOICES}, got {model!r}")
    d = cfg.to_dict()
    arch = d.pop("arch")
    lines = [f"model = {_toml_value(model)}"]
    for key in _CONFIG_KEYS:
        if key in d:
            lines.append(f"{key} = {_toml_value(d[key])}")
    lines.append("")
    lines.append("[arch]")
    for key in _ARCH_KEYS:
        lines.append(f"{key} = {_toml_value(arch[key])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_config(path: str | Path) -> tuple[TrainConfig, str]:
    """Read a TOML config file; returns (config, model kind)."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    model = data.pop("model", "quantnet")
    if model not in MODEL_CHOICES:
        raise ConfigError(f"model must be one of {MODEL_CHOICES}, got {model!r}")
    return TrainConfig.from_dict(data), model


def build_model(model: str, markets: dict[str, int], cfg: TrainConfig):
    """Fresh model of the requested kind, initialized from cfg.seed."""
    if model == "quantnet":
        return QuantNetModel(cfg.arch, markets, seed=cfg.seed)
    if model == "no-transfer-lstm":
        return NoTransferModel(
            "lstm",
            markets,
            seed=cfg.seed,
            enc_dec_layers=cfg.arch.enc_dec_layers,
            dropout=cfg.arch.dropout,
        )
    if model == "no-transfer-linear":
        return NoTransferModel("linear", markets, seed=cfg.seed)
    raise ConfigError(f"model must be one of {MODEL_CHOICES}, got {model!r}")


def _clip_gradients(store, names: Sequence[str], max_norm: float, step: int) -> None:
    total = 0.0
    for name in names:
        g = store.grads[name]
        total += float(np.dot(g.ravel(), g.ravel()))
    norm = math.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for name in names:
            store.grads[name] *= scale
        logger.info("step %d: gradient norm %.4g clipped to %.4g", step, norm, max_norm)


def train(model, panels: dict[str, ReturnsPanel], cfg: TrainConfig):
    """Run cfg.steps optimization steps; returns (model, loss trace).

    ``panels`` maps market id to its training span. The model is mutated in
    place; the trace is a list of {"step": i, "loss": value} records.
    """
    cfg.validate()
    market_ids = sorted(panels)
    if set(market_ids) != set(model.markets):
        raise ConfigError(
            f"model markets {sorted(model.markets)} != data markets {market_ids}"
        )
    k = cfg.seq_len
    for mid in market_ids:
        if panels[mid].n_obs <= k:
            raise ConfigError(
                f"market {mid}: window {k} does not fit its {panels[mid].n_obs} "
                "training observations"
            )
    returns = {mid: panels[mid].returns for mid in market_ids}
    n_markets = len(market_ids)
    m_eff = min(cfg.batch_markets, n_markets)
    rng = np.random.default_rng(cfg.seed)
    opt = AmsGrad(cfg.learning_rate)
    trace: list[dict] = []

    for step in range(cfg.steps):
        picked = rng.choice(n_markets, size=m_eff, replace=False)
        picked.sort()
        batch = [market_ids[i] for i in picked]
        sig_blocks: list[np.ndarray] = []
        ret_blocks: list[np.ndarray] = []
        tapes = []
        for mid in batch:
            r = returns[mid]
            start = int(rng.integers(1, r.shape[1] - k + 1))
            window = r[:, start - 1 : start - 1 + k]
            signals, tape = model.forward_window(mid, window, training=True, rng=rng)
            sig_blocks.append(signals)
            ret_blocks.append(r[:, start : start + k])
            tapes.append(tape)
        loss = quantnet_loss(sig_blocks, ret_blocks)
        if not math.isfinite(loss):
            raise NumericError("training loss is not finite", step=step)
        model.store.zero_grads()
        for tape, dsig in zip(tapes, loss_backward(sig_blocks, ret_blocks)):
            model.backward_window(tape, dsig)
        touched = model.touched_names(batch)
        if cfg.grad_clip is not None:
            _clip_gradients(model.store, touched, cfg.grad_clip, step)
        opt.step(model.store, touched)
        for name in touched:
            if not np.all(np.isfinite(model.store.entries[name])):
                raise NumericError(f"parameter {name} is not finite", step=step)
        trace.append({"step": step, "loss": loss})
    return model, trace


def write_trace(trace: list[dict], path: str | Path) -> None:
    """Persist a loss trace as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trace:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


# hyperparameter ranges; QuantNet variants that contain an LSTM anywhere get
# the narrower batch/window ranges and the wider learning-rate range
_WIDE = {"batch_markets": (16, 128), "seq_len": (21, 504), "learning_rate": (1e-4, 0.1)}
_NARROW = {"batch_markets": (16, 96), "seq_len": (21, 252), "learning_rate": (1e-4, 0.5)}


@dataclass
class SearchSpace:
    """Per-family random-search ranges; None fields fall back to the family default."""

    model: str = "quantnet"
    encoder_kind: str = "lstm"
    decoder_kind: str = "lstm"
    transfer_kind: str = "linear"
    batch_markets: tuple[int, int] | None = None
    seq_len: tuple[int, int] | None = None
    learning_rate: tuple[float, float] | None = None
    dim_choices: tuple[int, ...] = (10, 25, 50, 100)
    steps: int = 2000

    def validate(self) -> None:
        if self.model not in MODEL_CHOICES:
            raise ConfigError(f"model must be one of {MODEL_CHOICES}, got {self.model!r}")
        for label, kind in (
            ("encoder_kind", self.encoder_kind),
            ("decoder_kind", self.decoder_kind),
            ("transfer_kind", self.transfer_kind),
        ):
            if kind not in ("linear", "lstm"):
                raise ConfigError(f"{label} must be linear or lstm, got {kind!r}")
        for label, rng_ in (
            ("batch_markets", self.batch_markets),
            ("seq_len", self.seq_len),
            ("learning_rate", self.learning_rate),
        ):
            if rng_ is not None and not rng_[0] <= rng_[1]:
                raise ConfigError(f"{label} range {rng_} is empty")
        if not self.dim_choices:
            raise ConfigError("dim_choices must not be empty")
        if self.steps < 0:
            raise ConfigError(f"steps must be >= 0, got {self.steps}")

    def _bounds(self) -> dict:
        narrow = self.model == "quantnet" and "lstm" in (
            self.encoder_kind,
            self.decoder_kind,
            self.transfer_kind,
        )
        family = _NARROW if narrow else _WIDE
        return {
            "batch_markets": self.batch_markets or family["batch_markets"],
            "seq_len": self.seq_len or family["seq_len"],
            "learning_rate": self.learning_rate or family["learning_rate"],
        }

    def _has_layer_knob(self) -> bool:
        if self.model == "no-transfer-lstm":
            return True
        return self.model == "quantnet" and "lstm" in (self.encoder_kind, self.decoder_kind)

    def sample(self, rng: np.random.Generator, max_seq: int | None = None) -> TrainConfig:
        """One uniform draw (log-uniform learning rate); draw order is fixed."""
        self.validate()
        b = self._bounds()
        k_lo, k_hi = b["seq_len"]
        if max_seq is not None:
            k_hi = min(k_hi, max_seq)
            if k_lo > k_hi:
                raise ConfigError(
                    f"shortest training span supports windows up to {max_seq}, "
                    f"below the search range minimum {k_lo}"
                )
        batch = int(rng.integers(b["batch_markets"][0], b["batch_markets"][1] + 1))
        seq = int(rng.integers(k_lo, k_hi + 1))
        lo, hi = b["learning_rate"]
        lr = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        dim = int(self.dim_choices[int(rng.integers(0, len(self.dim_choices)))])
        if self._has_layer_knob():
            layers = int(rng.integers(1, 3))
            drop = float(rng.uniform(0.1, 0.9)) if layers == 2 else 0.0
        else:
            layers, drop = 1, 0.0
        arch = ArchSpec(
            encoder_kind=self.encoder_kind,
            decoder_kind=self.decoder_kind,
            transfer_kind=self.transfer_kind,
            dim=dim,
            enc_dec_layers=layers,
            dropout=drop,
        )
        return TrainConfig(
            batch_markets=batch,
            seq_len=seq,
            learning_rate=lr,
            steps=self.steps,
            arch=arch,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        d = dict(data)
        known = {
            "model",
            "encoder_kind",
            "decoder_kind",
            "transfer_kind",
            "batch_markets",
            "seq_len",
            "learning_rate",
            "dim_choices",
            "steps",
        }
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown search-space keys: {', '.join(unknown)}")

        def pair(key, cast):
            v = d.get(key)
            if v is None:
                return None
            if not isinstance(v, (list, tuple)) or len(v) != 2:
                raise ConfigError(f"{key} must be a [low, high] pair, got {v!r}")
            return (cast(v[0]), cast(v[1]))

        space = cls(
            model=str(d.get("model", "quantnet")),
            encoder_kind=str(d.get("encoder_kind", "lstm")),
            decoder_kind=str(d.get("decoder_kind", "lstm")),
            transfer_kind=str(d.get("transfer_kind", "linear")),
            batch_markets=pair("batch_markets", int),
            seq_len=pair("seq_len", int),
            learning_rate=pair("learning_rate", float),
            dim_choices=tuple(int(x) for x in d.get("dim_choices", (10, 25, 50, 100))),
            steps=int(d.get("steps", 2000)),
        )
        space.validate()
        return space


def load_space(path: str | Path) -> SearchSpace:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"search space file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}")
    return SearchSpace.from_dict(data)


def _search_split(panels: dict[str, ReturnsPanel]) -> dict[str, int]:
    """Validation boundary per market: the last quarter of the training span."""
    return {mid: p.n_obs - max(2, p.n_obs // 4) for mid, p in panels.items()}


def validation_sharpe(model, panels: dict[str, ReturnsPanel],
                      eval_starts: dict[str, int]) -> float:
    """Mean over markets of mean per-asset annualized Sharpe past the boundary."""
    from .model import eval_signal_matrix  # local to avoid an import cycle

    total = 0.0
    for mid in sorted(panels):
        panel = panels[mid]
        es = eval_starts[mid]
        sig = eval_signal_matrix(model, panel, eval_start=es)
        rho = sharpe_per_asset(sig.values[:, es:], panel.returns[:, es:])
        total += float(np.mean(rho))
    return total / len(panels)


def random_search(
    panels: dict[str, ReturnsPanel],
    space: SearchSpace,
    n_trials: int,
    budget_s: float | None = None,
    seed: int = 0,
    log_stream: IO[str] | None = None,
):
    """Sample n_trials configs, train each, rank by search-validation Sharpe.

    Returns (best config, trial records). Ties keep the lowest trial index.
    Every trial initializes and trains from the search seed, so score
    differences come from the hyperparameters alone. Each finished trial is
    flushed to ``log_stream`` as one JSON line before the next starts, so a
    budget abort leaves a usable partial log.
    """
    if n_trials < 1:
        raise ConfigError(f"n_trials must be >= 1, got {n_trials}")
    space.validate()
    if not panels:
        raise ConfigError("search needs at least one market")
    markets = {mid: p.n_assets for mid, p in panels.items()}
    eval_starts = _search_split(panels)
    # training must see at least seq_len+1 columns before the boundary
    max_seq = min(eval_starts[mid] - 1 for mid in eval_starts)
    if max_seq < 2:
        raise ConfigError("training spans are too short to split for search")
    inner = {
        mid: ReturnsPanel(
            market_id=p.market_id,
            asset_ids=list(p.asset_ids),
            dates=list(p.dates[: eval_starts[mid]]),
            returns=p.returns[:, : eval_starts[mid]].copy(),
        )
        for mid, p in panels.items()
    }
    rng = np.random.default_rng(seed)
    started = time.perf_counter()
    best_cfg: TrainConfig | None = None
    best_score = -math.inf
    records: list[dict] = []
    for trial in range(n_trials):
        if budget_s is not None and time.perf_counter() - started >= budget_s:
            raise BudgetExhausted(
                f"budget of {budget_s:.1f}s exhausted after {trial} of {n_trials} trials"
            )
        cfg = space.sample(rng, max_seq=max_seq)
        cfg.seed = seed
        t0 = time.perf_counter()
        model = build_model(space.model, markets, cfg)
        train(model, inner, cfg)
        score = validation_sharpe(model, panels, eval_starts)
        wall = time.perf_counter() - t0
        rec = {
            "trial": trial,
            "config": {"model": space.model, **cfg.to_dict()},
            "val_sharpe": score,
            "wall_time": wall,
        }
        records.append(rec)
        if log_stream is not None:
            log_stream.write(json.dumps(rec, separators=(",", ":")) + "\n")
            log_stream.flush()
        if score > best_score:
            best_score = score
            best_cfg = cfg
    assert best_cfg is not None
    return best_cfg, records
