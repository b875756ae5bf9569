"""Trainable strategies in the same estimator shape as the baselines.

``fit`` builds a fresh model from the constructor hyperparameters and runs
the training loop; ``predict`` emits a SignalMatrix for a panel, with
recurrent state starting from zero at the evaluation boundary. ``save`` and
``load`` round-trip the model checkpoint byte for byte.
"""

from __future__ import annotations

from pathlib import Path

from .base import ParamsMixin
from .errors import ConfigError
from .model import ArchSpec, eval_signal_matrix, model_from_payload
from .panels import ReturnsPanel
from .params import dump_json, load_json
from .signals import SignalMatrix
from .trainer import TrainConfig, build_model, train


def _as_panel_map(panels) -> dict[str, ReturnsPanel]:
    if isinstance(panels, dict):
        return dict(panels)
    return {p.market_id: p for p in panels}


class _TrainedStrategy(ParamsMixin):
    """Shared fit/predict/save plumbing; subclasses pin the model kind."""

    model_kind = ""

    def _config(self) -> TrainConfig:
        raise NotImplementedError

    def fit(self, panels):
        """Train on a collection of per-market training panels."""
        panel_map = _as_panel_map(panels)
        cfg = self._config()
        cfg.validate()
        markets = {mid: p.n_assets for mid, p in panel_map.items()}
        self.model_ = build_model(self.model_kind, markets, cfg)
        _, self.trace_ = train(self.model_, panel_map, cfg)
        return self

    def _require_fitted(self):
        if not hasattr(self, "model_"):
            raise ConfigError(f"{type(self).__name__} is not fitted")

    def predict(self, panel: ReturnsPanel, eval_start: int | None = None) -> SignalMatrix:
        """Signals for one panel; state resets at eval_start (default column 1)."""
        self._require_fitted()
        return eval_signal_matrix(self.model_, panel, eval_start=eval_start or 1)

    def save(self, path: str | Path) -> None:
        self._require_fitted()
        dump_json(self.model_.payload(), path)

    @classmethod
    def load(cls, path: str | Path):
        return cls.from_model(model_from_payload(load_json(path)))


class QuantNetStrategy(_TrainedStrategy):
    """Per-market encoder/decoder pairs around one shared transfer map."""

    model_kind = "quantnet"

    @classmethod
    def from_model(cls, model):
        if model.kind != "quantnet":
            raise ConfigError(f"checkpoint holds a {model.kind} model, not quantnet")
        strategy = cls(
            encoder_kind=model.arch.encoder_kind,
            decoder_kind=model.arch.decoder_kind,
            transfer_kind=model.arch.transfer_kind,
            dim=model.arch.dim,
            enc_dec_layers=model.arch.enc_dec_layers,
            dropout=model.arch.dropout,
        )
        strategy.model_ = model
        return strategy

    def __init__(
        self,
        encoder_kind: str = "lstm",
        decoder_kind: str = "lstm",
        transfer_kind: str = "linear",
        dim: int = 10,
        enc_dec_layers: int = 1,
        dropout: float = 0.0,
        batch_markets: int = 8,
        seq_len: int = 63,
        learning_rate: float = 0.01,
        steps: int = 2000,
        seed: int = 0,
        grad_clip: float | None = None,
    ):
        self.encoder_kind = encoder_kind
        self.decoder_kind = decoder_kind
        self.transfer_kind = transfer_kind
        self.dim = dim
        self.enc_dec_layers = enc_dec_layers
        self.dropout = dropout
        self.batch_markets = batch_markets
        self.seq_len = seq_len
        self.learning_rate = learning_rate
        self.steps = steps
        self.seed = seed
        self.grad_clip = grad_clip

    def _config(self) -> TrainConfig:
        return TrainConfig(
            batch_markets=self.batch_markets,
            seq_len=self.seq_len,
            learning_rate=self.learning_rate,
            steps=self.steps,
            arch=ArchSpec(
                encoder_kind=self.encoder_kind,
                decoder_kind=self.decoder_kind,
                transfer_kind=self.transfer_kind,
                dim=self.dim,
                enc_dec_layers=self.enc_dec_layers,
                dropout=self.dropout,
            ),
            seed=self.seed,
            grad_clip=self.grad_clip,
        )


class NoTransferStrategy(_TrainedStrategy):
    """Independent per-market nets; the transfer-learning control."""

    @classmethod
    def from_model(cls, model):
        if not model.kind.startswith("no-transfer-"):
            raise ConfigError(f"checkpoint holds a {model.kind} model, not no-transfer")
        strategy = cls(
            kind=model.net_kind,
            enc_dec_layers=model.enc_dec_layers,
            dropout=model.dropout,
        )
        strategy.model_ = model
        return strategy

    def __init__(
        self,
        kind: str = "lstm",
        enc_dec_layers: int = 1,
        dropout: float = 0.0,
        batch_markets: int = 8,
        seq_len: int = 63,
        learning_rate: float = 0.01,
        steps: int = 2000,
        seed: int = 0,
        grad_clip: float | None = None,
    ):
        self.kind = kind
        self.enc_dec_layers = enc_dec_layers
        self.dropout = dropout
        self.batch_markets = batch_markets
        self.seq_len = seq_len
        self.learning_rate = learning_rate
        self.steps = steps
        self.seed = seed
        self.grad_clip = grad_clip

    @property
    def model_kind(self) -> str:
        if self.kind not in ("lstm", "linear"):
            raise ConfigError(f"kind must be lstm or linear, got {self.kind!r}")
        return f"no-transfer-{self.kind}"

    def _config(self) -> TrainConfig:
        return TrainConfig(
            batch_markets=self.batch_markets,
            seq_len=self.seq_len,
            learning_rate=self.learning_rate,
            steps=self.steps,
            arch=ArchSpec(
                enc_dec_layers=self.enc_dec_layers,
                dropout=self.dropout,
            ),
            seed=self.seed,
            grad_clip=self.grad_clip,
        )
