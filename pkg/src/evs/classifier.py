"""Training loop and the sklearn-style estimator wrapper."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as T
from .errors import ConfigError, DataError
from .model import ClassifierModel, init_model, param_count
from .tensor import GradTape, Tensor
from .validation import check_image_batch, check_is_fitted, check_labels


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 20
    batch_size: int = 8
    seed: int = 0
    dropout_keep: float = 0.8

    def validate(self) -> None:
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ConfigError("epochs and batch_size must be positive")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 so batch statistics exist")
        if not 0.0 < self.dropout_keep <= 1.0:
            raise ConfigError(f"dropout_keep must be in (0,1], got {self.dropout_keep}")


@dataclass
class TrainResult:
    model: ClassifierModel
    epoch_losses: list[float]
    seconds: float


def train(images, labels, config: TrainConfig | None = None, *,
          backbone_channels: Sequence[int] = (8, 16, 32),
          head_units: Sequence[int] = (512, 512)) -> TrainResult:
    """Fit a classifier with plain minibatch SGD on cross-entropy loss.

    Deterministic given ``config.seed``: initialization, shuffling and
    dropout masks all come from one PCG64 stream, so two runs produce
    bit-identical checkpoints.
    """
    config = config or TrainConfig()
    config.validate()
    X = check_image_batch(images)
    y_names = check_labels(labels, len(X))
    classes = sorted(set(y_names))
    if len(classes) < 2:
        raise DataError(f"need at least 2 classes to train, got {classes}")
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[v] for v in y_names], np.int64)

    rng = np.random.default_rng(config.seed)
    model = init_model(classes, backbone_channels=backbone_channels,
                       head_units=head_units, seed=config.seed)
    params = [t for _, t in model.trainable()]

    t0 = time.perf_counter()
    losses = []
    n = len(X)
    bs = min(config.batch_size, n)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        start = 0
        while start < n:
            idx = order[start:start + bs]
            # a trailing singleton has no batch statistics; fold it back
            if len(idx) == 1 and start > 0:
                idx = order[start - 1:start + bs]
            start += bs
            tape = GradTape()
            for p in params:
                tape.watch(p)
            logits = model.forward(Tensor(X[idx]), training=True,
                                   dropout_keep=config.dropout_keep,
                                   rng=rng, tape=tape)
            loss = T.cross_entropy_logits(logits, y[idx], tape=tape)
            epoch_loss += loss.item()
            batches += 1
            if config.learning_rate > 0:
                for p, g in zip(params, tape.grad(loss, params)):
                    p.array -= config.learning_rate * g.array
        losses.append(epoch_loss / batches)
    return TrainResult(model, losses, time.perf_counter() - t0)


class ThumbnailClassifier:
    """Category classifier with a fit/predict estimator surface.

    Hyper-parameters are constructor arguments exposed through
    ``get_params``/``set_params``, so the object clones and grid-searches
    like any other estimator. ``fit`` leaves the learned state on
    ``model_``, ``labels_`` and ``loss_curve_``.
    """

    _PARAM_NAMES = ("backbone_channels", "head_units", "learning_rate",
                    "epochs", "batch_size", "seed", "dropout_keep")

    def __init__(self, backbone_channels=(8, 16, 32), head_units=(512, 512),
                 learning_rate=0.05, epochs=20, batch_size=8, seed=0,
                 dropout_keep=0.8):
        self.backbone_channels = backbone_channels
        self.head_units = head_units
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.dropout_keep = dropout_keep
        self.model_: ClassifierModel | None = None
        self.labels_: list[str] | None = None
        self.loss_curve_: list[float] | None = None

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._PARAM_NAMES}

    def set_params(self, **params) -> "ThumbnailClassifier":
        for name, value in params.items():
            if name not in self._PARAM_NAMES:
                raise ConfigError(f"unknown parameter {name!r} for ThumbnailClassifier")
            setattr(self, name, value)
        return self

    def fit(self, X, y) -> "ThumbnailClassifier":
        result = train(X, y, TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs,
            batch_size=self.batch_size, seed=self.seed,
            dropout_keep=self.dropout_keep),
            backbone_channels=self.backbone_channels, head_units=self.head_units)
        self.model_ = result.model
        self.labels_ = result.model.labels
        self.loss_curve_ = result.epoch_losses
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self)
        return self.model_.predict_proba(X)

    def predict(self, X) -> list[str]:
        probs = self.predict_proba(X)
        return [self.labels_[i] for i in probs.argmax(axis=1)]

    def score(self, X, y) -> float:
        pred = self.predict(X)
        want = [str(v) for v in y]
        return float(np.mean([p == w for p, w in zip(pred, want)]))

    def param_count(self):
        check_is_fitted(self)
        return param_count(self.model_)
