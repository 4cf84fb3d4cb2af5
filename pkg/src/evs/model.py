"""The thumbnail classifier network: backbone, attention, head.

The feature-extraction backbone is pluggable behind ``FeatureExtractor``;
the bundled reference is a small 3-block CNN (conv3x3 -> relu -> avgpool2)
so training stays in seconds on a CPU. The head is GAP, two dense+relu
layers with train-time dropout, feature normalization, and a softmax
classifier.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import tensor as T
from .attention import TripletAttentionParams, triplet_attention
from .checkpoint import read_checkpoint, write_checkpoint
from .errors import ModelError
from .tensor import GradTape, Tensor
from .validation import check_image_batch, check_thumbnail


class FeatureExtractor(Protocol):
    """Anything that maps a (N,3,H,W) batch to a (N,C,H',W') feature map."""

    def forward(self, x: Tensor, *, tape: GradTape | None = None) -> Tensor: ...

    def named_tensors(self) -> list[tuple[str, Tensor]]: ...


@dataclass
class ConvBlock:
    weight: Tensor  # (Co, Ci, 3, 3)
    bias: Tensor    # (Co,)


@dataclass
class TinyCnnBackbone:
    """Reference extractor: three conv3x3/relu/avgpool2 blocks."""

    blocks: list[ConvBlock]

    @classmethod
    def random(cls, rng: np.random.Generator, channels: Sequence[int] = (8, 16, 32),
               in_channels: int = 3, dtype=np.float32) -> "TinyCnnBackbone":
        blocks = []
        ci = in_channels
        for co in channels:
            std = (2.0 / (ci * 9)) ** 0.5
            blocks.append(ConvBlock(
                weight=Tensor((rng.standard_normal((co, ci, 3, 3)) * std).astype(dtype)),
                bias=Tensor(np.zeros(co, dtype))))
            ci = co
        return cls(blocks)

    def forward(self, x: Tensor, *, tape: GradTape | None = None) -> Tensor:
        h = x
        for blk in self.blocks:
            y = T.conv2d_nchw(h, blk.weight, "same", tape=tape)
            b = T.reshape(blk.bias, (1, blk.bias.size, 1, 1), tape=tape)
            h = T.avgpool2(T.relu(T.add(y, b, tape=tape), tape=tape), tape=tape)
        return h

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, blk in enumerate(self.blocks, 1):
            out.append((f"backbone.block{i}.weight", blk.weight))
            out.append((f"backbone.block{i}.bias", blk.bias))
        return out

    @property
    def out_channels(self) -> int:
        return self.blocks[-1].weight.shape[0]


@dataclass
class HeadParams:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    bn_gamma: Tensor
    bn_beta: Tensor
    bn_mean: Tensor   # running buffer, not trainable
    bn_var: Tensor    # running buffer, not trainable
    w_out: Tensor
    b_out: Tensor

    @classmethod
    def random(cls, rng: np.random.Generator, in_features: int, n_labels: int,
               units: Sequence[int] = (512, 512), dtype=np.float32) -> "HeadParams":
        u1, u2 = units

        def glorot(fan_out, fan_in):
            lim = (6.0 / (fan_in + fan_out)) ** 0.5
            return Tensor((rng.uniform(-lim, lim, (fan_out, fan_in))).astype(dtype))

        return cls(
            w1=glorot(u1, in_features), b1=Tensor(np.zeros(u1, dtype)),
            w2=glorot(u2, u1), b2=Tensor(np.zeros(u2, dtype)),
            bn_gamma=Tensor(np.ones(u2, dtype)), bn_beta=Tensor(np.zeros(u2, dtype)),
            bn_mean=Tensor(np.zeros(u2, dtype)), bn_var=Tensor(np.ones(u2, dtype)),
            w_out=glorot(n_labels, u2), b_out=Tensor(np.zeros(n_labels, dtype)))

    def named_trainable(self) -> list[tuple[str, Tensor]]:
        return [("head.dense1.weight", self.w1), ("head.dense1.bias", self.b1),
                ("head.dense2.weight", self.w2), ("head.dense2.bias", self.b2),
                ("head.norm.gamma", self.bn_gamma), ("head.norm.beta", self.bn_beta),
                ("head.classifier.weight", self.w_out), ("head.classifier.bias", self.b_out)]

    def named_buffers(self) -> list[tuple[str, Tensor]]:
        return [("head.norm.running_mean", self.bn_mean),
                ("head.norm.running_var", self.bn_var)]


@dataclass
class ClassifierModel:
    backbone: TinyCnnBackbone
    attention: TripletAttentionParams
    head: HeadParams
    labels: list[str]
    bn_momentum: float = 0.9
    _label_index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.labels) != self.head.w_out.shape[0]:
            raise ModelError(
                f"label table has {len(self.labels)} entries but classifier "
                f"outputs {self.head.w_out.shape[0]}")
        if len(set(self.labels)) != len(self.labels):
            raise ModelError("label table contains duplicates")
        self._label_index = {name: i for i, name in enumerate(self.labels)}

    # -- forward ----------------------------------------------------------

    def forward(self, x: Tensor, *, training: bool = False,
                dropout_keep: float = 1.0, rng: np.random.Generator | None = None,
                tape: GradTape | None = None) -> Tensor:
        """Logits for a (N,3,H,W) batch.

        Training mode normalizes by batch statistics (updating the running
        buffers in place, momentum 0.9) and applies dropout; it therefore
        owns the model exclusively. Inference is read-only and thread-safe.
        """
        h = self.backbone.forward(x, tape=tape)
        h = triplet_attention(h, self.attention, tape=tape)
        f = T.global_avgpool(h, tape=tape)
        f = T.relu(T.dense(f, self.head.w1, self.head.b1, tape=tape), tape=tape)
        if training and dropout_keep < 1.0:
            f = T.dropout(f, dropout_keep, rng, tape=tape)
        f = T.relu(T.dense(f, self.head.w2, self.head.b2, tape=tape), tape=tape)
        if training and dropout_keep < 1.0:
            f = T.dropout(f, dropout_keep, rng, tape=tape)
        n = x.shape[0]
        if training and n >= 2:
            mean, var = T.moments(f)
            m = self.bn_momentum
            # unbiased variance goes into the running buffer, biased into
            # the batch normalization itself
            self.head.bn_mean.array[:] = m * self.head.bn_mean.array + (1 - m) * mean
            self.head.bn_var.array[:] = (m * self.head.bn_var.array
                                          + (1 - m) * var * n / max(n - 1, 1))
            f = T.batchnorm(f, self.head.bn_gamma, self.head.bn_beta, tape=tape)
        else:
            f = T.batchnorm(f, self.head.bn_gamma, self.head.bn_beta,
                            mean=self.head.bn_mean.array,
                            var=self.head.bn_var.array, tape=tape)
        return T.dense(f, self.head.w_out, self.head.b_out, tape=tape)

    def predict_proba(self, X) -> np.ndarray:
        """Softmax probabilities for a (N,3,H,W) batch; rows sum to 1."""
        batch = check_image_batch(X)
        logits = self.forward(Tensor(batch))
        return T.softmax_lastaxis(logits).array

    # -- bookkeeping -------------------------------------------------------

    def trainable(self) -> list[tuple[str, Tensor]]:
        return (self.backbone.named_tensors()
                + [(f"attention.{n}", t) for n, t in self.attention.named_tensors()]
                + self.head.named_trainable())

    def all_tensors(self) -> list[tuple[str, Tensor]]:
        return self.trainable() + self.head.named_buffers()

    def to_bytes(self) -> bytes:
        return write_checkpoint([(n, t.array) for n, t in self.all_tensors()], self.labels)

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_bytes())


@dataclass(frozen=True)
class ParamCount:
    total: int
    attention: int
    backbone: int
    head: int


def param_count(model: ClassifierModel) -> ParamCount:
    """Trainable parameter counts; running buffers are excluded."""
    attention = model.attention.param_count()
    backbone = sum(t.size for _, t in model.backbone.named_tensors())
    head = sum(t.size for _, t in model.head.named_trainable())
    return ParamCount(attention + backbone + head, attention, backbone, head)


def init_model(labels: Sequence[str], *, backbone_channels: Sequence[int] = (8, 16, 32),
               head_units: Sequence[int] = (512, 512), seed: int = 0,
               dtype=np.float32) -> ClassifierModel:
    rng = np.random.default_rng(seed)
    backbone = TinyCnnBackbone.random(rng, backbone_channels, dtype=dtype)
    attention = TripletAttentionParams.random(rng, dtype=dtype)
    head = HeadParams.random(rng, backbone.out_channels, len(labels), head_units, dtype=dtype)
    return ClassifierModel(backbone, attention, head, list(labels))


def classify(thumbnail, model: ClassifierModel) -> np.ndarray:
    """Category probabilities for one 160x90 RGB thumbnail.

    The input must be exactly (3, 90, 160) with values in [0, 1] (uint8 is
    rescaled). The returned vector aligns with ``model.labels`` and sums
    to 1 within 1e-6; its argmax is the predicted category.
    """
    a = check_thumbnail(thumbnail)
    return model.predict_proba(a[None])[0]


def model_from_bytes(buf: bytes) -> ClassifierModel:
    tensors, labels = read_checkpoint(buf)
    if labels is None:
        raise ModelError("checkpoint has no label table; not a classifier model")
    table = dict(tensors)

    def take(name):
        try:
            return Tensor(table.pop(name))
        except KeyError:
            raise ModelError(f"checkpoint is missing tensor {name!r}") from None

    blocks = []
    i = 1
    while f"backbone.block{i}.weight" in table:
        blocks.append(ConvBlock(take(f"backbone.block{i}.weight"),
                                take(f"backbone.block{i}.bias")))
        i += 1
    if not blocks:
        raise ModelError("checkpoint has no backbone blocks")
    attention = TripletAttentionParams(
        conv_wc=take("attention.conv_wc"), bias_wc=take("attention.bias_wc"),
        conv_hc=take("attention.conv_hc"), bias_hc=take("attention.bias_hc"),
        conv_hw=take("attention.conv_hw"), bias_hw=take("attention.bias_hw"))
    head = HeadParams(
        w1=take("head.dense1.weight"), b1=take("head.dense1.bias"),
        w2=take("head.dense2.weight"), b2=take("head.dense2.bias"),
        bn_gamma=take("head.norm.gamma"), bn_beta=take("head.norm.beta"),
        bn_mean=take("head.norm.running_mean"), bn_var=take("head.norm.running_var"),
        w_out=take("head.classifier.weight"), b_out=take("head.classifier.bias"))
    if table:
        raise ModelError(f"checkpoint has unexpected tensors: {sorted(table)}")
    return ClassifierModel(backbone=TinyCnnBackbone(blocks), attention=attention,
                           head=head, labels=labels)


def load_model(path) -> ClassifierModel:
    with open(path, "rb") as f:
        return model_from_bytes(f.read())
