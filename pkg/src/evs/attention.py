"""Triplet attention: three cross-dimension gates averaged into one map.

Each branch pools one axis of a (C,H,W) feature map down to a 2-channel
max/mean plane, convolves it with a 7x7 kernel, squashes through a sigmoid,
and gates the input by broadcasting back along the pooled axis:

    branch wc pools H and gates each (channel, width) position,
    branch hc pools W and gates each (channel, height) position,
    branch hw pools C and gates each (height, width) position.

The gated tensors are averaged, so with all-zero parameters every gate is
sigmoid(0) = 0.5 and the block scales its input by exactly one half.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ShapeError
from .tensor import GradTape, Tensor, add, conv2d_nchw, mul, reshape, scale, sigmoid

KERNEL_SIZE = 7


@dataclass
class TripletAttentionParams:
    """Per-branch 7x7 convolutions (2 pooled channels in, 1 gate out) plus
    scalar biases."""

    conv_wc: Tensor
    bias_wc: Tensor
    conv_hc: Tensor
    bias_hc: Tensor
    conv_hw: Tensor
    bias_hw: Tensor

    def __post_init__(self):
        for f in fields(self):
            t = getattr(self, f.name)
            want = (1, 2, KERNEL_SIZE, KERNEL_SIZE) if f.name.startswith("conv") else (1,)
            if t.shape != want:
                raise ShapeError(f"{f.name} must have shape {want}, got {t.shape}")

    @classmethod
    def zeros(cls, dtype=np.float32) -> "TripletAttentionParams":
        k = KERNEL_SIZE
        return cls(*(Tensor(np.zeros((1, 2, k, k) if i % 2 == 0 else (1,), dtype))
                     for i in range(6)))

    @classmethod
    def random(cls, rng: np.random.Generator, dtype=np.float32) -> "TripletAttentionParams":
        k = KERNEL_SIZE
        std = (2.0 / (2 * k * k)) ** 0.5
        vals = []
        for i in range(6):
            if i % 2 == 0:
                vals.append(Tensor((rng.standard_normal((1, 2, k, k)) * std).astype(dtype)))
            else:
                vals.append(Tensor(np.zeros(1, dtype)))
        return cls(*vals)

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def param_count(self) -> int:
        return sum(t.size for _, t in self.named_tensors())


def _branch(x: Tensor, pool_axis: str, kernel: Tensor, bias: Tensor,
            tape: GradTape | None) -> Tensor:
    from .tensor import zpool_nchw

    n, c, h, w = x.shape
    z = zpool_nchw(x, pool_axis, tape=tape)
    m = sigmoid(add(conv2d_nchw(z, kernel, "same", tape=tape),
                    bias, tape=tape), tape=tape)
    # reshape the (N,1,A,B) gate so numpy broadcasting spreads it back
    # along the pooled axis
    if pool_axis == "H":
        m = reshape(m, (n, c, 1, w), tape=tape)
    elif pool_axis == "W":
        m = reshape(m, (n, c, h, 1), tape=tape)
    return mul(x, m, tape=tape)


def triplet_attention(psi: Tensor, params: TripletAttentionParams, *,
                      tape: GradTape | None = None) -> Tensor:
    """Attention-refine a (C,H,W) or (N,C,H,W) feature map; shape-preserving."""
    squeeze = psi.array.ndim == 3
    if squeeze:
        psi = reshape(psi, (1,) + psi.shape, tape=tape)
    elif psi.array.ndim != 4:
        raise ShapeError(f"expected rank-3 or rank-4 feature map, got {psi.shape}")
    g1 = _branch(psi, "H", params.conv_wc, params.bias_wc, tape)
    g2 = _branch(psi, "W", params.conv_hc, params.bias_hc, tape)
    g3 = _branch(psi, "C", params.conv_hw, params.bias_hw, tape)
    out = scale(add(add(g1, g2, tape=tape), g3, tape=tape), 1.0 / 3.0, tape=tape)
    if squeeze:
        out = reshape(out, out.shape[1:], tape=tape)
    return out
