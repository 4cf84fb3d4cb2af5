"""Dense float tensors with reverse-mode automatic differentiation.

Storage is a row-major numpy array, float32 by default (float64 opt-in for
verification work such as gradient checking). Operations are pure functions
over immutable inputs; recording onto a :class:`GradTape` is explicit, so
inference paths pay no bookkeeping cost and stay thread-safe.

The convolution kernels accept a leading batch axis internally; the public
ops keep the single-image signatures and lift through a recorded reshape, so
gradients flow either way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, ShapeError

DEFAULT_DTYPE = np.float32

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


def _require_finite(a: np.ndarray) -> None:
    # One fast reduction instead of a full isfinite pass: any NaN or +/-Inf
    # poisons the float64 sum, and finite float32 data cannot overflow it.
    if a.size and not math.isfinite(float(a.sum(dtype=np.float64))):
        raise ContractError("non-finite values produced (NaN/Inf is an error state, not a value)")


class Tensor:
    """N-dimensional float array, the unit of all numeric computation.

    ``shape`` is a tuple of positive integers and ``data`` a flat row-major
    view of the payload. Every constructed tensor is guarded to be finite.
    """

    __slots__ = ("array",)

    def __init__(self, values, dtype=None):
        a = np.asarray(values)
        if dtype is None:
            dtype = a.dtype if a.dtype in _FLOAT_DTYPES else DEFAULT_DTYPE
        a = np.ascontiguousarray(a, dtype=dtype)
        if any(d <= 0 for d in a.shape):
            raise ShapeError(f"tensor dimensions must be positive, got {a.shape}")
        _require_finite(a)
        self.array = a

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the underlying float buffer."""
        return self.array.reshape(-1)

    @property
    def size(self) -> int:
        return self.array.size

    @property
    def dtype(self):
        return self.array.dtype

    def item(self) -> float:
        if self.array.size != 1:
            raise ShapeError(f"item() requires a scalar tensor, got shape {self.shape}")
        return float(self.array.reshape(-1)[0])

    def tolist(self):
        return self.array.tolist()

    def copy(self) -> "Tensor":
        return Tensor(self.array.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.array.dtype.name})"


def _wrap(a: np.ndarray) -> Tensor:
    t = Tensor.__new__(Tensor)
    if any(d <= 0 for d in a.shape):
        raise ShapeError(f"tensor dimensions must be positive, got {a.shape}")
    _require_finite(a)
    t.array = np.ascontiguousarray(a)
    return t


Vjp = Callable[[tuple, np.ndarray], tuple]


@dataclass
class TapeNode:
    """One recorded operation: kind, operand ids, and what backward needs."""

    op: str
    input_ids: tuple[int, ...]
    output_id: int
    saved: tuple
    vjp: Vjp


class GradTape:
    """Ordered record of operations for reverse-mode differentiation.

    Single-writer: a tape belongs to the one thread building the forward
    pass. Node ids are assigned in creation order, so every input id
    precedes its consumer and one reverse sweep visits each node once.
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []
        self._ids: dict[int, int] = {}
        self._tensors: dict[int, Tensor] = {}
        self._next_id = 0

    def watch(self, t: Tensor) -> Tensor:
        """Assign ``t`` an id so its gradient is retrievable later."""
        self._ensure_id(t)
        return t

    def id_of(self, t: Tensor) -> int:
        key = id(t)
        if key not in self._ids:
            raise ContractError("tensor was never recorded on this tape")
        return self._ids[key]

    def _ensure_id(self, t: Tensor) -> int:
        key = id(t)
        nid = self._ids.get(key)
        if nid is None:
            nid = self._next_id
            self._next_id += 1
            self._ids[key] = nid
            self._tensors[nid] = t
        return nid

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor,
               saved: tuple, vjp: Vjp) -> None:
        in_ids = tuple(self._ensure_id(t) for t in inputs)
        out_id = self._ensure_id(output)
        self.nodes.append(TapeNode(op, in_ids, out_id, saved, vjp))

    def backward(self, loss: Tensor) -> dict[int, Tensor]:
        """Gradients of a scalar loss with respect to every recorded tensor.

        The gradient of the loss with respect to itself is 1. Tensors the
        loss does not depend on get zero gradients.
        """
        if loss.size != 1:
            raise ContractError(f"loss must be scalar, got shape {loss.shape}")
        loss_id = self.id_of(loss)
        grads: dict[int, np.ndarray] = {loss_id: np.ones_like(loss.array)}
        for node in reversed(self.nodes):
            g_out = grads.get(node.output_id)
            if g_out is None:
                continue
            for in_id, g_in in zip(node.input_ids, node.vjp(node.saved, g_out)):
                if g_in is None:
                    continue
                acc = grads.get(in_id)
                grads[in_id] = g_in if acc is None else acc + g_in
        out: dict[int, Tensor] = {}
        for nid, t in self._tensors.items():
            g = grads.get(nid)
            out[nid] = _wrap(g.reshape(t.shape) if g is not None
                             else np.zeros(t.shape, t.dtype))
        return out

    def grad(self, loss: Tensor, params: Sequence[Tensor]) -> list[Tensor]:
        """Convenience: gradients aligned with ``params``."""
        table = self.backward(loss)
        return [table[self.id_of(p)] for p in params]


def _emit(tape: GradTape | None, op: str, inputs: Sequence[Tensor],
          output: Tensor, saved: tuple, vjp: Vjp) -> Tensor:
    if tape is not None:
        tape.record(op, inputs, output, saved, vjp)
    return output


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` back down to ``shape`` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise / structural ops


def add(a: Tensor, b: Tensor, *, tape: GradTape | None = None) -> Tensor:
    out = _wrap(a.array + b.array)

    def vjp(saved, g):
        sa, sb = saved
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return _emit(tape, "add", (a, b), out, (a.shape, b.shape), vjp)


def mul(a: Tensor, b: Tensor, *, tape: GradTape | None = None) -> Tensor:
    out = _wrap(a.array * b.array)

    def vjp(saved, g):
        aa, ba = saved
        return _unbroadcast(g * ba, aa.shape), _unbroadcast(g * aa, ba.shape)

    return _emit(tape, "mul", (a, b), out, (a.array, b.array), vjp)


def scale(a: Tensor, k: float, *, tape: GradTape | None = None) -> Tensor:
    kk = a.array.dtype.type(k)
    out = _wrap(a.array * kk)

    def vjp(saved, g):
        return (g * saved[0],)

    return _emit(tape, "scale", (a,), out, (kk,), vjp)


def reshape(a: Tensor, shape: Sequence[int], *, tape: GradTape | None = None) -> Tensor:
    shape = tuple(shape)
    if int(np.prod(shape)) != a.size:
        raise ShapeError(f"cannot reshape {a.shape} to {shape}")
    out = _wrap(a.array.reshape(shape))

    def vjp(saved, g):
        return (g.reshape(saved[0]),)

    return _emit(tape, "reshape", (a,), out, (a.shape,), vjp)


def sum_all(a: Tensor, *, tape: GradTape | None = None) -> Tensor:
    out = _wrap(a.array.sum(dtype=a.dtype).reshape(()))

    def vjp(saved, g):
        shape, dt = saved
        return (np.full(shape, g.reshape(()), dtype=dt),)

    return _emit(tape, "sum", (a,), out, (a.shape, a.array.dtype), vjp)


# ---------------------------------------------------------------------------
# activations


def relu(x: Tensor, *, tape: GradTape | None = None) -> Tensor:
    out = _wrap(np.maximum(x.array, 0))

    def vjp(saved, g):
        return (g * (saved[0] > 0),)

    return _emit(tape, "relu", (x,), out, (x.array,), vjp)


def sigmoid(x: Tensor, *, tape: GradTape | None = None) -> Tensor:
    # Split by sign for stability; exp never sees a large positive argument.
    a = x.array
    s = np.empty_like(a)
    pos = a >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ez = np.exp(a[~pos])
    s[~pos] = ez / (1.0 + ez)
    out = _wrap(s)

    def vjp(saved, g):
        sv = saved[0]
        return (g * sv * (1.0 - sv),)

    return _emit(tape, "sigmoid", (x,), out, (s,), vjp)


def softmax_lastaxis(x: Tensor, *, tape: GradTape | None = None) -> Tensor:
    a = x.array
    z = a - a.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    out = _wrap(p)

    def vjp(saved, g):
        pv = saved[0]
        inner = (g * pv).sum(axis=-1, keepdims=True)
        return (pv * (g - inner),)

    return _emit(tape, "softmax", (x,), out, (p,), vjp)


_ACTIVATIONS = {"sigmoid": sigmoid, "relu": relu, "softmax_lastaxis": softmax_lastaxis}


def activation(x: Tensor, kind: str, *, tape: GradTape | None = None) -> Tensor:
    """Dispatch on ``kind``: sigmoid, relu, or softmax_lastaxis."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ContractError(f"unknown activation kind {kind!r}") from None
    return fn(x, tape=tape)


# ---------------------------------------------------------------------------
# dense layer


def dense(x: Tensor, weights: Tensor, bias: Tensor, *, tape: GradTape | None = None) -> Tensor:
    """out_i = sum_j w_ij x_j + b_i. ``x`` may carry a leading batch axis."""
    if weights.array.ndim != 2:
        raise ShapeError(f"weights must be rank 2, got {weights.shape}")
    m, n = weights.shape
    if x.array.ndim not in (1, 2) or x.shape[-1] != n:
        raise ShapeError(f"dense shape mismatch: input {x.shape} vs weights {weights.shape}")
    if bias.shape != (m,):
        raise ShapeError(f"bias shape {bias.shape} does not match weights {weights.shape}")
    xa, wa = x.array, weights.array
    out = _wrap(xa @ wa.T + bias.array)

    def vjp(saved, g):
        xs, ws = saved
        if xs.ndim == 1:
            return g @ ws, np.outer(g, xs), g
        return g @ ws, g.T @ xs, g.sum(axis=0)

    return _emit(tape, "dense", (x, weights, bias), out, (xa, wa), vjp)


# ---------------------------------------------------------------------------
# convolution (stride 1, square odd kernels)


def _im2col(xp: np.ndarray, k: int, ho: int, wo: int) -> np.ndarray:
    n, c = xp.shape[:2]
    cols = np.empty((n, c, k, k, ho, wo), xp.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xp[:, :, i:i + ho, j:j + wo]
    return cols.reshape(n, c * k * k, ho * wo)


def _col2im(gcols: np.ndarray, n: int, c: int, k: int, hp: int, wp: int,
            ho: int, wo: int) -> np.ndarray:
    g6 = gcols.reshape(n, c, k, k, ho, wo)
    gx = np.zeros((n, c, hp, wp), gcols.dtype)
    for i in range(k):
        for j in range(k):
            gx[:, :, i:i + ho, j:j + wo] += g6[:, :, i, j]
    return gx


def conv2d_nchw(x: Tensor, kernel: Tensor, padding: str = "same", *,
                tape: GradTape | None = None) -> Tensor:
    """Batched 2-D cross-correlation on (N, C, H, W) input, stride 1."""
    if x.array.ndim != 4:
        raise ShapeError(f"expected rank-4 (N,C,H,W) input, got {x.shape}")
    if kernel.array.ndim != 4:
        raise ShapeError(f"expected rank-4 (Co,Ci,k,k) kernel, got {kernel.shape}")
    co, ci, kh, kw = kernel.shape
    if kh != kw:
        raise ShapeError(f"kernel must be square, got {kernel.shape}")
    if kh % 2 == 0:
        raise ShapeError(f"kernel size must be odd, got {kh}")
    n, c, h, w = x.shape
    if c != ci:
        raise ShapeError(f"channel mismatch: input {x.shape} vs kernel {kernel.shape}")
    if padding == "same":
        pad = (kh - 1) // 2
        xp = np.pad(x.array, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        ho, wo = h, w
    elif padding == "valid":
        pad = 0
        if h < kh or w < kw:
            raise ShapeError(f"valid padding needs H,W >= k: input {x.shape}, kernel {kernel.shape}")
        xp = x.array
        ho, wo = h - kh + 1, w - kw + 1
    else:
        raise ContractError(f"unknown padding {padding!r}")
    cols = _im2col(xp, kh, ho, wo)
    w2 = kernel.array.reshape(co, ci * kh * kw)
    out = _wrap(np.matmul(w2, cols).reshape(n, co, ho, wo))

    def vjp(saved, g):
        cols_s, w2_s, kshape = saved
        g2 = g.reshape(n, co, ho * wo)
        g_w = np.matmul(g2, cols_s.transpose(0, 2, 1)).sum(axis=0).reshape(kshape)
        gcols = np.matmul(w2_s.T, g2)
        gxp = _col2im(gcols, n, ci, kh, xp.shape[2], xp.shape[3], ho, wo)
        gx = gxp if pad == 0 else gxp[:, :, pad:pad + h, pad:pad + w]
        return gx, g_w

    return _emit(tape, "conv2d", (x, kernel), out, (cols, w2, kernel.shape), vjp)


def conv2d(input: Tensor, kernel: Tensor, padding: str = "same", *,
           tape: GradTape | None = None) -> Tensor:
    """2-D cross-correlation of a (C,H,W) image with a (Co,Ci,k,k) kernel.

    Same padding zero-fills and preserves H,W; valid padding yields
    H-k+1, W-k+1. Kernels must be square with odd k.
    """
    if input.array.ndim != 3:
        raise ShapeError(f"expected rank-3 (C,H,W) input, got {input.shape}")
    if kernel.array.ndim == 4 and input.shape[0] != kernel.shape[1]:
        raise ShapeError(f"channel mismatch: input {input.shape} vs kernel {kernel.shape}")
    x4 = reshape(input, (1,) + input.shape, tape=tape)
    y4 = conv2d_nchw(x4, kernel, padding, tape=tape)
    return reshape(y4, y4.shape[1:], tape=tape)


# ---------------------------------------------------------------------------
# pooling


_ZPOOL_AXIS = {"C": 1, "H": 2, "W": 3}


def zpool_nchw(x: Tensor, axis: str, *, tape: GradTape | None = None) -> Tensor:
    """Stack max and mean over one of C/H/W: (N,C,H,W) -> (N,2,A,B)."""
    if x.array.ndim != 4:
        raise ShapeError(f"expected rank-4 input, got {x.shape}")
    try:
        ax = _ZPOOL_AXIS[axis]
    except KeyError:
        raise ContractError(f"zpool axis must be one of C/H/W, got {axis!r}") from None
    a = x.array
    idx = a.argmax(axis=ax)
    mx = np.take_along_axis(a, np.expand_dims(idx, ax), axis=ax).squeeze(ax)
    av = a.mean(axis=ax)
    out = _wrap(np.stack((mx, av), axis=1))

    def vjp(saved, g):
        shape, ax_s, idx_s = saved
        gx = np.zeros(shape, g.dtype)
        np.put_along_axis(gx, np.expand_dims(idx_s, ax_s),
                          np.expand_dims(g[:, 0], ax_s), axis=ax_s)
        gx += np.expand_dims(g[:, 1], ax_s) / shape[ax_s]
        return (gx,)

    return _emit(tape, "zpool", (x,), out, (a.shape, ax, idx), vjp)


def zpool(input: Tensor, axis: str, *, tape: GradTape | None = None) -> Tensor:
    """Max/mean pooling along one axis of a (C,H,W) tensor.

    Output channel 0 is the max, channel 1 the mean; the remaining two axes
    keep their order, so axis=C gives (2,H,W), axis=H gives (2,C,W) and
    axis=W gives (2,C,H).
    """
    if input.array.ndim != 3:
        raise ShapeError(f"zpool requires rank-3 input, got {input.shape}")
    x4 = reshape(input, (1,) + input.shape, tape=tape)
    y4 = zpool_nchw(x4, axis, tape=tape)
    return reshape(y4, y4.shape[1:], tape=tape)


def avgpool2(x: Tensor, *, tape: GradTape | None = None) -> Tensor:
    """2x2 average pooling with stride 2 on (N,C,H,W); odd tails dropped."""
    if x.array.ndim != 4:
        raise ShapeError(f"expected rank-4 input, got {x.shape}")
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    if h2 == 0 or w2 == 0:
        raise ShapeError(f"input too small for 2x2 pooling: {x.shape}")
    a = x.array
    q = a.dtype.type(0.25)
    out = _wrap((a[:, :, 0:h2 * 2:2, 0:w2 * 2:2] + a[:, :, 0:h2 * 2:2, 1:w2 * 2:2]
                 + a[:, :, 1:h2 * 2:2, 0:w2 * 2:2] + a[:, :, 1:h2 * 2:2, 1:w2 * 2:2]) * q)

    def vjp(saved, g):
        hs, ws = saved
        gx = np.zeros((n, c, hs, ws), g.dtype)
        gq = g * q
        gx[:, :, 0:h2 * 2:2, 0:w2 * 2:2] = gq
        gx[:, :, 0:h2 * 2:2, 1:w2 * 2:2] = gq
        gx[:, :, 1:h2 * 2:2, 0:w2 * 2:2] = gq
        gx[:, :, 1:h2 * 2:2, 1:w2 * 2:2] = gq
        return (gx,)

    return _emit(tape, "avgpool2", (x,), out, (h, w), vjp)


def global_avgpool(x: Tensor, *, tape: GradTape | None = None) -> Tensor:
    """Mean over the spatial axes: (N,C,H,W) -> (N,C)."""
    if x.array.ndim != 4:
        raise ShapeError(f"expected rank-4 input, got {x.shape}")
    n, c, h, w = x.shape
    out = _wrap(x.array.mean(axis=(2, 3)))

    def vjp(saved, g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), (n, c, h, w)).copy(),)

    return _emit(tape, "gap", (x,), out, (), vjp)


# ---------------------------------------------------------------------------
# normalization / regularization / loss


def moments(x: Tensor) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and biased variance over the batch axis."""
    a = x.array
    return a.mean(axis=0), a.var(axis=0)


def batchnorm(x: Tensor, gamma: Tensor, beta: Tensor, *, mean: np.ndarray | None = None,
              var: np.ndarray | None = None, eps: float = 1e-5,
              tape: GradTape | None = None) -> Tensor:
    """Feature normalization of (N,F) input.

    With ``mean``/``var`` given, normalizes by those frozen statistics
    (inference). Otherwise uses the batch's own statistics (training) and
    backpropagates through them.
    """
    if x.array.ndim != 2:
        raise ShapeError(f"batchnorm expects (N,F) input, got {x.shape}")
    a = x.array
    use_batch = mean is None
    if use_batch:
        mean, var = a.mean(axis=0), a.var(axis=0)
    inv = 1.0 / np.sqrt(var + eps)
    xh = (a - mean) * inv
    out = _wrap(gamma.array * xh + beta.array)

    def vjp(saved, g):
        xh_s, inv_s, gam = saved
        dgamma = (g * xh_s).sum(axis=0)
        dbeta = g.sum(axis=0)
        if use_batch:
            nb = xh_s.shape[0]
            dx = (gam * inv_s / nb) * (nb * g - dbeta - xh_s * dgamma)
        else:
            dx = g * gam * inv_s
        return dx, dgamma, dbeta

    return _emit(tape, "batchnorm", (x, gamma, beta), out,
                 (xh, inv.astype(a.dtype), gamma.array), vjp)


def dropout(x: Tensor, keep_prob: float, rng: np.random.Generator, *,
            tape: GradTape | None = None) -> Tensor:
    """Inverted dropout: Bernoulli keep mask scaled by 1/keep_prob.

    Train-time only; inference simply omits the call, which is consistent
    because of the inverted scaling.
    """
    if not 0.0 < keep_prob <= 1.0:
        raise ContractError(f"keep_prob must be in (0,1], got {keep_prob}")
    mask = (rng.random(x.shape) < keep_prob).astype(x.array.dtype) / x.array.dtype.type(keep_prob)
    out = _wrap(x.array * mask)

    def vjp(saved, g):
        return (g * saved[0],)

    return _emit(tape, "dropout", (x,), out, (mask,), vjp)


def cross_entropy_logits(logits: Tensor, labels: np.ndarray, *,
                         tape: GradTape | None = None) -> Tensor:
    """Mean cross-entropy of (N,L) logits against integer class labels."""
    if logits.array.ndim != 2:
        raise ShapeError(f"expected (N,L) logits, got {logits.shape}")
    a = logits.array
    n = a.shape[0]
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (n,):
        raise ShapeError(f"labels shape {y.shape} does not match logits {logits.shape}")
    z = a - a.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    nll = -(z[np.arange(n), y] - np.log(e.sum(axis=1)))
    out = _wrap(np.asarray(nll.mean(), dtype=a.dtype).reshape(()))

    def vjp(saved, g):
        ps, ys = saved
        gi = ps.copy()
        gi[np.arange(n), ys] -= 1.0
        return (gi * (g.reshape(()) / n),)

    return _emit(tape, "cross_entropy", (logits,), out, (p, y), vjp)
