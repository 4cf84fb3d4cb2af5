"""Binary parameter checkpoints.

Layout, all little-endian:

    magic "EVSM" | version u16 | tensor count u32
    per tensor:  name len u16 | name utf-8 | rank u32 | dims u32 * rank
                 | payload f32 * prod(dims)
    optional label table: count u16 | (len u16 | utf-8) * count

Payloads are always stored as float32 regardless of in-memory dtype.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

MAGIC = b"EVSM"
VERSION = 1


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated checkpoint while reading {what}", offset=self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def string(self, what: str) -> str:
        n = self.u16(what)
        raw = self.take(n, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError(f"invalid utf-8 in {what}", offset=self.pos - n) from e


def _encode_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise FormatError(f"string too long for u16 length prefix: {len(raw)} bytes")
    return struct.pack("<H", len(raw)) + raw


def write_checkpoint(tensors: list[tuple[str, np.ndarray]],
                     labels: list[str] | None = None) -> bytes:
    parts = [MAGIC, struct.pack("<HI", VERSION, len(tensors))]
    for name, arr in tensors:
        a = np.ascontiguousarray(arr, dtype=np.float32)
        parts.append(_encode_string(name))
        parts.append(struct.pack("<I", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape) if a.ndim else b"")
        parts.append(a.tobytes())
    if labels is not None:
        parts.append(struct.pack("<H", len(labels)))
        for name in labels:
            parts.append(_encode_string(name))
    return b"".join(parts)


def read_checkpoint(buf: bytes) -> tuple[list[tuple[str, np.ndarray]], list[str] | None]:
    """Decode a checkpoint. Fails closed: any structural defect raises
    FormatError with the offending byte offset; nothing partial escapes."""
    r = _Reader(buf)
    if r.take(4, "magic") != MAGIC:
        raise FormatError("bad checkpoint magic", offset=0)
    version = r.u16("version")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    count = r.u32("tensor count")
    tensors: list[tuple[str, np.ndarray]] = []
    for _ in range(count):
        name = r.string("tensor name")
        rank = r.u32(f"rank of {name!r}")
        if rank > 8:
            raise FormatError(f"implausible rank {rank} for {name!r}", offset=r.pos - 4)
        dims = tuple(r.u32(f"dim of {name!r}") for _ in range(rank))
        if any(d == 0 for d in dims):
            raise FormatError(f"zero dimension in {name!r}: {dims}", offset=r.pos)
        n = 1
        for d in dims:
            n *= d
        payload = r.take(4 * n, f"payload of {name!r}")
        tensors.append((name, np.frombuffer(payload, "<f4").reshape(dims).copy()))
    labels = None
    if r.pos < len(buf):
        n_labels = r.u16("label count")
        labels = [r.string("label") for _ in range(n_labels)]
    if r.pos != len(buf):
        raise FormatError("trailing bytes after checkpoint", offset=r.pos)
    return tensors, labels


def save_checkpoint(path, tensors, labels=None) -> None:
    with open(path, "wb") as f:
        f.write(write_checkpoint(tensors, labels))


def load_checkpoint(path):
    with open(path, "rb") as f:
        return read_checkpoint(f.read())
