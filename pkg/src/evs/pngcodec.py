"""Minimal PNG writer for 8-bit RGB images. Encoder only; tests decode
through an independent library to close the loop."""
from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import DataError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(kind + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def encode_png(image: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as a deterministic RGB PNG."""
    a = np.asarray(image)
    if a.ndim != 3 or a.shape[2] != 3 or a.dtype != np.uint8:
        raise DataError(f"expected (H, W, 3) uint8 image, got {a.shape} {a.dtype}")
    h, w = a.shape[:2]
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)  # 8-bit truecolor
    raw = b"".join(b"\x00" + a[row].tobytes() for row in range(h))  # filter 0
    idat = zlib.compress(raw, 9)
    return _SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")
