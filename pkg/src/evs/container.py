"""Thumbnail containers: the compact stand-in for a full video.

A container holds fixed-size RGB thumbnails sampled on a regular interval
grid, each tagged with its timestamp. The binary layout ("TNC1"), all
little-endian:

    magic "TNC1" | video id (u16 len + utf-8) | fps f32 | duration f64
    | sample interval f64 | width u16 | height u16 | count u32 | flags u8
    per thumbnail: timestamp f64 | payload
        flags bit 0 clear: raw RGB, width*height*3 bytes
        flags bit 0 set:   deflate, u32 compressed length + stream

Payloads are raw in memory either way; deflate exists to keep transfer
sizes near the few-KB mark, not to change semantics.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError

MAGIC = b"TNC1"
DEFAULT_WIDTH = 160
DEFAULT_HEIGHT = 90

FLAG_DEFLATE = 0x01


@dataclass
class ContainerHeader:
    video_id: str
    fps: float
    duration: float
    sample_interval: float
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    count: int = 0
    compressed: bool = False


@dataclass
class ThumbnailEntry:
    timestamp: float
    payload: bytes  # raw RGB, height*width*3 bytes

    def pixels(self, width: int, height: int) -> np.ndarray:
        return np.frombuffer(self.payload, np.uint8).reshape(height, width, 3)


@dataclass
class ThumbnailContainer:
    header: ContainerHeader
    entries: list[ThumbnailEntry] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.entries)

    def thumbnail_pixels(self, index: int) -> np.ndarray:
        return self.entries[index].pixels(self.header.width, self.header.height)

    def thumbnail_batch(self, indices) -> np.ndarray:
        """Stack thumbnails as a normalized (N, 3, H, W) float batch."""
        h, w = self.header.height, self.header.width
        out = np.empty((len(indices), 3, h, w), np.float32)
        for row, i in enumerate(indices):
            img = self.entries[i].pixels(w, h)
            out[row] = img.transpose(2, 0, 1).astype(np.float32) / 255.0
        return out

    def timestamps(self) -> list[float]:
        return [e.timestamp for e in self.entries]


# ---------------------------------------------------------------------------
# codec


def encode(container: ThumbnailContainer) -> bytes:
    h = container.header
    vid = h.video_id.encode("utf-8")
    if len(vid) > 0xFFFF:
        raise FormatError("video id too long for u16 length prefix")
    expected = h.width * h.height * 3
    flags = FLAG_DEFLATE if h.compressed else 0
    parts = [MAGIC, struct.pack("<H", len(vid)), vid,
             struct.pack("<fddHHIB", h.fps, h.duration, h.sample_interval,
                         h.width, h.height, len(container.entries), flags)]
    for e in container.entries:
        if len(e.payload) != expected:
            raise FormatError(
                f"payload is {len(e.payload)} bytes, expected {expected} "
                f"for {h.width}x{h.height} RGB")
        parts.append(struct.pack("<d", e.timestamp))
        if h.compressed:
            z = zlib.compress(e.payload, 9)
            parts.append(struct.pack("<I", len(z)))
            parts.append(z)
        else:
            parts.append(e.payload)
    return b"".join(parts)


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated container while reading {what}", offset=self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode(buf: bytes) -> ThumbnailContainer:
    """Parse container bytes. Fails closed: a structural defect raises
    FormatError with the byte offset; a partially-filled container never
    escapes."""
    c = _Cursor(buf)
    if c.take(4, "magic") != MAGIC:
        raise FormatError("bad container magic", offset=0)
    (id_len,) = c.unpack("<H", "video id length")
    raw_id = c.take(id_len, "video id")
    try:
        video_id = raw_id.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("invalid utf-8 video id", offset=c.pos - id_len) from exc
    fps, duration, interval, width, height, count, flags = c.unpack(
        "<fddHHIB", "header fields")
    if not (np.isfinite(fps) and fps > 0):
        raise FormatError(f"invalid fps {fps}", offset=c.pos)
    if not (np.isfinite(duration) and duration >= 0):
        raise FormatError(f"invalid duration {duration}", offset=c.pos)
    if not (np.isfinite(interval) and interval > 0):
        raise FormatError(f"invalid sample interval {interval}", offset=c.pos)
    if width == 0 or height == 0:
        raise FormatError(f"invalid dimensions {width}x{height}", offset=c.pos)
    if count == 0:
        raise FormatError("container holds no thumbnails", offset=c.pos)
    if flags & ~FLAG_DEFLATE:
        raise FormatError(f"unknown flag bits 0x{flags:02x}", offset=c.pos)
    compressed = bool(flags & FLAG_DEFLATE)
    expected = width * height * 3
    entries = []
    prev_ts = None
    for i in range(count):
        (ts,) = c.unpack("<d", f"timestamp {i}")
        if not np.isfinite(ts) or ts < 0 or ts > duration + 1e-9:
            raise FormatError(f"timestamp {ts} outside [0, {duration}]", offset=c.pos - 8)
        if prev_ts is not None and ts <= prev_ts:
            raise FormatError(f"timestamps not strictly increasing at entry {i}",
                              offset=c.pos - 8)
        prev_ts = ts
        if compressed:
            (zlen,) = c.unpack("<I", f"compressed length {i}")
            zdata = c.take(zlen, f"compressed payload {i}")
            try:
                payload = zlib.decompress(zdata)
            except zlib.error as exc:
                raise FormatError(f"corrupt deflate stream in entry {i}",
                                  offset=c.pos - zlen) from exc
            if len(payload) != expected:
                raise FormatError(
                    f"entry {i} decompressed to {len(payload)} bytes, expected {expected}",
                    offset=c.pos - zlen)
        else:
            payload = c.take(expected, f"payload {i}")
        entries.append(ThumbnailEntry(ts, bytes(payload)))
    if c.pos != len(buf):
        raise FormatError("trailing bytes after container", offset=c.pos)
    header = ContainerHeader(video_id, fps, duration, interval, width, height,
                             count, compressed)
    return ThumbnailContainer(header, entries)


# ---------------------------------------------------------------------------
# generation


def box_downscale(image: np.ndarray, width: int = DEFAULT_WIDTH,
                  height: int = DEFAULT_HEIGHT) -> np.ndarray:
    """Area-average an (H, W, 3) uint8 image down to (height, width, 3).

    Exact block means when dimensions divide evenly, otherwise means over
    floor-partitioned bins. Upscaling is rejected.
    """
    a = np.asarray(image)
    if a.ndim != 3 or a.shape[2] != 3:
        raise DataError(f"expected (H, W, 3) RGB image, got {a.shape}")
    h, w = a.shape[:2]
    if h < height or w < width:
        raise DataError(f"cannot box-downscale {w}x{h} up to {width}x{height}")
    f = a.astype(np.float32)
    if h % height == 0 and w % width == 0:
        bh, bw = h // height, w // width
        out = np.zeros((height, width, 3), np.float32)
        for i in range(bh):  # strided slice sums beat a 5-D reduction here
            for j in range(bw):
                out += f[i::bh, j::bw]
        out /= bh * bw
    else:
        row_edges = (np.arange(height) * h) // height
        col_edges = (np.arange(width) * w) // width
        sums = np.add.reduceat(np.add.reduceat(f, row_edges, axis=0), col_edges, axis=1)
        rows = np.diff(np.append(row_edges, h)).astype(np.float32)
        cols = np.diff(np.append(col_edges, w)).astype(np.float32)
        out = sums / (rows[:, None, None] * cols[None, :, None])
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def tick_times(duration: float, interval: float) -> list[float]:
    """The sampling grid: t=0 always, steps of ``interval``, plus a final
    tick at ``duration`` when at least half an interval would otherwise be
    left unrepresented."""
    if interval <= 0:
        raise DataError(f"interval must be positive, got {interval}")
    # 1e-9 slack so durations that are exact multiples do not lose the
    # final tick to floating-point division
    k = int(np.floor(duration / interval + 1e-9))
    ticks = [i * interval for i in range(k + 1)]
    if duration - ticks[-1] >= interval / 2:
        ticks.append(duration)
    return ticks


def generate(frames, interval: float, *, width: int = DEFAULT_WIDTH,
             height: int = DEFAULT_HEIGHT, fps: float | None = None,
             video_id: str = "", compressed: bool = True) -> ThumbnailContainer:
    """Build a container from an ordered (timestamp, RGB image) stream.

    One thumbnail per interval tick (the tick grid starts at the first
    frame; stored timestamps are relative to it), each the temporally
    nearest frame to its tick, box-averaged down to the thumbnail size.
    Single pass; frames are downscaled at emission and never accumulated.
    """
    if interval <= 0:
        raise DataError(f"interval must be positive, got {interval}")
    entries: list[ThumbnailEntry] = []
    first_ts: float | None = None
    prev_rel: float | None = None
    prev_img: np.ndarray | None = None
    next_tick = 0
    n_frames = 0

    def emit(tick_time: float, img: np.ndarray) -> None:
        entries.append(ThumbnailEntry(tick_time, box_downscale(img, width, height).tobytes()))

    for ts, img in frames:
        if first_ts is None:
            first_ts = ts
        rel = ts - first_ts
        if prev_rel is not None and rel <= prev_rel:
            raise DataError(f"frames not temporally ordered at t={ts}")
        n_frames += 1
        # every tick the stream has now reached is resolvable: the nearest
        # frame is either the previous one or this one (ties go earlier)
        while next_tick * interval <= rel + 1e-9:
            t = next_tick * interval
            if prev_rel is not None and (t - prev_rel) <= (rel - t):
                emit(t, prev_img)
            else:
                emit(t, img)
            next_tick += 1
        prev_rel, prev_img = rel, img
    if n_frames == 0:
        raise DataError("empty frame sequence")
    duration = prev_rel
    if duration - entries[-1].timestamp >= interval / 2:
        emit(duration, prev_img)
    if fps is None:
        fps = (n_frames - 1) / duration if duration > 0 else 1.0
    header = ContainerHeader(video_id, fps, duration, interval, width, height,
                             len(entries), compressed)
    return ThumbnailContainer(header, entries)


def generate_from_source(source, interval: float, *, width: int = DEFAULT_WIDTH,
                         height: int = DEFAULT_HEIGHT, video_id: str = "",
                         compressed: bool = True) -> ThumbnailContainer:
    """Like :func:`generate` for random-access sources (``duration``,
    ``fps``, ``frame_at(t)``); renders only the frames on the tick grid."""
    ticks = tick_times(source.duration, interval)
    entries = [ThumbnailEntry(t, box_downscale(source.frame_at(t), width, height).tobytes())
               for t in ticks]
    header = ContainerHeader(video_id or getattr(source, "video_id", ""),
                             source.fps, source.duration, interval, width, height,
                             len(entries), compressed)
    return ThumbnailContainer(header, entries)


# ---------------------------------------------------------------------------
# economics


@dataclass(frozen=True)
class ReductionReport:
    """How much smaller the container is than the frames it stands in for,
    on three explicit bases (the bases matter; no single number captures
    all of count, bytes-in-flight, and per-image memory)."""

    frame_count: int
    thumbnail_count: int
    count_reduction_pct: float
    encoded_bytes: int
    original_bytes: int
    volume_reduction_pct: float
    thumbnail_image_bytes: int
    frame_image_bytes: int
    memory_reduction_pct: float

    @property
    def frames_per_thumbnail(self) -> float:
        return self.frame_count / self.thumbnail_count


def reduction_report(container: ThumbnailContainer, original_frame_count: int,
                     original_frame_bytes: int) -> ReductionReport:
    """Count, processing-volume, and per-image memory reductions, as
    percentages. ``original_frame_bytes`` is the size of one full frame."""
    if original_frame_count <= 0 or original_frame_bytes <= 0:
        raise DataError("original frame count and bytes must be positive")
    h = container.header
    thumbs = container.count
    encoded = len(encode(container))
    thumb_img = h.width * h.height * 3
    total_original = original_frame_count * original_frame_bytes
    return ReductionReport(
        frame_count=original_frame_count,
        thumbnail_count=thumbs,
        count_reduction_pct=100.0 * (1.0 - thumbs / original_frame_count),
        encoded_bytes=encoded,
        original_bytes=total_original,
        volume_reduction_pct=100.0 * (1.0 - encoded / total_original),
        thumbnail_image_bytes=thumb_img,
        frame_image_bytes=original_frame_bytes,
        memory_reduction_pct=100.0 * (1.0 - thumb_img / original_frame_bytes),
    )
