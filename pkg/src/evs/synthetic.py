"""Deterministic synthetic video: a moving-shape renderer with two visual
styles, used wherever real footage is out of reach.

Outside any event span the frame is a dark drifting checkerboard; inside it
is a bright disc orbiting on a light background. Both styles are flat-shaded
so thumbnails stay deflate-friendly, and every pixel is a pure function of
(seed, time), so containers regenerate bit-identically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .container import box_downscale
from .errors import ConfigError


@dataclass
class SyntheticVideo:
    duration: float
    fps: float = 30.0
    width: int = 320
    height: int = 180
    seed: int = 0
    event_spans: list[tuple[float, float]] = field(default_factory=list)
    video_id: str = ""

    def __post_init__(self):
        if self.duration < 0 or self.fps <= 0:
            raise ConfigError("duration must be >= 0 and fps > 0")
        for s, e in self.event_spans:
            if s > e:
                raise ConfigError(f"event span [{s}, {e}] is reversed")

    @property
    def frame_count(self) -> int:
        # endpoint frame included so the final tick lands on a real frame
        return int(round(self.duration * self.fps)) + 1

    def in_event(self, t: float) -> bool:
        return any(s <= t <= e for s, e in self.event_spans)

    def frame_at(self, t: float) -> np.ndarray:
        """Render the frame nearest wall time ``t`` as (H, W, 3) uint8."""
        k = int(round(t * self.fps))
        k = min(max(k, 0), self.frame_count - 1)
        tf = k / self.fps
        return render_frame(tf, self.in_event(tf), self.width, self.height, self.seed)

    def frames(self):
        """Ordered (timestamp, frame) stream over the whole timeline."""
        for k in range(self.frame_count):
            tf = k / self.fps
            yield tf, render_frame(tf, self.in_event(tf), self.width, self.height, self.seed)


_mesh_cache: dict = {}
_hue_cache: dict = {}
_checker_cache: dict = {}


def _mesh(height: int, width: int):
    key = (height, width)
    if key not in _mesh_cache:
        _mesh_cache[key] = np.mgrid[0:height, 0:width]
    return _mesh_cache[key]


def _hue(seed: int) -> np.ndarray:
    if seed not in _hue_cache:
        _hue_cache[seed] = np.random.default_rng(seed).random(3)
    return _hue_cache[seed]


def render_frame(t: float, event: bool, width: int, height: int, seed: int) -> np.ndarray:
    base_hue = _hue(seed)
    if event:
        # bright disc orbiting a light background
        yy, xx = _mesh(height, width)
        frame = np.full((height, width, 3), 200, np.uint8)
        cx = width / 2 + (width / 3) * np.cos(t * 0.7 + seed)
        cy = height / 2 + (height / 3) * np.sin(t * 0.5 + seed)
        r = min(width, height) / 5
        disc = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        frame[disc] = (255.0 * (0.6 + 0.4 * base_hue)).astype(np.uint8)
        return frame
    # dark drifting checkerboard; only `period` distinct phases exist, so
    # frames are cached per (seed, size, phase)
    period = 16
    shift = int(t * 8) % period
    key = (seed, height, width, shift)
    cached = _checker_cache.get(key)
    if cached is None:
        yy, xx = _mesh(height, width)
        mask = (((yy + shift) // period + (xx + shift) // period) % 2).astype(np.float32)
        frame = np.empty((height, width, 3), np.float32)
        for c in range(3):
            frame[:, :, c] = 20.0 + 40.0 * mask * (0.5 + 0.5 * base_hue[c])
        cached = frame.astype(np.uint8)
        if len(_checker_cache) < 256:
            _checker_cache[key] = cached
    return cached.copy()


def make_training_set(per_class: int, seed: int = 0, *, render_size=(180, 320),
                      thumb_size=(90, 160)) -> tuple[np.ndarray, list[str]]:
    """Labeled thumbnails of both styles, rendered at video resolution and
    box-downscaled exactly like container generation, so a model trained
    here sees the deployment distribution."""
    rng = np.random.default_rng(seed)
    h, w = render_size
    th, tw = thumb_size
    images, labels = [], []
    for i in range(per_class):
        t = float(rng.random() * 1000)
        img = render_frame(t, True, w, h, int(rng.integers(0, 2**31)))
        images.append(box_downscale(img, tw, th))
        labels.append("event")
    for i in range(per_class):
        t = float(rng.random() * 1000)
        img = render_frame(t, False, w, h, int(rng.integers(0, 2**31)))
        images.append(box_downscale(img, tw, th))
        labels.append("background")
    X = np.stack([im.transpose(2, 0, 1) for im in images]).astype(np.float32) / 255.0
    return X, labels


def parse_synthetic_spec(spec: str) -> SyntheticVideo:
    """Parse ``synthetic:duration=600,fps=30,seed=1,events=200-260;400-420``."""
    body = spec.split(":", 1)[1] if spec.startswith("synthetic:") else spec
    kwargs: dict = {}
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise ConfigError(f"bad synthetic spec fragment {part!r}")
        key, value = part.split("=", 1)
        key = key.strip()
        if key == "events":
            spans = []
            for span in filter(None, value.split(";")):
                lo, _, hi = span.partition("-")
                spans.append((float(lo), float(hi)))
            kwargs["event_spans"] = spans
        elif key in ("duration", "fps"):
            kwargs[key] = float(value)
        elif key in ("width", "height", "seed"):
            kwargs[key] = int(value)
        elif key == "id":
            kwargs["video_id"] = value
        else:
            raise ConfigError(f"unknown synthetic spec key {key!r}")
    if "duration" not in kwargs:
        raise ConfigError("synthetic spec requires duration=<seconds>")
    return SyntheticVideo(**kwargs)
