"""Video service provider: a read-only store of thumbnail containers and
opaque video segments behind a small HTTP API.

Store layout on disk:

    root/catalog.json
    root/videos/<id>/container.tnc
    root/videos/<id>/segments/<index>.bin

Endpoints: GET /catalog, GET /videos/{id}/container, and
GET /videos/{id}/segment?start=&end= which returns the minimal run of
stored segment blobs covering the requested span, concatenated, with the
actually covered interval echoed in X-Covered-Start/X-Covered-End and the
blob sizes in X-Segment-Sizes.

Segment payloads are synthetic bytes seeded by (video id, segment index),
so integrity is checksum-verifiable without any codec. The catalog's
full_video_bytes declares the source asset size (what frame-by-frame
processing would move); the delivery segments are a smaller rendition.
"""
from __future__ import annotations

import hashlib
import json
import math
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from . import container as tnc
from .errors import ConfigError, NotFoundError, RangeError
from .synthetic import SyntheticVideo

CATALOG_NAME = "catalog.json"


@dataclass
class SegmentRecord:
    start: float
    end: float
    file: str
    bytes: int
    sha256: str


@dataclass
class CatalogEntry:
    video_id: str
    title: str
    duration: float
    container: str
    container_bytes: int
    container_sha256: str
    full_video_bytes: int
    segments: list[SegmentRecord] = field(default_factory=list)

    def summary(self) -> dict:
        return {"video_id": self.video_id, "title": self.title,
                "duration": self.duration, "full_video_bytes": self.full_video_bytes,
                "container_bytes": self.container_bytes,
                "segment_count": len(self.segments)}


def segment_payload(video_id: str, index: int, size: int) -> bytes:
    digest = hashlib.sha256(f"{video_id}:{index}".encode()).digest()
    seed = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(seed).integers(0, 256, size, dtype=np.uint8).tobytes()


@dataclass
class StoreVideoSpec:
    video: SyntheticVideo
    title: str = ""
    interval: float = 1.0
    segment_seconds: float = 10.0
    segment_bitrate_bps: float = 2_000_000.0   # delivery rendition
    declared_bitrate_bps: float = 8_000_000.0  # source asset


def build_store(root, specs: list[StoreVideoSpec]) -> dict:
    """Materialize containers, segment blobs and catalog.json under root."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    videos = []
    for spec in specs:
        video = spec.video
        if not video.video_id:
            raise ConfigError("store videos need a video_id")
        vdir = root / "videos" / video.video_id
        (vdir / "segments").mkdir(parents=True, exist_ok=True)

        c = tnc.generate_from_source(video, spec.interval, video_id=video.video_id)
        cbytes = tnc.encode(c)
        (vdir / "container.tnc").write_bytes(cbytes)

        segments = []
        n_seg = max(1, math.ceil(video.duration / spec.segment_seconds))
        for i in range(n_seg):
            s = i * spec.segment_seconds
            e = min((i + 1) * spec.segment_seconds, video.duration)
            size = max(1, int((e - s) * spec.segment_bitrate_bps / 8))
            blob = segment_payload(video.video_id, i, size)
            name = f"segments/{i:05d}.bin"
            (vdir / name).write_bytes(blob)
            segments.append({"start": s, "end": e, "file": name, "bytes": size,
                             "sha256": hashlib.sha256(blob).hexdigest()})
        videos.append({
            "video_id": video.video_id,
            "title": spec.title or video.video_id,
            "duration": video.duration,
            "container": "container.tnc",
            "container_bytes": len(cbytes),
            "container_sha256": hashlib.sha256(cbytes).hexdigest(),
            "full_video_bytes": int(video.duration * spec.declared_bitrate_bps / 8),
            "segments": segments,
        })
    catalog = {"videos": sorted(videos, key=lambda v: v["video_id"])}
    (root / CATALOG_NAME).write_text(json.dumps(catalog, indent=2, sort_keys=True))
    return catalog


class VspStore:
    """Immutable view over a store directory; reload swaps atomically."""

    def __init__(self, root):
        self.root = Path(root)
        self._entries: dict[str, CatalogEntry] = {}
        self.reload()

    def reload(self) -> None:
        raw = json.loads((self.root / CATALOG_NAME).read_text())
        entries = {}
        for v in raw["videos"]:
            entries[v["video_id"]] = CatalogEntry(
                video_id=v["video_id"], title=v["title"], duration=v["duration"],
                container=v["container"], container_bytes=v["container_bytes"],
                container_sha256=v["container_sha256"],
                full_video_bytes=v["full_video_bytes"],
                segments=[SegmentRecord(**s) for s in v["segments"]])
        self._entries = entries  # atomic swap

    def catalog(self) -> list[dict]:
        entries = self._entries
        return [entries[k].summary() for k in sorted(entries)]

    def entry(self, video_id: str) -> CatalogEntry:
        try:
            return self._entries[video_id]
        except KeyError:
            raise NotFoundError(f"unknown video id {video_id!r}") from None

    def container_bytes(self, video_id: str) -> bytes:
        e = self.entry(video_id)
        return (self.root / "videos" / video_id / e.container).read_bytes()

    def segment_cover(self, video_id: str, start: float, end: float):
        """Minimal run of stored segments covering [start, end)."""
        e = self.entry(video_id)
        if not (0 <= start < end <= e.duration + 1e-9):
            raise RangeError(
                f"requested [{start}, {end}) outside [0, {e.duration})")
        hits = [s for s in e.segments if s.end > start + 1e-12 and s.start < end - 1e-12]
        if not hits:
            raise RangeError(f"no stored segments intersect [{start}, {end})")
        blobs = [(self.root / "videos" / video_id / s.file).read_bytes() for s in hits]
        covered = (hits[0].start, hits[-1].end)
        return blobs, covered, hits


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    store: VspStore = None  # set per server class

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, body: bytes, content_type: str = "application/octet-stream",
              extra: dict | None = None) -> None:
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for k, v in (extra or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, doc) -> None:
        self._send(code, json.dumps(doc).encode(), "application/json")

    def do_GET(self):
        try:
            self._route()
        except NotFoundError as e:
            self._send_json(404, {"error": str(e)})
        except RangeError as e:
            self._send_json(416, {"error": str(e)})
        except (ValueError, KeyError) as e:
            self._send_json(400, {"error": str(e)})
        except BrokenPipeError:
            pass

    def _route(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if parts == ["catalog"]:
            self._send_json(200, {"videos": self.store.catalog()})
            return
        if len(parts) == 3 and parts[0] == "videos" and parts[2] == "container":
            self._send(200, self.store.container_bytes(parts[1]))
            return
        if len(parts) == 3 and parts[0] == "videos" and parts[2] == "segment":
            q = parse_qs(url.query)
            try:
                start = float(q["start"][0])
                end = float(q["end"][0])
            except (KeyError, IndexError, ValueError):
                self._send_json(400, {"error": "segment requires numeric start and end"})
                return
            blobs, covered, hits = self.store.segment_cover(parts[1], start, end)
            self._send(200, b"".join(blobs), extra={
                "X-Covered-Start": repr(covered[0]),
                "X-Covered-End": repr(covered[1]),
                "X-Segment-Sizes": ",".join(str(len(b)) for b in blobs),
                "X-Segment-Indices": ",".join(s.file.rsplit("/", 1)[-1].split(".")[0]
                                              for s in hits),
            })
            return
        raise NotFoundError(f"no route for {url.path}")


class VspServer:
    """Threaded HTTP server over a store directory."""

    def __init__(self, root, host: str = "127.0.0.1", port: int = 0):
        self.store = VspStore(root)
        handler = type("BoundHandler", (_Handler,), {"store": self.store})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "VspServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        name="vsp-server", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
