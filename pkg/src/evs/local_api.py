"""Edge-local HTTP API: what the demo console talks to.

Routes:
    GET  /videos                      proxied VSP catalog
    GET  /model                       label table of the loaded classifier
    GET  /videos/{id}/thumbnails/{i}  one thumbnail as PNG
    POST /summarize                   {video_id, profile{categories,threshold},
                                       config?} -> {session_id}
    GET  /sessions/{id}               status, then track + EDL + metrics +
                                      a playback trace once done
    GET  /ui/...                      static frontend files when configured

Sessions run on worker threads keyed by id; records are immutable once
finished, so concurrent polling needs no locking beyond the registry map.
"""
from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import urlparse

from .analyzer import PreferenceProfile
from .client import SummarizeConfig, SummarySession, VspClient, play_simulation, summarize
from .container import decode
from .errors import ConfigError, EvsError, ModelError, NotFoundError, RangeError
from .pngcodec import encode_png

_STATUS = {ConfigError: 400, ModelError: 409, RangeError: 416, NotFoundError: 404}


@dataclass
class SessionRecord:
    session_id: str
    video_id: str
    status: str = "running"  # running | done | error
    error: str | None = None
    session: SummarySession | None = None
    trace_doc: list | None = None


@dataclass
class LocalApp:
    """State shared by the handler threads: VSP transport, model, sessions."""

    vsp_address: str
    model: object
    sample_period: float = 0.1
    _sessions: dict[str, SessionRecord] = field(default_factory=dict)
    _containers: dict[str, object] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)
    _counter: itertools.count = field(default_factory=itertools.count)

    def client(self) -> VspClient:
        return VspClient(self.vsp_address)

    def catalog(self) -> list[dict]:
        return self.client().catalog()

    def container(self, video_id: str):
        with self._lock:
            cached = self._containers.get(video_id)
        if cached is not None:
            return cached
        c = decode(self.client().container_bytes(video_id))
        with self._lock:
            self._containers[video_id] = c
        return c

    def thumbnail_png(self, video_id: str, index: int) -> bytes:
        c = self.container(video_id)
        if not 0 <= index < c.count:
            raise NotFoundError(f"thumbnail index {index} out of range 0..{c.count - 1}")
        return encode_png(c.thumbnail_pixels(index))

    def start_session(self, video_id: str, profile: PreferenceProfile,
                      config: SummarizeConfig) -> str:
        profile.check_labels(self.model.labels)
        with self._lock:
            sid = f"s{next(self._counter):04d}"
            record = SessionRecord(sid, video_id)
            self._sessions[sid] = record
        thread = threading.Thread(target=self._run, args=(record, profile, config),
                                  daemon=True)
        thread.start()
        return sid

    def _run(self, record: SessionRecord, profile, config) -> None:
        try:
            session = summarize(self.client(), record.video_id, profile,
                                self.model, config)
            trace = play_simulation(session, self.sample_period)
            record.session = session
            record.trace_doc = [{"wall": s.wall, "media": s.media, "speed": s.speed}
                                for s in trace]
            record.status = "done"
        except Exception as exc:
            record.error = str(exc)
            record.status = "error"

    def session_doc(self, sid: str) -> dict:
        with self._lock:
            record = self._sessions.get(sid)
        if record is None:
            raise NotFoundError(f"unknown session {sid!r}")
        doc = {"session_id": record.session_id, "video_id": record.video_id,
               "status": record.status}
        if record.status == "error":
            doc["error"] = record.error
        elif record.status == "done":
            s = record.session
            doc["track"] = json.loads(s.track.to_json())
            doc["edl"] = json.loads(s.edl)
            doc["metrics_ms"] = s.metrics_ms
            doc["stats"] = s.stats
            doc["trace"] = record.trace_doc
            doc["manifest"] = [vars(m) for m in s.manifest]
        return doc


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    app: LocalApp = None
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):
        pass

    def _send(self, code, body, content_type="application/json"):
        self.send_response(code)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, code, doc):
        self._send(code, json.dumps(doc).encode())

    def _fail(self, exc: Exception):
        code = 500
        for kind, status in _STATUS.items():
            if isinstance(exc, kind):
                code = status
                break
        else:
            if isinstance(exc, EvsError):
                code = 400
        self._json(code, {"error": str(exc)})

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        try:
            self._get_route()
        except Exception as exc:
            self._fail(exc)

    def _get_route(self):
        parts = [p for p in urlparse(self.path).path.split("/") if p]
        if parts == ["videos"]:
            self._json(200, {"videos": self.app.catalog()})
        elif parts == ["model"]:
            self._json(200, {"labels": list(self.app.model.labels)})
        elif len(parts) == 4 and parts[0] == "videos" and parts[2] == "thumbnails":
            png = self.app.thumbnail_png(parts[1], int(parts[3]))
            self._send(200, png, "image/png")
        elif len(parts) == 2 and parts[0] == "sessions":
            self._json(200, self.app.session_doc(parts[1]))
        elif parts[:1] == ["ui"] and self.ui_dir is not None:
            self._static(parts[1:])
        else:
            raise NotFoundError(f"no route for {self.path}")

    def _static(self, parts):
        rel = "/".join(parts) or "index.html"
        base = self.ui_dir.resolve()
        target = (base / rel).resolve()
        if not str(target).startswith(str(base)) or not target.is_file():
            raise NotFoundError(f"no static file {rel!r}")
        types = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".map": "application/json",
                 ".svg": "image/svg+xml"}
        self._send(200, target.read_bytes(),
                   types.get(target.suffix, "application/octet-stream"))

    def do_POST(self):
        try:
            if urlparse(self.path).path != "/summarize":
                raise NotFoundError(f"no route for {self.path}")
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length) or b"{}")
            profile = PreferenceProfile(
                categories={str(k): float(v)
                            for k, v in doc.get("profile", {}).get("categories", {}).items()},
                threshold=float(doc.get("profile", {}).get("threshold", 0.5)))
            cfg_doc = doc.get("config", {})
            config = SummarizeConfig(
                initial_stride=int(cfg_doc.get("initial_stride", 8)),
                min_stride=int(cfg_doc.get("min_stride", 1)),
                fast_speed=float(cfg_doc.get("fast_speed", 8.0)),
                min_duration=float(cfg_doc.get("min_duration", 0.0)),
                merge_gap=float(cfg_doc.get("merge_gap", 0.0)))
            sid = self.app.start_session(str(doc["video_id"]), profile, config)
            self._json(202, {"session_id": sid})
        except KeyError as exc:
            self._json(400, {"error": f"missing field {exc}"})
        except Exception as exc:
            self._fail(exc)


class LocalApiServer:
    def __init__(self, vsp_address: str, model, host: str = "127.0.0.1",
                 port: int = 0, ui_dir=None, sample_period: float = 0.1):
        self.app = LocalApp(vsp_address, model, sample_period)
        handler = type("BoundHandler", (_Handler,), {
            "app": self.app, "ui_dir": Path(ui_dir) if ui_dir else None})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True
        self._thread = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self):
        self._thread = threading.Thread(target=self._httpd.serve_forever,
                                        name="local-api", daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def serve_forever(self):
        self._httpd.serve_forever()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
