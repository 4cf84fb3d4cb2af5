"""Edge-side orchestration: fetch container, analyze locally, schedule,
fetch the segments the schedule needs.

Preference analysis never leaves the device: the only traffic is the
container download and time-ranged segment requests, which tests verify
with a recording transport hook.
"""
from __future__ import annotations

import json
import queue
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .analyzer import AnalyzeConfig, PreferenceProfile, RelevanceTrack, analyze
from .container import ThumbnailContainer, decode
from .errors import ConfigError, NotFoundError, RangeError, TransportError
from .scheduler import (
    BACKGROUND,
    PREFERRED,
    PlaybackSchedule,
    build_schedule,
    emit_edl,
    segments_from_track,
)


class VspClient:
    """Thin HTTP transport to a video service provider.

    ``recorder`` (if given) is called with a dict per outgoing request and
    exists so tests can assert what crosses the network. Failures surface
    as retryable TransportError after ``retries`` attempts.
    """

    def __init__(self, base_url: str, timeout: float = 10.0, retries: int = 2,
                 recorder=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.recorder = recorder

    def _get(self, path: str) -> tuple[bytes, dict]:
        url = f"{self.base_url}{path}"
        if self.recorder is not None:
            self.recorder({"method": "GET", "url": url, "body": None})
        last = None
        for _ in range(self.retries + 1):
            try:
                with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                    return resp.read(), dict(resp.headers)
            except urllib.error.HTTPError as e:
                detail = e.read().decode("utf-8", "replace")
                if e.code == 404:
                    raise NotFoundError(detail) from e
                if e.code == 416:
                    raise RangeError(detail) from e
                raise TransportError(f"HTTP {e.code} from {url}: {detail}",
                                     retryable=e.code >= 500) from e
            except (urllib.error.URLError, TimeoutError, ConnectionError) as e:
                last = e
        raise TransportError(f"cannot reach {url}: {last}") from last

    def catalog(self) -> list[dict]:
        body, _ = self._get("/catalog")
        return json.loads(body)["videos"]

    def container_bytes(self, video_id: str) -> bytes:
        body, _ = self._get(f"/videos/{video_id}/container")
        return body

    def segment(self, video_id: str, start: float, end: float):
        body, headers = self._get(
            f"/videos/{video_id}/segment?start={start!r}&end={end!r}")
        covered = (float(headers["X-Covered-Start"]), float(headers["X-Covered-End"]))
        sizes = [int(s) for s in headers["X-Segment-Sizes"].split(",")]
        return body, covered, sizes


@dataclass
class SummarizeConfig:
    initial_stride: int = 8
    min_stride: int = 1
    fast_speed: float = 8.0
    min_duration: float = 0.0
    merge_gap: float = 0.0
    prefetch_preferred: bool = True

    def validate(self):
        if self.fast_speed <= 1.0:
            raise ConfigError(f"fast_speed must exceed 1, got {self.fast_speed}")


@dataclass
class FetchedSegment:
    start: float
    end: float
    covered_start: float
    covered_end: float
    bytes: int
    kind: str


@dataclass
class SummarySession:
    video_id: str
    profile: PreferenceProfile
    track: RelevanceTrack
    schedule: PlaybackSchedule
    edl: bytes
    manifest: list[FetchedSegment]
    metrics_ms: dict[str, float]
    stats: dict[str, float] = field(default_factory=dict)


def summarize(vsp, video_id: str, profile: PreferenceProfile, model,
              config: SummarizeConfig | None = None) -> SummarySession:
    """Run the full loop against a VSP address or client.

    Fails fast on an invalid profile before any network traffic. Stage
    wall-clock times land in ``metrics_ms``; transfer sizes in ``stats``.
    Preferred segments are fetched eagerly, background segments are left
    for playback-time prefetch.
    """
    if not isinstance(profile, PreferenceProfile):
        raise ConfigError("profile must be a PreferenceProfile")
    profile.check_labels(model.labels)
    config = config or SummarizeConfig()
    config.validate()
    client = vsp if isinstance(vsp, VspClient) else VspClient(str(vsp))

    metrics: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    catalog = {v["video_id"]: v for v in client.catalog()}
    if video_id not in catalog:
        raise NotFoundError(f"unknown video id {video_id!r}")
    raw = client.container_bytes(video_id)
    container: ThumbnailContainer = decode(raw)
    metrics["fetch_container"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    track = analyze(container, model, profile,
                    AnalyzeConfig(min(config.initial_stride, _floor_pow2(container.count)),
                                  config.min_stride))
    analyze_s = time.perf_counter() - t0
    metrics["analyze"] = analyze_s * 1000

    t0 = time.perf_counter()
    segments = segments_from_track(track, min_duration=config.min_duration,
                                   merge_gap=config.merge_gap)
    duration = track.duration if track.duration > 1e-9 else (
        track.timestamps[-1] + track.interval)
    schedule = build_schedule(segments, config.fast_speed, duration, video_id=video_id)
    edl = emit_edl(schedule)
    metrics["schedule"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    manifest: list[FetchedSegment] = []
    segment_bytes = 0
    if config.prefetch_preferred:
        for seg in schedule.preferred_intervals():
            body, covered, _ = client.segment(video_id, seg.start, seg.end)
            segment_bytes += len(body)
            manifest.append(FetchedSegment(seg.start, seg.end, covered[0], covered[1],
                                           len(body), PREFERRED))
    metrics["fetch_segments"] = (time.perf_counter() - t0) * 1000
    metrics["total"] = (time.perf_counter() - t_total) * 1000

    stats = {
        "container_bytes": float(len(raw)),
        "segment_bytes": float(segment_bytes),
        "downloaded_bytes": float(len(raw) + segment_bytes),
        "full_video_bytes": float(catalog[video_id]["full_video_bytes"]),
        "classifications": float(track.classifications),
        "thumbnails": float(container.count),
        "thumbnails_per_second": (track.classifications / analyze_s
                                  if analyze_s > 0 else 0.0),
        "frames_per_thumbnail": container.header.fps * container.header.sample_interval,
    }
    return SummarySession(video_id, profile, track, schedule, edl, manifest,
                          metrics, stats)


def _floor_pow2(n: int) -> int:
    p = 1
    while p * 2 <= n:
        p *= 2
    return p


# ---------------------------------------------------------------------------
# playback


@dataclass(frozen=True)
class TraceSample:
    wall: float
    media: float
    speed: float


def play_simulation(session_or_schedule, sample_period: float = 0.1) -> list[TraceSample]:
    """Simulated playback trace: (wall, media, speed) samples.

    Media time is continuous and piecewise linear with slope equal to the
    active speed; the final sample lands exactly on (summary_duration,
    duration).
    """
    schedule = getattr(session_or_schedule, "schedule", session_or_schedule)
    if sample_period <= 0:
        raise ConfigError("sample_period must be positive")
    breaks = schedule.media_time_breakpoints()
    summary = schedule.summary_duration

    def media_at(wall: float) -> tuple[float, float]:
        for (w0, m0, speed), nxt in zip(breaks, breaks[1:] + [(summary, None, None)]):
            if wall < nxt[0] or nxt[1] is None:
                return m0 + (wall - w0) * speed, speed
        last = breaks[-1]
        return last[1], last[2]

    samples = []
    k = 0
    while k * sample_period < summary:
        wall = k * sample_period
        media, speed = media_at(wall)
        samples.append(TraceSample(wall, media, speed))
        k += 1
    samples.append(TraceSample(summary, schedule.duration, breaks[-1][2]))
    return samples


def media_time_at(trace: list[TraceSample], wall: float) -> float:
    """Piecewise-linear lookup into a trace (scrubbing support)."""
    if wall <= trace[0].wall:
        return trace[0].media
    for a, b in zip(trace, trace[1:]):
        if wall <= b.wall:
            f = (wall - a.wall) / (b.wall - a.wall) if b.wall > a.wall else 0.0
            return a.media + f * (b.media - a.media)
    return trace[-1].media


class BackgroundPrefetcher:
    """Fetches background segments in schedule order through a bounded
    queue (capacity 4) while playback consumes them."""

    def __init__(self, client: VspClient, session: SummarySession, capacity: int = 4):
        self.client = client
        self.session = session
        self.queue: queue.Queue = queue.Queue(maxsize=capacity)
        self.fetched: list[FetchedSegment] = []
        self.max_backlog = 0
        self._thread: threading.Thread | None = None
        self._error: Exception | None = None

    def _targets(self):
        return [e.interval for e in self.session.schedule.entries
                if e.interval.kind == BACKGROUND]

    def _produce(self):
        try:
            for seg in self._targets():
                body, covered, _ = self.client.segment(
                    self.session.video_id, seg.start, seg.end)
                item = FetchedSegment(seg.start, seg.end, covered[0], covered[1],
                                      len(body), BACKGROUND)
                self.queue.put(item)  # blocks at capacity
                self.max_backlog = max(self.max_backlog, self.queue.qsize())
            self.queue.put(None)
        except Exception as exc:  # surfaced on drain
            self._error = exc
            self.queue.put(None)

    def run_with_playback(self, sample_period: float = 0.1):
        """Start prefetching, simulate playback, drain the queue. Returns
        (trace, fetched background segments)."""
        self._thread = threading.Thread(target=self._produce, daemon=True)
        self._thread.start()
        trace = play_simulation(self.session, sample_period)
        while True:
            item = self.queue.get()
            if item is None:
                break
            self.fetched.append(item)
        self._thread.join(timeout=30)
        if self._error is not None:
            raise self._error
        return trace, self.fetched
