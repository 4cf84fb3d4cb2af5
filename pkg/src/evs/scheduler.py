"""Relevance tracks to gap-free variable-speed playback schedules.

Preferred intervals play at 1x, everything else at a configurable fast
speed; the entries abut exactly and cover the full timeline, so playback is
continuous rather than cut. Interval boundaries snap to thumbnail
timestamps, the finest evidence the track carries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .analyzer import RelevanceTrack
from .errors import ConfigError, ContractError, FormatError

PREFERRED = "preferred"
BACKGROUND = "background"

_EPS = 1e-9


@dataclass(frozen=True)
class SegmentInterval:
    start: float
    end: float
    kind: str

    def __post_init__(self):
        if not self.start < self.end:
            raise ContractError(f"interval start {self.start} must precede end {self.end}")
        if self.kind not in (PREFERRED, BACKGROUND):
            raise ContractError(f"unknown interval kind {self.kind!r}")

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ScheduleEntry:
    interval: SegmentInterval
    speed: float


@dataclass
class PlaybackSchedule:
    video_id: str
    fast_speed: float
    entries: list[ScheduleEntry]
    summary_duration: float

    @property
    def duration(self) -> float:
        return self.entries[-1].interval.end if self.entries else 0.0

    def preferred_intervals(self) -> list[SegmentInterval]:
        return [e.interval for e in self.entries if e.interval.kind == PREFERRED]

    def media_time_breakpoints(self) -> list[tuple[float, float, float]]:
        """(wall_start, media_start, speed) per entry, in order."""
        out = []
        wall = 0.0
        for e in self.entries:
            out.append((wall, e.interval.start, e.speed))
            wall += e.interval.length / e.speed
        return out


def segments_from_track(track: RelevanceTrack, threshold: float | None = None,
                        min_duration: float = 0.0,
                        merge_gap: float = 0.0) -> list[SegmentInterval]:
    """Threshold a track into abutting preferred/background intervals.

    Maximal runs of score >= threshold become preferred intervals spanning
    [first tick, last tick + interval); preferred intervals separated by
    gaps shorter than ``merge_gap`` merge; merged intervals shorter than
    ``min_duration`` demote to background. The complement fills with
    background so the result covers [0, duration exactly.
    """
    if min_duration < 0 or merge_gap < 0:
        raise ConfigError("min_duration and merge_gap must be >= 0")
    thr = track.threshold if threshold is None else threshold
    n = track.count
    step = track.interval
    duration = track.duration if track.duration > _EPS else (
        track.timestamps[-1] + step if n else 0.0)

    runs: list[tuple[float, float]] = []
    i = 0
    while i < n:
        if track.scores[i] >= thr:
            j = i
            while j + 1 < n and track.scores[j + 1] >= thr:
                j += 1
            start = track.timestamps[i]
            end = min(track.timestamps[j] + step, duration)
            if end - start > _EPS:  # a run at the final instant covers no time
                runs.append((start, end))
            i = j + 1
        else:
            i += 1

    merged: list[tuple[float, float]] = []
    for start, end in runs:
        if merged and start - merged[-1][1] < merge_gap - _EPS:
            merged[-1] = (merged[-1][0], end)
        else:
            merged.append((start, end))

    kept = [(s, e) for s, e in merged if e - s >= min_duration - _EPS]

    segments: list[SegmentInterval] = []
    cursor = 0.0
    for s, e in kept:
        if s > cursor + _EPS:
            segments.append(SegmentInterval(cursor, s, BACKGROUND))
        segments.append(SegmentInterval(max(s, cursor), e, PREFERRED))
        cursor = e
    if cursor < duration - _EPS:
        segments.append(SegmentInterval(cursor, duration, BACKGROUND))
    if not segments and duration > 0:
        segments.append(SegmentInterval(0.0, duration, BACKGROUND))
    return segments


def check_coverage(segments: list[SegmentInterval], duration: float) -> None:
    """Coverage, ordering, no-gap, no-overlap; ContractError names the gap."""
    if not segments:
        raise ContractError(f"no segments cover [0, {duration})")
    if abs(segments[0].start) > _EPS:
        raise ContractError(f"coverage gap [0, {segments[0].start})")
    for prev, cur in zip(segments, segments[1:]):
        if cur.start > prev.end + _EPS:
            raise ContractError(f"coverage gap [{prev.end}, {cur.start})")
        if cur.start < prev.end - _EPS:
            raise ContractError(f"segments overlap at [{cur.start}, {prev.end})")
    if abs(segments[-1].end - duration) > _EPS:
        raise ContractError(f"coverage gap [{segments[-1].end}, {duration})")


def build_schedule(segments: list[SegmentInterval], fast_speed: float,
                   duration: float, video_id: str = "") -> PlaybackSchedule:
    """Assign speeds (preferred 1x, background ``fast_speed``) and total the
    summary duration. Validates full coverage of [0, duration)."""
    if fast_speed <= 1.0:
        raise ConfigError(f"fast_speed must exceed 1, got {fast_speed}")
    check_coverage(segments, duration)
    entries = [ScheduleEntry(seg, 1.0 if seg.kind == PREFERRED else float(fast_speed))
               for seg in segments]
    summary = sum(e.interval.length / e.speed for e in entries)
    return PlaybackSchedule(video_id, float(fast_speed), entries, summary)


# ---------------------------------------------------------------------------
# canonical JSON edit-decision list


def _canon(value) -> str:
    if isinstance(value, dict):
        inner = ",".join(f"{json.dumps(k)}:{_canon(v)}" for k, v in sorted(value.items()))
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in value) + "]"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    raise ContractError(f"cannot canonicalize {type(value).__name__}")


def emit_edl(schedule: PlaybackSchedule) -> bytes:
    """Canonical JSON bytes: keys sorted, floats fixed at 6 decimals, so
    equal schedules always serialize to equal bytes."""
    check_coverage([e.interval for e in schedule.entries], schedule.duration)
    doc = {
        "video_id": schedule.video_id,
        "fast_speed": float(schedule.fast_speed),
        "summary_duration": float(schedule.summary_duration),
        "entries": [{
            "start": float(e.interval.start),
            "end": float(e.interval.end),
            "speed": float(e.speed),
            "kind": e.interval.kind,
        } for e in schedule.entries],
    }
    return _canon(doc).encode("utf-8")


def parse_edl(buf: bytes | str) -> PlaybackSchedule:
    try:
        doc = json.loads(buf)
        entries = [ScheduleEntry(
            SegmentInterval(float(e["start"]), float(e["end"]), str(e["kind"])),
            float(e["speed"])) for e in doc["entries"]]
        schedule = PlaybackSchedule(str(doc["video_id"]), float(doc["fast_speed"]),
                                    entries, float(doc["summary_duration"]))
    except (KeyError, TypeError, ValueError, ContractError) as exc:
        raise FormatError(f"malformed edit decision list: {exc}") from exc
    check_coverage([e.interval for e in schedule.entries], schedule.duration)
    recomputed = sum(e.interval.length / e.speed for e in schedule.entries)
    if abs(recomputed - schedule.summary_duration) > 1e-4:
        raise FormatError(
            f"summary_duration {schedule.summary_duration} inconsistent with "
            f"entries (recomputed {recomputed})")
    return schedule
