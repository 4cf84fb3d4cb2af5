"""Coarse-to-fine relevance detection over a thumbnail container.

The search classifies every ``initial_stride``-th thumbnail, then repeatedly
halves the stride, classifying only inside expansion windows (plus or minus
the previous stride) around thumbnails already scored at or above the
threshold, down to stride 1. Unvisited thumbnails score 0.

Guarantees, both exercised by tests: positives are exactly the classifier's
positives among visited thumbnails (the search never invents scores), and
any maximal positive run at least ``initial_stride`` long is recovered in
full, because each refinement level finds every run member on its stride
grid inside windows inherited from the coarser level.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .container import ThumbnailContainer
from .errors import ConfigError, ModelError

CLASSIFY_BATCH = 64


@dataclass(frozen=True)
class PreferenceProfile:
    """User-selected categories with per-category weights and a relevance
    cutoff. Weights live in (0, 1], the threshold in (0, 1)."""

    categories: dict[str, float]
    threshold: float = 0.5

    def __post_init__(self):
        if not self.categories:
            raise ConfigError("preference profile has no categories")
        for name, weight in self.categories.items():
            if not 0.0 < weight <= 1.0:
                raise ConfigError(f"weight for {name!r} must be in (0,1], got {weight}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must be in (0,1), got {self.threshold}")

    def to_json(self) -> str:
        return json.dumps({"categories": self.categories, "threshold": self.threshold},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PreferenceProfile":
        raw = json.loads(text)
        return cls(categories={str(k): float(v) for k, v in raw["categories"].items()},
                   threshold=float(raw.get("threshold", 0.5)))

    def check_labels(self, labels: Sequence[str]) -> None:
        unknown = set(self.categories) - set(labels)
        if unknown:
            raise ModelError(f"profile categories not in model label table: {sorted(unknown)}")


def score(thumb_probs, labels: Sequence[str], profile: PreferenceProfile) -> float:
    """Relevance of one probability vector: the maximum over the profile's
    categories of weight times predicted probability (any-of semantics)."""
    profile.check_labels(labels)
    index = {name: i for i, name in enumerate(labels)}
    probs = np.asarray(thumb_probs, np.float64)
    return float(max(w * probs[index[name]] for name, w in profile.categories.items()))


@dataclass
class LevelLog:
    level: int
    stride: int
    indices: list[int]


@dataclass
class RelevanceTrack:
    """Per-thumbnail relevance with the visit pattern that produced it."""

    video_id: str
    threshold: float
    timestamps: list[float]
    scores: np.ndarray
    visited: np.ndarray
    levels: list[LevelLog] = field(default_factory=list)
    classifications: int = 0
    interval: float = 1.0
    duration: float = 0.0

    @property
    def count(self) -> int:
        return len(self.timestamps)

    def positives(self) -> list[int]:
        return [i for i in range(self.count)
                if self.visited[i] and self.scores[i] >= self.threshold]

    def to_json(self) -> str:
        return json.dumps({
            "video_id": self.video_id,
            "threshold": self.threshold,
            "interval": self.interval,
            "duration": self.duration,
            "scores": [{"index": i, "t": self.timestamps[i],
                        "score": float(self.scores[i]),
                        "visited": bool(self.visited[i])}
                       for i in range(self.count)],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RelevanceTrack":
        raw = json.loads(text)
        rows = sorted(raw["scores"], key=lambda r: r["index"])
        n = len(rows)
        scores = np.zeros(n, np.float64)
        visited = np.zeros(n, bool)
        stamps = []
        for i, row in enumerate(rows):
            if row["index"] != i:
                raise ConfigError(f"track is missing index {i}")
            stamps.append(float(row["t"]))
            scores[i] = float(row["score"])
            visited[i] = bool(row.get("visited", row["score"] > 0))
        return cls(video_id=raw["video_id"], threshold=float(raw["threshold"]),
                   timestamps=stamps, scores=scores, visited=visited,
                   interval=float(raw.get("interval", 1.0)),
                   duration=float(raw.get("duration", stamps[-1] if stamps else 0.0)))


@dataclass
class AnalyzeConfig:
    initial_stride: int = 8
    min_stride: int = 1

    def validate(self, count: int) -> None:
        for name, v in (("initial_stride", self.initial_stride), ("min_stride", self.min_stride)):
            if v < 1 or (v & (v - 1)) != 0:
                raise ConfigError(f"{name} must be a power of two, got {v}")
        if self.min_stride > self.initial_stride:
            raise ConfigError("min_stride cannot exceed initial_stride")
        if self.initial_stride > count:
            raise ConfigError(
                f"initial_stride {self.initial_stride} exceeds thumbnail count {count}")


def _search(count: int, threshold: float, config: AnalyzeConfig,
            score_batch: Callable[[list[int]], list[float]]):
    scores = np.zeros(count, np.float64)
    visited = np.zeros(count, bool)
    levels: list[LevelLog] = []
    positives: list[int] = []
    calls = 0

    def run_level(level: int, stride: int, indices: list[int]) -> None:
        nonlocal calls
        log = LevelLog(level, stride, indices)
        levels.append(log)
        if not indices:
            return
        vals = score_batch(indices)
        calls += len(indices)
        for i, v in zip(indices, vals):
            visited[i] = True
            scores[i] = v
            if v >= threshold:
                positives.append(i)

    stride = config.initial_stride
    run_level(0, stride, list(range(0, count, stride)))
    level = 0
    while stride > config.min_stride:
        prev_stride, stride, level = stride, stride // 2, level + 1
        window = np.zeros(count, bool)
        for p in positives:
            window[max(0, p - prev_stride):min(count, p + prev_stride + 1)] = True
        candidates = [i for i in range(0, count, stride)
                      if window[i] and not visited[i]]
        run_level(level, stride, candidates)
    return scores, visited, levels, calls


def work_bound(count: int, initial_stride: int, level0_seeds: int) -> int:
    """Upper bound on classifications: the coarse pass plus 2*initial_stride
    per coarse seed."""
    return math.ceil(count / initial_stride) + 2 * initial_stride * level0_seeds


def _container_scorer(container: ThumbnailContainer, model,
                      profile: PreferenceProfile) -> Callable[[list[int]], list[float]]:
    labels = list(model.labels)
    profile.check_labels(labels)
    index = {name: i for i, name in enumerate(labels)}
    sel = [index[name] for name in profile.categories]
    weights = np.array([profile.categories[name] for name in profile.categories])

    def score_batch(indices: list[int]) -> list[float]:
        out = []
        for lo in range(0, len(indices), CLASSIFY_BATCH):
            chunk = indices[lo:lo + CLASSIFY_BATCH]
            probs = model.predict_proba(container.thumbnail_batch(chunk))
            out.extend((probs[:, sel] * weights).max(axis=1).tolist())
        return out

    return score_batch


def _as_track(container: ThumbnailContainer, profile, scores, visited, levels, calls):
    h = container.header
    return RelevanceTrack(
        video_id=h.video_id, threshold=profile.threshold,
        timestamps=container.timestamps(), scores=scores, visited=visited,
        levels=levels, classifications=calls, interval=h.sample_interval,
        duration=h.duration)


def analyze(container: ThumbnailContainer, model, profile: PreferenceProfile,
            config: AnalyzeConfig | None = None) -> RelevanceTrack:
    """Hierarchical relevance search over a container.

    ``model`` needs ``labels`` and ``predict_proba(batch)``; classification
    happens level by level in batches, and results merge deterministically
    by thumbnail index.
    """
    config = config or AnalyzeConfig()
    config.validate(container.count)
    scorer = _container_scorer(container, model, profile)
    scores, visited, levels, calls = _search(
        container.count, profile.threshold, config, scorer)
    return _as_track(container, profile, scores, visited, levels, calls)


def exhaustive_scan(container: ThumbnailContainer, model,
                    profile: PreferenceProfile) -> RelevanceTrack:
    """Classify every thumbnail; the correctness baseline for analyze."""
    scorer = _container_scorer(container, model, profile)
    n = container.count
    indices = list(range(n))
    vals = scorer(indices)
    scores = np.array(vals, np.float64)
    visited = np.ones(n, bool)
    levels = [LevelLog(0, 1, indices)]
    return _as_track(container, profile, scores, visited, levels, n)
