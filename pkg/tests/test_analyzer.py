"""Hierarchical search vs the exhaustive-scan oracle."""

import math

import numpy as np
import pytest

from evs import ConfigError, ModelError
from evs.analyzer import (
    AnalyzeConfig,
    PreferenceProfile,
    RelevanceTrack,
    _search,
    analyze,
    exhaustive_scan,
    score,
    work_bound,
)
from evs.container import ContainerHeader, ThumbnailContainer, ThumbnailEntry


def block_layout(count, blocks):
    """0/1 ground-truth scores for a union of inclusive index blocks."""
    truth = np.zeros(count)
    for lo, hi in blocks:
        truth[lo:hi + 1] = 1.0
    return truth


def make_scorer(truth):
    calls = []

    def score_batch(indices):
        calls.append(list(indices))
        return [float(truth[i]) for i in indices]

    score_batch.calls = calls
    return score_batch


def brute_force_positives(truth, threshold=0.5):
    return [i for i, v in enumerate(truth) if v >= threshold]


class TestScore:
    def test_single_category(self):
        p = PreferenceProfile({"Soccer Shot": 1.0})
        assert score([0.9, 0.1], ["Soccer Shot", "Running"], p) == pytest.approx(0.9)

    def test_weight_scales(self):
        p = PreferenceProfile({"a": 0.5})
        assert score([0.8, 0.2], ["a", "b"], p) == pytest.approx(0.4)

    def test_max_rule_over_categories(self):
        p = PreferenceProfile({"a": 1.0, "b": 1.0})
        assert score([0.3, 0.7], ["a", "b"], p) == pytest.approx(0.7)

    def test_empty_profile_rejected(self):
        with pytest.raises(ConfigError):
            PreferenceProfile({})

    def test_zero_weight_rejected(self):
        with pytest.raises(ConfigError):
            PreferenceProfile({"a": 0.0})

    def test_unknown_category_is_model_error(self):
        p = PreferenceProfile({"zebra": 1.0})
        with pytest.raises(ModelError):
            score([1.0], ["horse"], p)

    def test_profile_json_round_trip(self):
        p = PreferenceProfile({"a": 0.7, "b": 1.0}, threshold=0.6)
        assert PreferenceProfile.from_json(p.to_json()) == p


class TestSearchCore:
    def test_planted_block_recovered_exactly(self):
        truth = block_layout(16, [(5, 8)])
        scorer = make_scorer(truth)
        scores, visited, levels, calls = _search(16, 0.5, AnalyzeConfig(4), scorer)
        found = [i for i in range(16) if visited[i] and scores[i] >= 0.5]
        assert found == [5, 6, 7, 8]
        assert levels[0].indices == [0, 4, 8, 12]

    def test_all_negative_no_refinement(self):
        truth = np.zeros(64)
        scorer = make_scorer(truth)
        _, _, levels, calls = _search(64, 0.5, AnalyzeConfig(8), scorer)
        assert calls == math.ceil(64 / 8)
        assert all(not lv.indices for lv in levels[1:])

    def test_stride_one_equals_exhaustive(self):
        rng = np.random.default_rng(0)
        truth = (rng.random(40) > 0.6).astype(float)
        scores, visited, _, calls = _search(40, 0.5, AnalyzeConfig(1), make_scorer(truth))
        assert calls == 40
        assert visited.all()
        np.testing.assert_array_equal(scores, truth)

    def test_unvisited_score_zero(self):
        truth = block_layout(32, [(8, 16)])
        scores, visited, _, _ = _search(32, 0.5, AnalyzeConfig(8), make_scorer(truth))
        assert not scores[~visited].any()

    def test_strides_halve_per_level(self):
        truth = block_layout(64, [(20, 40)])
        _, _, levels, _ = _search(64, 0.5, AnalyzeConfig(16), make_scorer(truth))
        assert [lv.stride for lv in levels] == [16, 8, 4, 2, 1]

    def test_min_stride_stops_early(self):
        truth = block_layout(64, [(20, 40)])
        _, _, levels, _ = _search(64, 0.5, AnalyzeConfig(16, min_stride=4), make_scorer(truth))
        assert [lv.stride for lv in levels] == [16, 8, 4]

    def test_soundness_never_invents_positives(self):
        rng = np.random.default_rng(1)
        for trial in range(50):
            count = int(rng.integers(8, 128))
            truth = (rng.random(count) > 0.7).astype(float)
            stride = 2 ** int(rng.integers(0, 4))
            stride = min(stride, count)
            scores, visited, _, _ = _search(count, 0.5, AnalyzeConfig(stride),
                                            make_scorer(truth))
            mine = {i for i in range(count) if visited[i] and scores[i] >= 0.5}
            assert mine <= set(brute_force_positives(truth))

    def test_block_completeness_and_work_bound(self):
        # random layouts where every block >= initial_stride: recall and
        # precision 1.0 against brute force, within the work budget
        rng = np.random.default_rng(2)
        for trial in range(300):
            count = int(rng.integers(16, 200))
            stride = 2 ** int(rng.integers(1, 5))
            if stride > count:
                continue
            blocks = []
            cursor = 0
            for _ in range(int(rng.integers(0, 4))):
                lo = cursor + int(rng.integers(0, 20))
                length = stride + int(rng.integers(0, 30))
                hi = min(lo + length - 1, count - 1)
                if lo >= count or hi - lo + 1 < stride:
                    break
                blocks.append((lo, hi))
                cursor = hi + 2
            truth = block_layout(count, blocks)
            scorer = make_scorer(truth)
            scores, visited, levels, calls = _search(count, 0.5, AnalyzeConfig(stride), scorer)
            want = set(brute_force_positives(truth))
            got = {i for i in range(count) if visited[i] and scores[i] >= 0.5}
            assert got == want, f"trial {trial}: {got ^ want}"
            seeds = sum(1 for i in levels[0].indices if truth[i] >= 0.5)
            assert calls <= work_bound(count, stride, seeds), f"trial {trial}"

    def test_deterministic(self):
        truth = block_layout(48, [(10, 30)])
        a = _search(48, 0.5, AnalyzeConfig(8), make_scorer(truth))
        b = _search(48, 0.5, AnalyzeConfig(8), make_scorer(truth))
        np.testing.assert_array_equal(a[0], b[0])
        assert a[3] == b[3]


class StubModel:
    """Scores thumbnails by mean brightness: bright pixels mean 'event'."""

    labels = ["event", "background"]

    def predict_proba(self, batch):
        bright = batch.mean(axis=(1, 2, 3))
        return np.stack([bright, 1.0 - bright], axis=1)


def brightness_container(values, video_id="t"):
    entries = [ThumbnailEntry(float(i), np.full((6, 8, 3), int(v * 255), np.uint8).tobytes())
               for i, v in enumerate(values)]
    header = ContainerHeader(video_id, 30.0, float(len(values) - 1), 1.0,
                             width=8, height=6, count=len(values))
    return ThumbnailContainer(header, entries)


class TestAnalyzeOverContainers:
    def test_analyze_matches_exhaustive_on_blocks(self):
        values = [0.0] * 20
        for i in range(5, 15):
            values[i] = 1.0
        c = brightness_container(values)
        profile = PreferenceProfile({"event": 1.0}, threshold=0.5)
        model = StubModel()
        fast = analyze(c, model, profile, AnalyzeConfig(4))
        full = exhaustive_scan(c, model, profile)
        assert fast.positives() == full.positives()
        assert full.classifications == 20
        assert fast.classifications < 20

    def test_label_mismatch_rejected(self):
        c = brightness_container([0.0, 1.0])
        with pytest.raises(ModelError):
            analyze(c, StubModel(), PreferenceProfile({"sports": 1.0}), AnalyzeConfig(1))

    def test_stride_must_fit(self):
        c = brightness_container([0.0, 1.0])
        with pytest.raises(ConfigError):
            analyze(c, StubModel(), PreferenceProfile({"event": 1.0}), AnalyzeConfig(8))

    def test_stride_power_of_two(self):
        with pytest.raises(ConfigError):
            AnalyzeConfig(6).validate(100)

    def test_track_json_round_trip(self):
        values = [0.0, 0.2, 0.9, 0.8, 0.1]
        c = brightness_container(values)
        profile = PreferenceProfile({"event": 1.0}, threshold=0.5)
        track = exhaustive_scan(c, StubModel(), profile)
        clone = RelevanceTrack.from_json(track.to_json())
        assert clone.video_id == track.video_id
        assert clone.threshold == track.threshold
        np.testing.assert_allclose(clone.scores, track.scores, atol=5e-3)
        assert clone.timestamps == track.timestamps
        assert clone.duration == track.duration
