"""Classifier model, training loop, and estimator surface."""

import numpy as np
import pytest

from evs import ConfigError, DataError, ModelError, ShapeError
from evs.classifier import ThumbnailClassifier, TrainConfig, train
from evs.model import (
    classify,
    init_model,
    load_model,
    model_from_bytes,
    param_count,
)


def solid_vs_checker_dataset(rng, per_class, hw=(90, 160)):
    """Solid random-color images vs checkerboards with random phase/period."""
    h, w = hw
    images, labels = [], []
    for _ in range(per_class):
        color = rng.random(3).astype(np.float32) * 0.8 + 0.1
        images.append(np.broadcast_to(color[:, None, None], (3, h, w)).copy())
        labels.append("solid")
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(per_class):
        period = int(rng.integers(6, 16))
        phase = int(rng.integers(0, period))
        mask = (((yy + phase) // period + (xx + phase) // period) % 2).astype(np.float32)
        img = np.stack([mask * 0.9 + 0.05] * 3)
        images.append(img.astype(np.float32))
        labels.append("checker")
    return np.stack(images), labels


class TestClassify:
    def test_zero_classifier_weights_give_uniform(self):
        model = init_model(["a", "b", "c"], backbone_channels=(2, 3),
                           head_units=(8, 8), seed=0)
        model.head.w_out.array[:] = 0
        model.head.b_out.array[:] = 0
        thumb = np.random.default_rng(0).random((3, 90, 160), dtype=np.float32)
        probs = classify(thumb, model)
        np.testing.assert_allclose(probs, 1 / 3, atol=1e-6)

    def test_probabilities_sum_to_one(self):
        model = init_model(["x", "y"], backbone_channels=(2, 3), head_units=(8, 8), seed=1)
        thumb = np.random.default_rng(1).random((3, 90, 160), dtype=np.float32)
        probs = classify(thumb, model)
        assert abs(probs.sum() - 1.0) <= 1e-6
        assert probs.shape == (2,)

    def test_wrong_dims_rejected(self):
        model = init_model(["x", "y"], backbone_channels=(2,), head_units=(4, 4), seed=0)
        with pytest.raises(ShapeError):
            classify(np.zeros((3, 90, 161), np.float32), model)
        with pytest.raises(ShapeError):
            classify(np.zeros((3, 160, 90), np.float32), model)

    def test_label_permutation_permutes_probs(self):
        model = init_model(["a", "b", "c"], backbone_channels=(2, 3), head_units=(8, 8), seed=2)
        thumb = np.random.default_rng(2).random((3, 90, 160), dtype=np.float32)
        base = classify(thumb, model)
        perm = [2, 0, 1]
        permuted = init_model(["a", "b", "c"], backbone_channels=(2, 3),
                              head_units=(8, 8), seed=2)
        permuted.labels = [model.labels[i] for i in perm]
        permuted.head.w_out.array[:] = model.head.w_out.array[perm]
        permuted.head.b_out.array[:] = model.head.b_out.array[perm]
        got = classify(thumb, permuted)
        np.testing.assert_allclose(got, base[perm], atol=1e-6)

    def test_repeated_calls_identical(self):
        model = init_model(["x", "y"], backbone_channels=(2, 3), head_units=(8, 8), seed=3)
        thumb = np.random.default_rng(3).random((3, 90, 160), dtype=np.float32)
        a = classify(thumb, model)
        b = classify(thumb, model)
        assert (a == b).all()

    def test_label_width_mismatch_is_model_error(self):
        model = init_model(["x", "y"], backbone_channels=(2,), head_units=(4, 4), seed=0)
        with pytest.raises(ModelError):
            model.labels = ["x"]
            model.__post_init__()


class TestTrain:
    def small(self, **kw):
        defaults = dict(backbone_channels=(2, 3), head_units=(8, 8))
        defaults.update(kw)
        return defaults

    def toy_data(self, seed=0, hw=(16, 16)):
        rng = np.random.default_rng(seed)
        a = rng.random((3,) + hw, dtype=np.float32)
        b = rng.random((3,) + hw, dtype=np.float32)
        return np.stack([a, b]), ["one", "two"]

    def test_single_class_rejected(self):
        X, _ = self.toy_data()
        with pytest.raises(DataError):
            train(X, ["same", "same"], TrainConfig(epochs=1), **self.small())

    def test_zero_lr_leaves_parameters_unchanged(self):
        X, y = self.toy_data(1)
        cfg = TrainConfig(learning_rate=0.0, epochs=3, batch_size=2, seed=5)
        result = train(X, y, cfg, **self.small())
        fresh = init_model(sorted(set(y)), seed=5, **self.small())
        for (_, a), (_, b) in zip(result.model.trainable(), fresh.trainable()):
            np.testing.assert_array_equal(a.array, b.array)

    def test_fixed_seed_bit_identical_checkpoints(self):
        X, y = self.toy_data(2)
        cfg = TrainConfig(learning_rate=0.05, epochs=4, batch_size=2, seed=7)
        a = train(X, y, cfg, **self.small()).model.to_bytes()
        b = train(X, y, cfg, **self.small()).model.to_bytes()
        assert a == b

    def test_overfits_one_example_per_class(self):
        X, y = self.toy_data(3)
        cfg = TrainConfig(learning_rate=0.1, epochs=80, batch_size=2, seed=1,
                          dropout_keep=1.0)
        result = train(X, y, cfg, **self.small())
        assert result.epoch_losses[-1] < 0.05
        probs = result.model.predict_proba(X)
        pred = [result.model.labels[i] for i in probs.argmax(axis=1)]
        assert pred == sorted(set(y)) or pred == y

    def test_loss_decreases(self):
        rng = np.random.default_rng(4)
        X, y = solid_vs_checker_dataset(rng, 4, hw=(24, 32))
        result = train(X, y, TrainConfig(epochs=5, seed=2, batch_size=4), **self.small())
        assert result.epoch_losses[-1] < result.epoch_losses[0]

    def test_batch_size_one_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=1).validate()

    def test_solid_vs_checker_accuracy(self):
        rng = np.random.default_rng(11)
        X, y = solid_vs_checker_dataset(rng, 10)
        est = ThumbnailClassifier(backbone_channels=(4, 8, 8), head_units=(16, 16),
                                  learning_rate=0.05, epochs=20, batch_size=10, seed=3)
        est.fit(X, y)
        assert est.score(X, y) >= 0.95
        # held-out split drawn from the same generators
        Xh, yh = solid_vs_checker_dataset(np.random.default_rng(99), 4)
        held = est.score(Xh, yh)
        assert held >= 0.75, f"held-out accuracy collapsed: {held}"


class TestParamCount:
    def test_attention_formula(self):
        model = init_model(["a", "b"], backbone_channels=(2, 3), head_units=(8, 8), seed=0)
        counts = param_count(model)
        assert counts.attention == 297

    def test_breakdown_sums(self):
        model = init_model(["a", "b", "c"], backbone_channels=(4, 8), head_units=(16, 16), seed=0)
        counts = param_count(model)
        assert counts.total == counts.attention + counts.backbone + counts.head
        # backbone: 4*3*9+4 + 8*4*9+8 = 112 + 296
        assert counts.backbone == 112 + 296
        # head: 16*8+16 + 16*16+16 + 16+16 + 3*16+3
        assert counts.head == (16 * 8 + 16) + (16 * 16 + 16) + 32 + (3 * 16 + 3)

    def test_invariant_under_serialization(self, tmp_path):
        model = init_model(["a", "b"], backbone_channels=(2, 3), head_units=(8, 8), seed=4)
        before = param_count(model)
        path = tmp_path / "m.evsm"
        model.save(path)
        after = param_count(load_model(path))
        assert before == after

    def test_serialization_round_trip_exact(self):
        model = init_model(["left", "right"], backbone_channels=(2, 3),
                           head_units=(8, 8), seed=6)
        clone = model_from_bytes(model.to_bytes())
        assert clone.labels == model.labels
        for (na, a), (nb, b) in zip(model.all_tensors(), clone.all_tensors()):
            assert na == nb
            np.testing.assert_array_equal(a.array, b.array)


class TestEstimatorSurface:
    def test_get_set_params_round_trip(self):
        est = ThumbnailClassifier(epochs=3, seed=9)
        params = est.get_params()
        clone = ThumbnailClassifier(**params)
        assert clone.get_params() == params
        clone.set_params(epochs=5)
        assert clone.epochs == 5

    def test_unknown_param_rejected(self):
        with pytest.raises(ConfigError):
            ThumbnailClassifier().set_params(warp_factor=9)

    def test_unfitted_predict_raises(self):
        with pytest.raises(DataError):
            ThumbnailClassifier().predict_proba(np.zeros((1, 3, 8, 8), np.float32))

    def test_fit_predict_flow(self):
        rng = np.random.default_rng(8)
        X, y = solid_vs_checker_dataset(rng, 3, hw=(16, 24))
        est = ThumbnailClassifier(backbone_channels=(2, 3), head_units=(8, 8),
                                  epochs=10, batch_size=3, seed=0)
        assert est.fit(X, y) is est
        assert set(est.predict(X)) <= {"solid", "checker"}
        assert len(est.loss_curve_) == 10
        probs = est.predict_proba(X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)
