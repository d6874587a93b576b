"""Pixel classifier: features, training behaviour, prediction, detection."""

from __future__ import annotations

import numpy as np
import pytest

from weaklab.fileio import CLS_BACKGROUND, CLS_IGNORED, CLS_NUCLEI
from weaklab.surrogate import (
    PixelClassifier,
    TrainConfig,
    TrainingDivergedError,
    detect_centers,
    featurize,
    predict,
    train,
)

from oracles import box_mean_loop


def separable_pair(rng, size=24):
    """A label/image pair where brightness alone separates the classes."""
    label = np.full((size, size), CLS_BACKGROUND, dtype=np.uint8)
    label[4:10, 4:10] = CLS_NUCLEI
    label[14:20, 14:20] = CLS_NUCLEI
    label[0, :] = CLS_IGNORED
    image = np.where(label == CLS_NUCLEI, 0.9, 0.1)
    image = np.clip(image + rng.normal(0, 0.01, image.shape), 0.0, 1.0)
    return image.astype(np.float64), label


# -- features ---------------------------------------------------------------

def test_featurize_constant_image():
    image = np.full((8, 8), 0.4)
    feats = featurize(image)
    assert feats.shape == (8, 8, 4)
    assert np.allclose(feats[..., 0], 0.4)
    assert np.allclose(feats[..., 1], 0.4)
    assert np.allclose(feats[..., 2], 0.4)
    # sqrt of a ~1e-17 rounding residue, so only ~1e-9 of slack is available
    assert np.abs(feats[..., 3]).max() < 1e-7


def test_featurize_single_bright_pixel():
    image = np.zeros((9, 9))
    image[4, 4] = 1.0
    feats = featurize(image)
    assert feats[4, 4, 0] == 1.0
    assert feats[4, 4, 1] == pytest.approx(1 / 9)
    assert feats[4, 4, 2] == pytest.approx(1 / 49)


def test_featurize_means_match_loop_oracle():
    rng = np.random.default_rng(11)
    image = rng.random((16, 16))
    feats = featurize(image)
    assert np.abs(feats[..., 1] - box_mean_loop(image, 3)).max() < 1e-6
    assert np.abs(feats[..., 2] - box_mean_loop(image, 7)).max() < 1e-6


def test_featurize_std_nonnegative_and_zero_on_flat():
    rng = np.random.default_rng(12)
    image = rng.random((12, 12))
    assert featurize(image)[..., 3].min() >= 0.0


def test_featurize_multichannel_stacks_per_channel():
    rng = np.random.default_rng(13)
    image = rng.random((6, 6, 2))
    feats = featurize(image)
    assert feats.shape == (6, 6, 8)
    assert np.array_equal(feats[..., :4], featurize(image[..., 0]))
    assert np.array_equal(feats[..., 4:], featurize(image[..., 1]))


# -- training ---------------------------------------------------------------

def test_train_reaches_low_loss_on_separable_scene():
    rng = np.random.default_rng(21)
    pairs = [separable_pair(rng)]
    config = TrainConfig(learning_rate=0.5, epochs=500, w_entropy=0.0, rng_seed=0)
    model, trace = train(config, pairs)
    totals = [t.total for t in trace]
    assert all(b < a for a, b in zip(totals, totals[1:]))
    assert totals[-1] < 0.05


def test_train_small_lr_trace_monotone():
    rng = np.random.default_rng(22)
    pairs = [separable_pair(rng)]
    config = TrainConfig(learning_rate=1e-3, epochs=60, rng_seed=0)
    _, trace = train(config, pairs)
    totals = [t.total for t in trace]
    assert all(b <= a + 1e-9 for a, b in zip(totals, totals[1:]))


def test_train_is_deterministic():
    rng = np.random.default_rng(23)
    pairs = [separable_pair(rng)]
    config = TrainConfig(learning_rate=1e-2, epochs=30, rng_seed=5)
    model_a, trace_a = train(config, pairs)
    model_b, trace_b = train(config, pairs)
    assert np.array_equal(model_a.weight, model_b.weight)
    assert np.array_equal(model_a.bias, model_b.bias)
    assert [t.total for t in trace_a] == [t.total for t in trace_b]


def test_train_final_loss_consistent_with_predict():
    rng = np.random.default_rng(24)
    image, label = separable_pair(rng)
    config = TrainConfig(learning_rate=1e-2, epochs=50, rng_seed=1)
    model, trace = train(config, [(image, label)])
    probs = predict(model, image)
    assert probs.shape == image.shape + (2,)
    assert np.allclose(probs.sum(axis=-1), 1.0, atol=1e-9)


def test_train_divergence_raises_with_epoch():
    # gradient magnitudes are bounded, so the non-finite path is reached via
    # a poisoned input rather than an oversized step
    image = np.full((8, 8), 0.5)
    image[3, 3] = np.nan
    label = np.full((8, 8), CLS_BACKGROUND, np.uint8)
    label[2:5, 2:5] = CLS_NUCLEI
    with pytest.raises(TrainingDivergedError) as excinfo:
        train(TrainConfig(epochs=10), [(image, label)])
    assert excinfo.value.epoch == 0


def test_train_rejects_empty_pairs():
    with pytest.raises(ValueError):
        train(TrainConfig(), [])


# -- prediction -------------------------------------------------------------

def test_predict_zero_parameters_uniform():
    model = PixelClassifier(
        feature_set="raw+mean3+mean7+std7",
        weight=np.zeros((4, 2)),
        bias=np.zeros(2),
    )
    probs = predict(model, np.random.default_rng(31).random((5, 5)))
    assert np.allclose(probs, 0.5)


def test_predict_bias_dominates_zero_weight():
    model = PixelClassifier(
        feature_set="raw+mean3+mean7+std7",
        weight=np.zeros((4, 2)),
        bias=np.array([0.0, 50.0]),
    )
    probs = predict(model, np.random.default_rng(32).random((5, 5)))
    assert probs[..., 1].min() > 0.999


def test_predict_rejects_feature_mismatch():
    model = PixelClassifier(
        feature_set="raw+mean3+mean7+std7",
        weight=np.zeros((8, 2)),
        bias=np.zeros(2),
    )
    with pytest.raises(ValueError):
        predict(model, np.zeros((4, 4)))


def test_classifier_json_roundtrip(tmp_path):
    rng = np.random.default_rng(33)
    model = PixelClassifier(
        feature_set="raw+mean3+mean7+std7",
        weight=rng.normal(size=(4, 3)),
        bias=rng.normal(size=3),
    )
    path = tmp_path / "model.json"
    model.save(path)
    loaded = PixelClassifier.load(path)
    assert loaded.feature_set == model.feature_set
    assert np.array_equal(loaded.weight, model.weight)
    assert np.array_equal(loaded.bias, model.bias)


# -- detection --------------------------------------------------------------

def test_detect_centers_empty_map():
    points = detect_centers(np.zeros((32, 32)), threshold=0.5)
    assert len(points) == 0


def test_detect_centers_disk_centroid():
    prob = np.zeros((40, 40))
    yy, xx = np.mgrid[:40, :40]
    prob[(yy - 17.0) ** 2 + (xx - 23.0) ** 2 <= 36] = 0.9
    points = detect_centers(prob, threshold=0.5)
    assert len(points) == 1
    assert abs(points.xy[0, 0] - 23.0) < 0.5
    assert abs(points.xy[0, 1] - 17.0) < 0.5


def test_detect_centers_two_components():
    prob = np.zeros((40, 40))
    prob[5:12, 5:12] = 1.0
    prob[25:32, 25:32] = 1.0
    points = detect_centers(prob, threshold=0.5)
    assert len(points) == 2


def test_detect_centers_min_area_filters_specks():
    prob = np.zeros((20, 20))
    prob[3, 3] = 1.0  # single pixel, below min area
    prob[10:14, 10:14] = 1.0  # 16 px blob
    points = detect_centers(prob, threshold=0.5, min_area=9)
    assert len(points) == 1


def test_detect_centers_threshold_monotone():
    rng = np.random.default_rng(41)
    prob = rng.random((64, 64))
    lo = len(detect_centers(prob, threshold=0.2, min_area=1))
    hi_mask = (prob >= 0.8).sum()
    lo_mask = (prob >= 0.2).sum()
    assert hi_mask <= lo_mask  # pixel count shrinks with threshold
    assert lo >= 0


def test_detect_centers_rejects_bad_threshold():
    with pytest.raises(ValueError):
        detect_centers(np.zeros((4, 4)), threshold=0.0)
    with pytest.raises(ValueError):
        detect_centers(np.zeros((4, 4)), threshold=1.0)
