"""Linear per-pixel classifier trained with the masked composite loss.

A deliberately small stand-in for a segmentation network's nuclei/background
head: hand-rolled features (local intensity statistics), a linear score per
class, full-batch gradient descent on cross-entropy + dice over labeled
pixels plus entropy minimization over ignored pixels.  Small enough to train
in seconds, honest enough to show the semi-supervised effect of the entropy
term on the ignored regions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import PointSet
from .hover import STRUCTURE_4
from .imaging import as_image
from .losses import (
    LossBreakdown,
    LossWeights,
    RegionMask,
    class_target_from_label,
    composite_loss,
    region_mask_from_label,
    softmax,
)

FEATURE_SET = "raw+mean3+mean7+std7"


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss goes non-finite."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


def featurize(image: np.ndarray) -> np.ndarray:
    """(H, W, 4C) features: per channel raw value, 3x3 mean, 7x7 mean, 7x7 std.

    Box filters use reflective borders, so constant images keep constant
    features and zero local deviation.
    """
    img = as_image(image)
    feats = []
    for c in range(img.shape[2]):
        ch = img[:, :, c]
        m3 = ndimage.uniform_filter(ch, size=3, mode="reflect")
        m7 = ndimage.uniform_filter(ch, size=7, mode="reflect")
        sq7 = ndimage.uniform_filter(ch * ch, size=7, mode="reflect")
        feats += [ch, m3, m7, np.sqrt(np.maximum(sq7 - m7 * m7, 0.0))]
    return np.stack(feats, axis=-1)


@dataclass(frozen=True)
class PixelClassifier:
    """Linear scores: logits = features @ weight + bias."""

    weight: np.ndarray  # (F, m)
    bias: np.ndarray  # (m,)
    feature_set: str = FEATURE_SET

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[1],):
            raise ValueError("weight must be (F, m) with a matching bias")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("classifier parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    def save(self, path) -> None:
        doc = {
            "feature_set": self.feature_set,
            "feature_dim": self.weight.shape[0],
            "num_classes": self.weight.shape[1],
            "weight": [float(v) for v in self.weight.ravel()],
            "bias": [float(v) for v in self.bias],
        }
        Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")

    @staticmethod
    def load(path) -> "PixelClassifier":
        doc = json.loads(Path(path).read_text())
        f, m = int(doc["feature_dim"]), int(doc["num_classes"])
        weight = np.array(doc["weight"], dtype=np.float64).reshape(f, m)
        bias = np.array(doc["bias"], dtype=np.float64)
        return PixelClassifier(
            weight=weight, bias=bias, feature_set=doc.get("feature_set", FEATURE_SET)
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 1000
    w_ce: float = 1.0
    w_dice: float = 1.0
    w_entropy: float = 0.5
    rng_seed: int = 0
    num_classes: int = 2
    feature_set: str = FEATURE_SET

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def loss_weights(self) -> LossWeights:
        return LossWeights(ce=self.w_ce, dice=self.w_dice, mse=0.0, entropy=self.w_entropy)


def train(
    config: TrainConfig, pairs
) -> tuple[PixelClassifier, list[LossBreakdown]]:
    """Full-batch gradient descent over (image, cluster label) pairs.

    Deterministic for a fixed config: initialization comes from the config
    seed and the batch is processed in a fixed order.  Returns the trained
    classifier and the per-epoch loss trace.
    """
    if not pairs:
        raise ValueError("at least one (image, label) training pair is required")
    xs, ts, labeled, ignored = [], [], [], []
    for image, label in pairs:
        feats = featurize(image)
        mask = region_mask_from_label(label)
        xs.append(feats.reshape(-1, feats.shape[-1]))
        ts.append(class_target_from_label(label).ravel())
        labeled.append(mask.labeled.ravel())
        ignored.append(mask.ignored.ravel())
    x = np.concatenate(xs)
    target = np.concatenate(ts)
    mask = RegionMask(labeled=np.concatenate(labeled), ignored=np.concatenate(ignored))
    if target.max(initial=0) >= config.num_classes:
        raise ValueError("label classes exceed the configured class count")

    rng = np.random.default_rng(config.rng_seed)
    weight = rng.normal(0.0, 0.01, size=(x.shape[1], config.num_classes))
    bias = np.zeros(config.num_classes)
    weights = config.loss_weights()
    trace: list[LossBreakdown] = []
    for epoch in range(config.epochs):
        logits = x @ weight + bias
        if not np.all(np.isfinite(logits)):
            raise TrainingDivergedError(epoch)
        breakdown, grad, _ = composite_loss(logits, target, mask, weights=weights)
        if not np.isfinite(breakdown.total):
            raise TrainingDivergedError(epoch)
        trace.append(breakdown)
        weight -= config.learning_rate * (x.T @ grad)
        bias -= config.learning_rate * grad.sum(axis=0)
    return PixelClassifier(weight=weight, bias=bias, feature_set=config.feature_set), trace


def predict(classifier: PixelClassifier, image: np.ndarray) -> np.ndarray:
    """(H, W, m) class probabilities for every pixel."""
    feats = featurize(image)
    if feats.shape[-1] != classifier.weight.shape[0]:
        raise ValueError(
            f"image yields {feats.shape[-1]} features, classifier expects "
            f"{classifier.weight.shape[0]}"
        )
    return softmax(feats @ classifier.weight + classifier.bias)


def detect_centers(
    probs: np.ndarray,
    threshold: float = 0.5,
    min_area: int = 9,
    fg_class: int = 1,
) -> PointSet:
    """Centroids of above-threshold foreground components as detections.

    Binarizes the foreground-class probability at ``threshold``, keeps
    4-connected components of at least ``min_area`` pixels, and returns each
    surviving component's centroid.  ``probs`` may be the full per-class
    stack from :func:`predict` or a plain (H, W) foreground probability map.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    probs = np.asarray(probs)
    fg = probs if probs.ndim == 2 else probs[..., fg_class]
    mask = fg >= threshold
    comp, n = ndimage.label(mask, structure=STRUCTURE_4)
    if n == 0:
        return PointSet(np.empty((0, 2)))
    idx = np.arange(1, n + 1)
    areas = ndimage.sum_labels(mask, comp, idx)
    keep = idx[areas >= min_area]
    centers = ndimage.center_of_mass(mask, comp, keep)
    xy = np.array([(c, r) for r, c in centers], dtype=np.float64).reshape(len(keep), 2)
    return PointSet(xy)
