"""Synthetic nuclei scenes with exact ground truth.

Nuclei are radial-falloff disks: intensity peaks at the center, eases toward
the rim (boundaries render dimmer than cores, which is what produces ignored
halos downstream), and decays with a Gaussian skirt outside the disk radius.
Disks combine by per-pixel max; additive Gaussian noise is clipped to [0, 1].
Placement is rejection sampling with a minimum center separation, except for
a configurable fraction of nuclei placed as deliberately touching pairs.

Everything is driven by one RNG seed, so a config identifies a scene exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PointSet

MAX_PLACEMENT_ATTEMPTS = 10_000
# Touching pairs sit at this fraction of the sum of their radii.
TOUCH_SEPARATION_FACTOR = 0.75


class SceneGenerationError(RuntimeError):
    """Raised when rejection sampling cannot satisfy the packing constraints."""


@dataclass(frozen=True)
class SceneConfig:
    height: int = 512
    width: int = 512
    count: int = 60
    radius_min: float = 6.0
    radius_max: float = 12.0
    min_separation: float = 26.0
    touching_fraction: float = 0.15
    core_level: float = 0.95
    edge_sigma: float = 2.5
    noise_sigma: float = 0.03
    rng_seed: int = 20

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not 0 < self.radius_min <= self.radius_max:
            raise ValueError("need 0 < radius_min <= radius_max")
        if not 0.0 <= self.touching_fraction <= 1.0:
            raise ValueError("touching fraction must lie in [0, 1]")
        if not 0.0 < self.core_level <= 1.0:
            raise ValueError("core level must lie in (0, 1]")
        if self.edge_sigma <= 0 or self.noise_sigma < 0:
            raise ValueError("edge sigma must be > 0 and noise sigma >= 0")


@dataclass(frozen=True)
class GroundTruth:
    points: PointSet  # true centers, one per nucleus
    instances: np.ndarray  # (H, W) int32 instance ids 1..N, 0 = background
    radii: np.ndarray  # (N,) disk radii
    touching_pairs: tuple[tuple[int, int], ...]  # deliberately-touching index pairs


# The fixed benchmark scene referenced throughout the test suite.
STANDARD_SCENE = SceneConfig()


def _far_enough(centers, x, y, min_sep, skip=-1) -> bool:
    for j, (cx, cy) in enumerate(centers):
        if j == skip:
            continue
        if (cx - x) ** 2 + (cy - y) ** 2 < min_sep * min_sep:
            return False
    return True


def _place_centers(cfg: SceneConfig, radii: np.ndarray, rng) -> tuple[list, list]:
    """Centers honoring min_separation, with touching pairs placed first."""
    n_pairs = int(cfg.count * cfg.touching_fraction) // 2
    centers: list[tuple[float, float]] = []
    pairs: list[tuple[int, int]] = []
    attempts = 0

    def sample_center(radius):
        nonlocal attempts
        while True:
            attempts += 1
            if attempts > MAX_PLACEMENT_ATTEMPTS:
                raise SceneGenerationError(
                    f"could not place nucleus {len(centers)} of {cfg.count}: "
                    f"min_separation={cfg.min_separation} too tight for "
                    f"{cfg.width}x{cfg.height}"
                )
            margin = radius + 2.0
            x = rng.uniform(margin, cfg.width - 1 - margin)
            y = rng.uniform(margin, cfg.height - 1 - margin)
            if _far_enough(centers, x, y, cfg.min_separation):
                return x, y

    for p in range(n_pairs):
        i = len(centers)
        ax, ay = sample_center(radii[i])
        centers.append((ax, ay))
        sep = TOUCH_SEPARATION_FACTOR * (radii[i] + radii[i + 1])
        margin = radii[i + 1] + 2.0
        while True:
            attempts += 1
            if attempts > MAX_PLACEMENT_ATTEMPTS:
                raise SceneGenerationError(
                    f"could not place touching partner for nucleus {i}: "
                    f"separation {sep:.1f} conflicts with the existing layout"
                )
            theta = rng.uniform(0.0, 2.0 * math.pi)
            x = ax + sep * math.cos(theta)
            y = ay + sep * math.sin(theta)
            if not (margin <= x <= cfg.width - 1 - margin):
                continue
            if not (margin <= y <= cfg.height - 1 - margin):
                continue
            if _far_enough(centers, x, y, cfg.min_separation, skip=i):
                break
        centers.append((x, y))
        pairs.append((i, i + 1))
    while len(centers) < cfg.count:
        centers.append(sample_center(radii[len(centers)]))
    return centers, pairs


def _render(cfg: SceneConfig, centers, radii: np.ndarray):
    """Max-combined radial profiles plus the nearest-center instance split."""
    h, w = cfg.height, cfg.width
    signal = np.zeros((h, w))
    instances = np.zeros((h, w), dtype=np.int32)
    best_d2 = np.full((h, w), np.inf)
    for i, (cx, cy) in enumerate(centers):
        r = radii[i]
        reach = int(math.ceil(r + 4.0 * cfg.edge_sigma))
        r0, r1 = max(0, int(cy) - reach), min(h, int(cy) + reach + 1)
        c0, c1 = max(0, int(cx) - reach), min(w, int(cx) + reach + 1)
        yy = np.arange(r0, r1, dtype=np.float64)[:, None]
        xx = np.arange(c0, c1, dtype=np.float64)[None, :]
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        d = np.sqrt(d2)
        # inside: Gaussian with sigma = r (rim at ~61% of the core level);
        # outside: continue from the rim with the configured edge sigma
        inside = cfg.core_level * np.exp(-d2 / (2.0 * r * r))
        rim = cfg.core_level * math.exp(-0.5)
        outside = rim * np.exp(-((d - r) ** 2) / (2.0 * cfg.edge_sigma**2))
        value = np.where(d <= r, inside, outside)
        box = np.s_[r0:r1, c0:c1]
        np.maximum(signal[box], value, out=signal[box])
        member = (d <= r) & (d2 < best_d2[box])
        instances[box][member] = i + 1
        best_d2[box][member] = d2[member]
    return signal, instances


def generate_scene(cfg: SceneConfig) -> tuple[np.ndarray, GroundTruth]:
    """Render a scene and its ground truth; bit-identical for a fixed config."""
    rng = np.random.default_rng(cfg.rng_seed)
    radii = rng.uniform(cfg.radius_min, cfg.radius_max, cfg.count)
    if cfg.count == 0:
        image = np.clip(
            rng.normal(0.0, cfg.noise_sigma, (cfg.height, cfg.width)), 0.0, 1.0
        )
        gt = GroundTruth(
            points=PointSet(np.empty((0, 2))),
            instances=np.zeros((cfg.height, cfg.width), dtype=np.int32),
            radii=radii,
            touching_pairs=(),
        )
        return image, gt
    centers, pairs = _place_centers(cfg, radii, rng)
    signal, instances = _render(cfg, centers, radii)
    image = np.clip(
        signal + rng.normal(0.0, cfg.noise_sigma, signal.shape), 0.0, 1.0
    )
    gt = GroundTruth(
        points=PointSet(np.array(centers, dtype=np.float64)),
        instances=instances,
        radii=radii,
        touching_pairs=tuple(pairs),
    )
    return image, gt


def ideal_detections(
    gt: GroundTruth,
    jitter_sigma: float = 0.0,
    drop_rate: float = 0.0,
    spurious_rate: float = 0.0,
    rng_seed: int = 0,
) -> PointSet:
    """Degrade ground-truth centers into a synthetic detector output.

    Centers are jittered with isotropic Gaussian noise, dropped independently
    with ``drop_rate``, and round(spurious_rate * N) uniform spurious points
    are appended.  Deterministic per seed.
    """
    if not 0.0 <= drop_rate <= 1.0 or spurious_rate < 0.0:
        raise ValueError("rates must be non-negative (drop rate at most 1)")
    h, w = gt.instances.shape
    rng = np.random.default_rng(rng_seed)
    n = len(gt.points)
    jittered = gt.points.xy + rng.normal(0.0, jitter_sigma, (n, 2))
    keep = rng.random(n) >= drop_rate
    n_spurious = int(round(spurious_rate * n))
    spurious = rng.uniform((0.0, 0.0), (w - 1.0, h - 1.0), (n_spurious, 2))
    xy = np.concatenate([jittered[keep], spurious])
    xy[:, 0] = np.clip(xy[:, 0], 0.0, w - 1.0)
    xy[:, 1] = np.clip(xy[:, 1], 0.0, h - 1.0)
    return PointSet(xy)
