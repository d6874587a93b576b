"""Cluster labels from point annotations.

The label generator turns an image plus its point annotations into a
per-pixel class map {nuclei, background, ignored}:

1. rasterize the Voronoi partition of the annotation points;
2. compute the Euclidean distance map to the nearest point, clipped at a cap;
3. stack the clipped distance with the color channels rescaled to the same
   range, forming a per-pixel feature vector;
4. k-means the feature vectors into three clusters;
5. designate the cluster holding the most annotation pixels as nuclei, pick
   the background cluster by its overlap with the far field (see
   ``assign_classes``), and leave the remaining cluster ignored;
6. overwrite Voronoi cell boundaries to background so touching nuclei
   separate, and force every annotation pixel to nuclei.

Class codes match the on-disk PNG contract: 0 background, 1 nuclei,
255 ignored.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fileio import CLS_BACKGROUND, CLS_IGNORED, CLS_NUCLEI
from .geometry import (
    PointSet,
    VoronoiLabel,
    clip_distance,
    dilate_points,
    distance_map,
    rasterize_voronoi,
    voronoi_edges,
)
from .imaging import as_image

CLASS_VALUES = (CLS_BACKGROUND, CLS_NUCLEI, CLS_IGNORED)


@dataclass(frozen=True)
class LabelConfig:
    """Knobs of the label generator; defaults are the reference settings."""

    cap: float = 20.0
    k: int = 3
    rng_seed: int = 7
    max_iter: int = 100
    tol: float = 1e-4
    dilation_radius: float = 11.0
    background_rule: str = "complement"  # or "literal"
    edge_width: int = 2


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray  # (H, W) int32 cluster indices
    centroids: np.ndarray  # (k, F)
    objective: float  # final within-cluster sum of squared distances
    iterations: int
    trace: tuple[float, ...] = field(default=())  # objective after each pass


def build_feature_map(
    image: np.ndarray, dmap_clipped: np.ndarray, cap: float = 20.0
) -> np.ndarray:
    """Stack clipped distance with color channels rescaled from [0,1] to [0,cap].

    Feature 0 is the clipped distance; the remaining features are the color
    channels multiplied by ``cap`` — one global rescale for every channel, so
    relative channel intensities are preserved.
    """
    img = as_image(image)
    dmap = np.asarray(dmap_clipped, dtype=np.float64)
    if dmap.shape != img.shape[:2]:
        raise ValueError(
            f"distance map shape {dmap.shape} does not match image {img.shape[:2]}"
        )
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image intensities must lie in [0, 1]")
    if dmap.min() < 0.0 or dmap.max() > cap:
        raise ValueError("clipped distances must lie in [0, cap]")
    return np.concatenate([dmap[:, :, None], img * cap], axis=2)


def _pairwise_sq(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """(N, k) squared Euclidean distances via the expanded dot-product form."""
    d2 = (
        (x * x).sum(axis=1)[:, None]
        + (c * c).sum(axis=1)[None, :]
        - 2.0 * (x @ c.T)
    )
    return np.maximum(d2, 0.0, out=d2)


def _kpp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: spread initial centroids proportionally to D^2."""
    n = len(x)
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[j] = x[rng.integers(n)]
        else:
            centroids[j] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _assign(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, float]:
    """Nearest-centroid assignment; empty clusters are reseeded to the point
    farthest from its own centroid, so every cluster ends non-empty."""
    k = len(centroids)
    d2 = _pairwise_sq(x, centroids)
    assign = d2.argmin(axis=1)
    for _ in range(k):
        counts = np.bincount(assign, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            break
        j = int(empty[0])
        own = d2[np.arange(len(x)), assign]
        centroids[j] = x[int(own.argmax())]
        d2[:, j] = ((x - centroids[j]) ** 2).sum(axis=1)
        assign = d2.argmin(axis=1)
    objective = float(d2[np.arange(len(x)), assign].sum())
    return assign, objective


def kmeans(
    features: np.ndarray,
    k: int = 3,
    rng_seed: int = 7,
    max_iter: int = 100,
    tol: float = 1e-4,
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding; deterministic per seed.

    Stops when the largest centroid displacement drops below ``tol`` or after
    ``max_iter`` passes.  The stored assignment is recomputed against the
    final centroids, so it is a fixed point of the update.
    """
    feats = np.asarray(features, dtype=np.float64)
    shape = feats.shape[:-1]
    x = feats.reshape(-1, feats.shape[-1])
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(x) < k:
        raise ValueError(f"{len(x)} pixels cannot form {k} clusters")
    if len(np.unique(x, axis=0)) < k:
        raise ValueError(f"fewer than {k} distinct feature vectors")
    rng = np.random.default_rng(rng_seed)
    centroids = _kpp_init(x, k, rng)
    assign, objective = _assign(x, centroids)
    trace = [objective]
    iterations = 0
    for _ in range(max_iter):
        new_centroids = np.empty_like(centroids)
        for j in range(k):
            new_centroids[j] = x[assign == j].mean(axis=0)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        assign, objective = _assign(x, centroids)
        trace.append(objective)
        iterations += 1
        if shift < tol:
            break
    return KMeansResult(
        assignments=assign.reshape(shape).astype(np.int32),
        centroids=centroids,
        objective=objective,
        iterations=iterations,
        trace=tuple(trace),
    )


def assign_classes(
    result: KMeansResult,
    points: PointSet,
    dilated_mask: np.ndarray,
    rule: str = "complement",
) -> np.ndarray:
    """Map the three clusters to (background, nuclei, ignored) class codes.

    The cluster holding the most annotation-point pixels becomes nuclei.  Of
    the remaining two, the background cluster is the one overlapping most
    with the *complement* of the dilated point mask (``rule="complement"``,
    the default: background is the far field).  ``rule="literal"`` instead
    picks the larger overlap with the dilated mask itself.  The last cluster
    is ignored.  Exact ties break toward the lower cluster index with a
    warning.

    Returns an array of 3 class codes indexed by cluster, so
    ``designation[assignments]`` is the per-pixel class map.
    """
    if len(result.centroids) != 3:
        raise ValueError("class designation requires exactly 3 clusters")
    if rule not in ("complement", "literal"):
        raise ValueError(f"unknown background rule {rule!r}")
    assignments = result.assignments
    h, w = assignments.shape
    mask = np.asarray(dilated_mask, dtype=bool)
    if mask.shape != (h, w):
        raise ValueError("dilated mask shape does not match the assignment map")

    rows, cols = points.pixel_rc(h, w)
    point_counts = np.bincount(assignments[rows, cols], minlength=3)
    best = np.flatnonzero(point_counts == point_counts.max())
    nuclei = int(best[0])
    if len(best) > 1:
        warnings.warn("nuclei designation tie; choosing the lower cluster index")

    rest = [j for j in range(3) if j != nuclei]
    ref = ~mask if rule == "complement" else mask
    overlaps = [int(np.count_nonzero(ref & (assignments == j))) for j in rest]
    if overlaps[0] == overlaps[1]:
        warnings.warn("background designation tie; choosing the lower cluster index")
    background = rest[0] if overlaps[0] >= overlaps[1] else rest[1]
    ignored = next(j for j in rest if j != background)

    designation = np.empty(3, dtype=np.uint8)
    designation[nuclei] = CLS_NUCLEI
    designation[background] = CLS_BACKGROUND
    designation[ignored] = CLS_IGNORED
    return designation


def refine_with_voronoi(
    label: np.ndarray, vlabel: VoronoiLabel, edge_width: int = 2
) -> np.ndarray:
    """Overwrite Voronoi cell boundaries to background, then force every
    annotation pixel to nuclei.  Idempotent: overwrites are absorbing."""
    arr = np.asarray(label)
    if arr.shape != (vlabel.height, vlabel.width):
        raise ValueError("label and Voronoi label dimensions disagree")
    out = arr.copy()
    if len(vlabel.points) > 1:
        out[voronoi_edges(vlabel, edge_width)] = CLS_BACKGROUND
    rows, cols = vlabel.points.pixel_rc(vlabel.height, vlabel.width)
    out[rows, cols] = CLS_NUCLEI
    return out


def make_cluster_label(
    image: np.ndarray, points: PointSet, config: LabelConfig = LabelConfig()
) -> np.ndarray:
    """Run the full label generator; returns the (H, W) uint8 class map."""
    img = as_image(image)
    h, w = img.shape[:2]
    dmap = clip_distance(distance_map(points, h, w), config.cap)
    features = build_feature_map(image, dmap, config.cap)
    result = kmeans(
        features,
        k=config.k,
        rng_seed=config.rng_seed,
        max_iter=config.max_iter,
        tol=config.tol,
    )
    dilated = dilate_points(points, config.dilation_radius, h, w)
    designation = assign_classes(result, points, dilated, config.background_rule)
    label = designation[result.assignments]
    vlabel = rasterize_voronoi(points, h, w)
    return refine_with_voronoi(label, vlabel, config.edge_width)
