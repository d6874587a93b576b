"""Raster geometry over point annotations: Voronoi labels, distance maps, dilation.

Pixel (r, c) has its center at continuous coordinates (x=c, y=r); all
distances are Euclidean in pixel units.  Seed/annotation coordinates may be
fractional, although click annotations are usually integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

DUPLICATE_TOLERANCE = 1e-6

# Target element count for chunked pixel-by-seed distance buffers.
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class PointSet:
    """Annotation points in pixel coordinates, one (x, y) row per point.

    Origin is the top-left pixel center; x indexes columns, y indexes rows.
    Points closer than ``DUPLICATE_TOLERANCE`` are rejected as duplicates.
    """

    xy: np.ndarray

    def __post_init__(self):
        xy = np.asarray(self.xy, dtype=np.float64)
        if xy.size == 0:
            xy = xy.reshape(0, 2)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise ValueError(f"points must be an (N, 2) array, got shape {xy.shape}")
        if not np.all(np.isfinite(xy)):
            raise ValueError("point coordinates must be finite")
        if len(xy) > 1:
            pairs = cKDTree(xy).query_pairs(DUPLICATE_TOLERANCE)
            if pairs:
                i, j = min(pairs)
                raise ValueError(
                    f"points {i} and {j} are closer than {DUPLICATE_TOLERANCE} px"
                )
        xy.setflags(write=False)
        object.__setattr__(self, "xy", xy)

    def __len__(self) -> int:
        return len(self.xy)

    def pixel_rc(self, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of the pixel containing each point (half-up rounding)."""
        cols = np.clip(np.floor(self.xy[:, 0] + 0.5).astype(np.intp), 0, width - 1)
        rows = np.clip(np.floor(self.xy[:, 1] + 0.5).astype(np.intp), 0, height - 1)
        return rows, cols


@dataclass(frozen=True)
class VoronoiLabel:
    """Per-pixel nearest-seed index map plus the seeds that produced it."""

    cell: np.ndarray  # (H, W) int32 seed indices
    points: PointSet

    @property
    def height(self) -> int:
        return self.cell.shape[0]

    @property
    def width(self) -> int:
        return self.cell.shape[1]


def _check_bound_points(points: PointSet, height: int, width: int) -> None:
    if len(points) == 0:
        return
    x, y = points.xy[:, 0], points.xy[:, 1]
    if x.min() < 0 or y.min() < 0 or x.max() >= width or y.max() >= height:
        raise ValueError(
            f"points must lie within [0, {width}) x [0, {height})"
        )


def _min_squared_distance(points: PointSet, height: int, width: int) -> np.ndarray:
    """Per-pixel minimum squared distance to any point, float64."""
    xs = points.xy[:, 0]
    ys = points.xy[:, 1]
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    best = np.full((height, width), np.inf)
    for x, y in zip(xs, ys):
        d2 = (rows[:, None] - y) ** 2 + (cols[None, :] - x) ** 2
        np.minimum(best, d2, out=best)
    return best


def rasterize_voronoi(points: PointSet, height: int, width: int) -> VoronoiLabel:
    """Assign every pixel to its nearest seed; ties go to the lowest seed index.

    Exact under float64 arithmetic: squared distances are compared directly,
    so integer-coordinate seeds produce exact tie-breaks.
    """
    if len(points) == 0:
        raise ValueError("at least one seed point is required")
    _check_bound_points(points, height, width)
    xs = points.xy[:, 0]
    ys = points.xy[:, 1]
    n = len(points)
    cols = np.arange(width, dtype=np.float64)
    dx2 = (cols[:, None] - xs[None, :]) ** 2  # (W, N)
    cell = np.empty((height, width), dtype=np.int32)
    chunk = max(1, _CHUNK_ELEMS // max(1, width * n))
    for r0 in range(0, height, chunk):
        rows = np.arange(r0, min(r0 + chunk, height), dtype=np.float64)
        dy2 = (rows[:, None] - ys[None, :]) ** 2  # (R, N)
        d2 = dy2[:, None, :] + dx2[None, :, :]  # (R, W, N)
        cell[r0 : r0 + len(rows)] = np.argmin(d2, axis=2)
    return VoronoiLabel(cell=cell, points=points)


def voronoi_edges(vlabel: VoronoiLabel, width_px: int = 1) -> np.ndarray:
    """Boolean mask of cell-boundary pixels, thickened by dilation.

    A pixel is a base edge pixel iff one of its 4-neighbors carries a
    different cell index (both sides of a boundary are marked).  ``width_px``
    of 1 keeps the base set; larger widths dilate it with a disk of radius
    ``width_px - 1``, so the mask grows strictly with the parameter.
    """
    if width_px < 1:
        raise ValueError("edge width must be >= 1")
    cell = vlabel.cell
    edges = np.zeros(cell.shape, dtype=bool)
    dv = cell[1:, :] != cell[:-1, :]
    edges[1:, :] |= dv
    edges[:-1, :] |= dv
    dh = cell[:, 1:] != cell[:, :-1]
    edges[:, 1:] |= dh
    edges[:, :-1] |= dh
    if width_px > 1:
        edges = ndimage.binary_dilation(edges, structure=disk_footprint(width_px - 1))
    return edges


def disk_footprint(radius: int) -> np.ndarray:
    """Boolean disk structuring element: offsets with dx^2 + dy^2 <= radius^2."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    r = int(radius)
    off = np.arange(-r, r + 1)
    return off[:, None] ** 2 + off[None, :] ** 2 <= r * r


def distance_map(points: PointSet, height: int, width: int) -> np.ndarray:
    """Exact Euclidean distance from every pixel center to the nearest point.

    Integral-coordinate points take the fast exact-EDT path; fractional
    coordinates fall back to a vectorized all-points minimum.  Both paths
    agree with a brute-force per-pixel loop to float64 precision.
    """
    if len(points) == 0:
        raise ValueError("at least one point is required")
    _check_bound_points(points, height, width)
    xy = points.xy
    rounded = np.rint(xy)
    if np.max(np.abs(xy - rounded)) < 1e-9:
        seeds = np.ones((height, width), dtype=bool)
        rows = rounded[:, 1].astype(np.intp)
        cols = rounded[:, 0].astype(np.intp)
        seeds[rows, cols] = False
        return ndimage.distance_transform_edt(seeds)
    return np.sqrt(_min_squared_distance(points, height, width))


def clip_distance(dmap: np.ndarray, cap: float = 20.0) -> np.ndarray:
    """Truncate distances above ``cap`` (idempotent)."""
    if cap <= 0:
        raise ValueError("cap must be > 0")
    return np.minimum(np.asarray(dmap, dtype=np.float64), cap)


def dilate_points(
    points: PointSet, radius: float, height: int, width: int
) -> np.ndarray:
    """Boolean mask of pixels whose centers lie within ``radius`` of any point.

    Equivalent to thresholding the distance map at ``radius``; radius 0 marks
    only the pixels whose centers coincide with a point.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if len(points) == 0:
        return np.zeros((height, width), dtype=bool)
    return distance_map(points, height, width) <= radius
