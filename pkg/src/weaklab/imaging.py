"""Stack projection, ROI masking, patch extraction/stitching, Gaussian point masks.

Images are float arrays with intensities in [0, 1]: stacks are (Z, H, W) or
(Z, H, W, C), single images (H, W) or (H, W, C).  Channel handling is shape
preserving; helpers normalize to an explicit channel axis where needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PointSet, _min_squared_distance

# Gaussian mask values below this are stored as exact zeros.
GAUSSIAN_TRUNCATION = 1e-4


def as_image(image: np.ndarray) -> np.ndarray:
    """View ``image`` as (H, W, C) float64 without copying channel data."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D image, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class PatchGrid:
    """Anchor layout of overlapping patches covering an image."""

    patch_size: int
    stride: int
    offsets: tuple[tuple[int, int], ...]  # (row, col) top-left anchors


def mip(stack: np.ndarray) -> np.ndarray:
    """Maximum Intensity Projection: per-pixel max across z-slices."""
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim not in (3, 4) or arr.shape[0] < 1:
        raise ValueError("stack must be a non-empty (Z, H, W[, C]) array")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("stack intensities must lie in [0, 1]")
    return arr.max(axis=0)


def _polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_mask(vertices: np.ndarray, height: int, width: int) -> np.ndarray:
    """Even-odd rasterization of a polygon; boundary pixels count as inside."""
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        raise ValueError("polygon needs at least 3 (x, y) vertices")
    if _polygon_area(verts) < 1e-12:
        raise ValueError("degenerate polygon (zero area)")
    px = np.arange(width, dtype=np.float64)[None, :]
    py = np.arange(height, dtype=np.float64)[:, None]
    inside = np.zeros((height, width), dtype=bool)
    boundary = np.zeros((height, width), dtype=bool)
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if y1 != y2:
            crosses = (y1 > py) != (y2 > py)
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < xint)
        # on-segment test: zero cross product and projection within the segment
        ex, ey = x2 - x1, y2 - y1
        seg_len2 = ex * ex + ey * ey
        if seg_len2 == 0.0:
            continue
        cross = ex * (py - y1) - ey * (px - x1)
        dot = ex * (px - x1) + ey * (py - y1)
        eps = 1e-9 * math.sqrt(seg_len2)
        boundary |= (np.abs(cross) <= eps) & (dot >= -eps) & (dot <= seg_len2 + eps)
    return inside | boundary


def apply_roi(image: np.ndarray, roi_vertices: np.ndarray) -> np.ndarray:
    """Zero every pixel whose center falls outside the ROI polygon."""
    arr = np.asarray(image, dtype=np.float64)
    h, w = arr.shape[0], arr.shape[1]
    mask = polygon_mask(roi_vertices, h, w)
    out = arr.copy()
    out[~mask] = 0.0
    return out


def _axis_anchors(extent: int, patch_size: int, stride: int) -> list[int]:
    last = extent - patch_size
    anchors = list(range(0, last + 1, stride))
    if anchors[-1] != last:
        anchors.append(last)
    return anchors


def extract_patches(
    image: np.ndarray, patch_size: int, overlap_fraction: float = 0.1
) -> tuple[PatchGrid, list[np.ndarray]]:
    """Cut an image into overlapping square patches in row-major anchor order.

    The stride is floor(patch_size * (1 - overlap_fraction)); the final anchor
    per axis is clamped so the last patch ends exactly at the image edge.
    """
    arr = np.asarray(image, dtype=np.float64)
    h, w = arr.shape[0], arr.shape[1]
    if patch_size < 1 or patch_size > min(h, w):
        raise ValueError(
            f"patch size {patch_size} does not fit a {h}x{w} image"
        )
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError("overlap fraction must lie in [0, 1)")
    stride = max(1, math.floor(patch_size * (1.0 - overlap_fraction)))
    offsets = tuple(
        (r, c)
        for r in _axis_anchors(h, patch_size, stride)
        for c in _axis_anchors(w, patch_size, stride)
    )
    patches = [arr[r : r + patch_size, c : c + patch_size].copy() for r, c in offsets]
    return PatchGrid(patch_size=patch_size, stride=stride, offsets=offsets), patches


def stitch(
    grid: PatchGrid, patches: list[np.ndarray], full_height: int, full_width: int
) -> np.ndarray:
    """Reassemble patches onto a canvas, last writer winning on overlaps.

    Patches extracted from one image agree on their overlaps, so the
    extract -> stitch roundtrip is bit-exact.
    """
    if len(patches) != len(grid.offsets):
        raise ValueError(
            f"{len(patches)} patches for {len(grid.offsets)} grid offsets"
        )
    p = grid.patch_size
    first = np.asarray(patches[0], dtype=np.float64)
    shape = (full_height, full_width) + first.shape[2:]
    canvas = np.zeros(shape, dtype=np.float64)
    for (r, c), patch in zip(grid.offsets, patches):
        arr = np.asarray(patch, dtype=np.float64)
        if arr.shape[:2] != (p, p) or arr.shape[2:] != first.shape[2:]:
            raise ValueError(f"patch shape {arr.shape} does not match the grid")
        canvas[r : r + p, c : c + p] = arr
    return canvas


def gaussian_mask(
    points: PointSet, height: int, width: int, sigma: float = 5.0
) -> np.ndarray:
    """Per-pixel max over points of exp(-d^2 / (2 sigma^2)), single channel.

    Overlapping kernels combine by max so every annotation keeps a unit peak;
    values below GAUSSIAN_TRUNCATION are zeroed to keep the mask sparse.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if len(points) == 0:
        return np.zeros((height, width), dtype=np.float64)
    d2 = _min_squared_distance(points, height, width)
    mask = np.exp(-d2 / (2.0 * sigma * sigma))
    mask[mask < GAUSSIAN_TRUNCATION] = 0.0
    return mask
