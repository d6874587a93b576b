"""Voronoi rasterization, distance maps, clipping, and point dilation."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from weaklab.geometry import (
    PointSet,
    clip_distance,
    dilate_points,
    disk_footprint,
    distance_map,
    rasterize_voronoi,
    voronoi_edges,
)

from oracles import disk_pixel_count, min_distance_scan, nearest_seed_scan


def random_points(rng, n, height, width):
    xy = rng.uniform((0, 0), (width - 1, height - 1), (n, 2))
    return PointSet(xy)


# -- PointSet ---------------------------------------------------------------

def test_pointset_rejects_bad_shapes():
    with pytest.raises(ValueError):
        PointSet(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        PointSet(np.array([[0.0, np.nan]]))


def test_pointset_rejects_duplicates():
    with pytest.raises(ValueError, match="closer than"):
        PointSet(np.array([[4.0, 4.0], [10.0, 3.0], [4.0, 4.0 + 1e-9]]))


def test_pointset_is_read_only():
    ps = PointSet(np.array([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        ps.xy[0, 0] = 5.0


def test_pixel_rc_rounds_half_up():
    ps = PointSet(np.array([[2.5, 3.49], [0.0, 0.0]]))
    rows, cols = ps.pixel_rc(10, 10)
    assert cols.tolist() == [3, 0]
    assert rows.tolist() == [3, 0]


# -- Voronoi ----------------------------------------------------------------

def test_voronoi_single_seed_covers_plane():
    vlabel = rasterize_voronoi(PointSet(np.array([[5.0, 5.0]])), 16, 16)
    assert np.all(vlabel.cell == 0)


def test_voronoi_two_seeds_bisector_tie():
    # seeds at x=10 and x=54 on one row: bisector at x=32 ties to seed 0
    pts = PointSet(np.array([[10.0, 32.0], [54.0, 32.0]]))
    vlabel = rasterize_voronoi(pts, 64, 64)
    assert np.all(vlabel.cell[:, :32] == 0)
    assert np.all(vlabel.cell[:, 32] == 0)
    assert np.all(vlabel.cell[:, 33:] == 1)


def test_voronoi_empty_pointset_rejected():
    with pytest.raises(ValueError):
        rasterize_voronoi(PointSet(np.empty((0, 2))), 8, 8)


def test_voronoi_matches_nearest_seed_scan():
    rng = np.random.default_rng(11)
    for _ in range(5):
        pts = random_points(rng, 10, 64, 64)
        vlabel = rasterize_voronoi(pts, 64, 64)
        assert np.array_equal(vlabel.cell, nearest_seed_scan(pts.xy, 64, 64))


def test_voronoi_cell_contains_own_seed():
    rng = np.random.default_rng(3)
    pts = random_points(rng, 8, 48, 48)
    vlabel = rasterize_voronoi(pts, 48, 48)
    rows, cols = pts.pixel_rc(48, 48)
    assert np.array_equal(vlabel.cell[rows, cols], np.arange(8))


def test_voronoi_cells_are_4_connected():
    # raster counterpart of cell convexity
    rng = np.random.default_rng(19)
    pts = random_points(rng, 9, 40, 40)
    vlabel = rasterize_voronoi(pts, 40, 40)
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    for i in range(9):
        _, n = ndimage.label(vlabel.cell == i, structure=structure)
        assert n == 1


def test_voronoi_edges_two_seed_bisector():
    pts = PointSet(np.array([[10.0, 32.0], [54.0, 32.0]]))
    vlabel = rasterize_voronoi(pts, 64, 64)
    edges = voronoi_edges(vlabel, width_px=1)
    expected = np.zeros((64, 64), dtype=bool)
    expected[:, 32:34] = True  # both sides of the 32|33 change
    assert np.array_equal(edges, expected)
    assert edges.sum() == 128


def test_voronoi_edges_empty_for_single_seed():
    vlabel = rasterize_voronoi(PointSet(np.array([[3.0, 3.0]])), 8, 8)
    assert not voronoi_edges(vlabel).any()


def test_voronoi_edges_dilation_monotone():
    rng = np.random.default_rng(5)
    pts = random_points(rng, 6, 32, 32)
    vlabel = rasterize_voronoi(pts, 32, 32)
    narrow = voronoi_edges(vlabel, width_px=1)
    wide = voronoi_edges(vlabel, width_px=3)
    assert np.all(wide[narrow])
    assert wide.sum() > narrow.sum()


# -- distance maps ----------------------------------------------------------

def test_distance_point_pixel_is_zero():
    d = distance_map(PointSet(np.array([[4.0, 7.0]])), 16, 16)
    assert d[7, 4] == 0.0


def test_distance_3_4_5_triangle():
    d = distance_map(PointSet(np.array([[0.0, 0.0]])), 8, 8)
    assert d[4, 3] == pytest.approx(5.0, abs=1e-12)


def test_distance_matches_all_pairs_scan_integral():
    rng = np.random.default_rng(23)
    xy = np.unique(rng.integers(0, 64, (8, 2)), axis=0).astype(float)
    pts = PointSet(xy)
    d = distance_map(pts, 64, 64)
    assert np.abs(d - min_distance_scan(pts.xy, 64, 64)).max() < 1e-6


def test_distance_matches_all_pairs_scan_fractional():
    rng = np.random.default_rng(29)
    pts = random_points(rng, 8, 64, 64)
    d = distance_map(pts, 64, 64)
    assert np.abs(d - min_distance_scan(pts.xy, 64, 64)).max() < 1e-6


def test_distance_is_lipschitz_across_4_neighbors():
    rng = np.random.default_rng(31)
    pts = random_points(rng, 5, 40, 40)
    d = distance_map(pts, 40, 40)
    assert np.abs(np.diff(d, axis=0)).max() <= 1 + 1e-6
    assert np.abs(np.diff(d, axis=1)).max() <= 1 + 1e-6


def test_adding_a_point_never_increases_distance():
    rng = np.random.default_rng(37)
    pts = random_points(rng, 6, 32, 32)
    more = PointSet(np.vstack([pts.xy, [[20.25, 11.5]]]))
    assert np.all(distance_map(more, 32, 32) <= distance_map(pts, 32, 32) + 1e-12)


def test_clip_distance():
    d = np.array([[30.0, 7.0], [20.0, 0.0]])
    clipped = clip_distance(d, 20.0)
    assert clipped.tolist() == [[20.0, 7.0], [20.0, 0.0]]
    assert np.array_equal(clip_distance(clipped, 20.0), clipped)
    with pytest.raises(ValueError):
        clip_distance(d, 0.0)


# -- dilation ---------------------------------------------------------------

def test_dilate_radius_zero_marks_point_pixels_only():
    pts = PointSet(np.array([[3.0, 4.0], [10.0, 2.0]]))
    mask = dilate_points(pts, 0.0, 16, 16)
    assert mask.sum() == 2
    assert mask[4, 3] and mask[2, 10]


def test_dilate_disk_cardinality():
    mask = dilate_points(PointSet(np.array([[20.0, 20.0]])), 5.0, 41, 41)
    assert mask.sum() == disk_pixel_count(5.0)


def test_dilate_equals_thresholded_distance_map():
    rng = np.random.default_rng(41)
    pts = random_points(rng, 7, 48, 48)
    for radius in (0.0, 3.0, 9.5):
        expected = distance_map(pts, 48, 48) <= radius
        assert np.array_equal(dilate_points(pts, radius, 48, 48), expected)


def test_dilate_monotone_in_radius():
    rng = np.random.default_rng(43)
    pts = random_points(rng, 4, 32, 32)
    small = dilate_points(pts, 2.0, 32, 32)
    big = dilate_points(pts, 6.0, 32, 32)
    assert np.all(big[small])


def test_disk_footprint_radius_one():
    assert disk_footprint(1).tolist() == [
        [False, True, False],
        [True, True, True],
        [False, True, False],
    ]
