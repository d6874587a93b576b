"""Round-trips and normalization rules for every on-disk format."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from weaklab import fileio
from weaklab.fileio import (
    CLS_BACKGROUND,
    CLS_IGNORED,
    CLS_NUCLEI,
    load_float_map,
    load_image,
    load_index_png,
    load_label_png,
    load_points_csv,
    load_roi_json,
    load_stack,
    load_trace_csv,
    save_float_map,
    save_index_png,
    save_label_png,
    save_label_preview,
    save_points_csv,
    save_preview_png,
    save_roi_json,
    save_signed_preview,
    save_trace_csv,
    sidecar_path,
)
from weaklab.geometry import PointSet


# -- image ingestion --------------------------------------------------------

def test_load_image_8bit_normalization(tmp_path):
    path = tmp_path / "g.png"
    Image.fromarray(np.array([[0, 51, 255]], dtype=np.uint8)).save(path)
    img = load_image(path)
    assert img.dtype == np.float64
    assert img.tolist() == [[0.0, 51 / 255, 1.0]]


def test_load_image_16bit_normalization(tmp_path):
    path = tmp_path / "g16.png"
    Image.fromarray(np.array([[0, 65535, 32768]], dtype=np.uint16)).save(path)
    img = load_image(path)
    assert img.tolist() == [[0.0, 1.0, 32768 / 65535]]


def test_load_image_rgb_shape(tmp_path):
    path = tmp_path / "c.png"
    Image.fromarray(np.zeros((4, 5, 3), dtype=np.uint8)).save(path)
    assert load_image(path).shape == (4, 5, 3)


def test_preview_roundtrip_8bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    quantized = rng.integers(0, 256, (16, 16)).astype(np.float64) / 255.0
    path = tmp_path / "p.png"
    save_preview_png(path, quantized)
    assert np.array_equal(load_image(path), quantized)


# -- stacks ------------------------------------------------------------------

def test_load_stack_directory_lexicographic(tmp_path):
    for i, v in enumerate([30, 10, 20]):
        Image.fromarray(np.full((3, 4), v, dtype=np.uint8)).save(
            tmp_path / f"slice_{i}.png"
        )
    stack = load_stack(tmp_path)
    assert stack.shape == (3, 3, 4)
    assert np.allclose(stack[:, 0, 0] * 255, [30, 10, 20])


def test_load_stack_ignores_non_slice_files(tmp_path):
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(tmp_path / "a.png")
    (tmp_path / "notes.txt").write_text("not an image\n")
    assert load_stack(tmp_path).shape == (1, 2, 2)


def test_load_stack_empty_dir_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_stack(tmp_path)


def test_load_stack_shape_mismatch_raises(tmp_path):
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(tmp_path / "a.png")
    Image.fromarray(np.zeros((3, 2), dtype=np.uint8)).save(tmp_path / "b.png")
    with pytest.raises(ValueError):
        load_stack(tmp_path)


def test_load_stack_tiff_requires_opt_in(tmp_path):
    frames = [Image.fromarray(np.full((2, 2), v, dtype=np.uint8)) for v in (5, 9)]
    path = tmp_path / "stack.tif"
    frames[0].save(path, save_all=True, append_images=frames[1:])
    with pytest.raises(ValueError):
        load_stack(path)
    stack = load_stack(path, allow_tiff=True)
    assert stack.shape == (2, 2, 2)
    assert np.allclose(stack[:, 0, 0] * 255, [5, 9])


# -- raw float maps ----------------------------------------------------------

def test_float_map_roundtrip_2d(tmp_path):
    rng = np.random.default_rng(1)
    arr = rng.random((7, 5)).astype(np.float32).astype(np.float64)
    path = tmp_path / "m.raw"
    save_float_map(path, arr)
    assert sidecar_path(path).exists()
    out = load_float_map(path)
    assert out.shape == (7, 5)
    assert np.array_equal(out, arr)


def test_float_map_roundtrip_3d(tmp_path):
    rng = np.random.default_rng(2)
    arr = rng.standard_normal((4, 6, 2)).astype(np.float32).astype(np.float64)
    path = tmp_path / "m.raw"
    save_float_map(path, arr)
    assert np.array_equal(load_float_map(path), arr)


def test_float_map_sidecar_mismatch_raises(tmp_path):
    path = tmp_path / "m.raw"
    save_float_map(path, np.zeros((3, 3)))
    sidecar_path(path).write_text('{"width": 9, "height": 9, "channels": 1}')
    with pytest.raises(ValueError):
        load_float_map(path)


# -- points ------------------------------------------------------------------

def test_points_csv_roundtrip_exact(tmp_path):
    xy = np.array([[1.25, 3.5], [100.0 / 3.0, 0.0]])
    path = tmp_path / "pts.csv"
    save_points_csv(path, PointSet(xy))
    out = load_points_csv(path)
    assert np.array_equal(out.xy, xy)  # repr() round-trips float64 exactly


def test_points_csv_empty_roundtrip(tmp_path):
    path = tmp_path / "pts.csv"
    save_points_csv(path, PointSet(np.empty((0, 2))))
    assert len(load_points_csv(path)) == 0


def test_points_csv_bad_header_rejected(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("col,row\n1,2\n")
    with pytest.raises(ValueError):
        load_points_csv(path)


def test_points_csv_header_case_insensitive(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("X, Y\n1.0,2.0\n")
    assert load_points_csv(path).xy.tolist() == [[1.0, 2.0]]


# -- labels ------------------------------------------------------------------

def test_label_png_roundtrip(tmp_path):
    label = np.full((6, 6), CLS_BACKGROUND, dtype=np.uint8)
    label[1:3, 1:3] = CLS_NUCLEI
    label[4, 4] = CLS_IGNORED
    path = tmp_path / "label.png"
    save_label_png(path, label)
    assert np.array_equal(load_label_png(path), label)


def test_label_png_rejects_stray_values(tmp_path):
    with pytest.raises(ValueError):
        save_label_png(tmp_path / "bad.png", np.full((2, 2), 7, dtype=np.uint8))
    path = tmp_path / "bad2.png"
    Image.fromarray(np.full((2, 2), 9, dtype=np.uint8)).save(path)
    with pytest.raises(ValueError):
        load_label_png(path)


def test_label_preview_colors(tmp_path):
    label = np.array([[CLS_BACKGROUND, CLS_NUCLEI, CLS_IGNORED]], dtype=np.uint8)
    path = tmp_path / "prev.png"
    save_label_preview(path, label)
    rgb = np.asarray(Image.open(path))
    assert rgb[0, 0].tolist() == [255, 0, 0]
    assert rgb[0, 1].tolist() == [0, 255, 0]
    assert rgb[0, 2].tolist() == [0, 0, 0]


# -- index maps --------------------------------------------------------------

def test_index_png_roundtrip_16bit(tmp_path):
    rng = np.random.default_rng(3)
    idx = rng.integers(0, 40000, (9, 9)).astype(np.int32)
    path = tmp_path / "idx.png"
    save_index_png(path, idx)
    out = load_index_png(path)
    assert out.dtype == np.int32
    assert np.array_equal(out, idx)


def test_index_png_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueError):
        save_index_png(tmp_path / "bad.png", np.array([[70000]]))
    with pytest.raises(ValueError):
        save_index_png(tmp_path / "bad.png", np.array([[-1]]))


def test_index_preview_background_black_and_deterministic(tmp_path):
    idx = np.array([[0, 1], [2, 1]])
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    fileio.save_index_preview(a, idx, seed=5)
    fileio.save_index_preview(b, idx, seed=5)
    rgb = np.asarray(Image.open(a))
    assert rgb[0, 0].tolist() == [0, 0, 0]
    assert (rgb[0, 1] == np.asarray(Image.open(b))[0, 1]).all()
    assert rgb[0, 1].tolist() == rgb[1, 1].tolist()  # same id, same color


def test_signed_preview_endpoints(tmp_path):
    path = tmp_path / "s.png"
    save_signed_preview(path, np.array([[-1.0, 0.0, 1.0]]))
    rgb = np.asarray(Image.open(path))
    assert rgb[0, 0].tolist() == [0, 0, 255]
    assert rgb[0, 1].tolist() == [255, 255, 255]
    assert rgb[0, 2].tolist() == [255, 0, 0]


# -- ROI / trace -------------------------------------------------------------

def test_roi_json_roundtrip(tmp_path):
    verts = np.array([[0.0, 0.0], [10.5, 0.0], [10.5, 8.25], [0.0, 8.0]])
    path = tmp_path / "roi.json"
    save_roi_json(path, verts)
    assert np.array_equal(load_roi_json(path), verts)


def test_roi_json_rejects_malformed(tmp_path):
    path = tmp_path / "roi.json"
    path.write_text("[[1, 2, 3]]")
    with pytest.raises(ValueError):
        load_roi_json(path)


def test_trace_csv_roundtrip(tmp_path):
    rows = [
        (0, 0.5, 0.25, 0.0, 0.6931471805599453, 1.0965735902799727),
        (1, 0.25, 0.125, 0.0, 0.5, 0.625),
    ]
    path = tmp_path / "trace.csv"
    save_trace_csv(path, rows)
    assert load_trace_csv(path) == rows


def test_trace_csv_bad_header_rejected(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("step,loss\n0,1.0\n")
    with pytest.raises(ValueError):
        load_trace_csv(path)
