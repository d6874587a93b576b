"""On-disk formats: images, raw float maps, point CSVs, label/index PNGs, previews.

Conventions shared by the CLI and the pipeline:

- image intensities are normalized to [0, 1] on ingestion: 8-bit / 255,
  16-bit / 65535;
- raw float maps are little-endian float32, row-major, with a JSON sidecar
  ``{"width": W, "height": H, "channels": C}`` at ``<path>.json``;
- points travel as CSV with header ``x,y``, origin top-left, float pixels;
- cluster labels are 8-bit PNGs with 0 = background, 1 = nuclei,
  255 = ignored; previews paint them green / red / black;
- instance and Voronoi maps are 16-bit grayscale PNGs.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np
from PIL import Image, ImageSequence

from .geometry import PointSet

# Cluster-label class codes, chosen to match the PNG byte values.
CLS_BACKGROUND = 0
CLS_NUCLEI = 1
CLS_IGNORED = 255

STACK_EXTENSIONS = (".png", ".pgm", ".ppm")


def _normalize(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    if arr.dtype == np.int32:  # Pillow mode "I" (16-bit PGM and friends)
        return arr.astype(np.float64) / 65535.0
    if arr.dtype == bool:
        return arr.astype(np.float64)
    return arr.astype(np.float64)


def _from_pil(img: Image.Image) -> np.ndarray:
    if img.mode == "P":
        img = img.convert("RGB")
    elif img.mode == "RGBA":
        img = img.convert("RGB")
    elif img.mode == "LA":
        img = img.convert("L")
    return _normalize(np.asarray(img))


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load one image as float64 in [0, 1]; (H, W) grayscale or (H, W, 3) RGB."""
    with Image.open(path) as img:
        return _from_pil(img)


def load_stack(path: str | os.PathLike, allow_tiff: bool = False) -> np.ndarray:
    """Load a z-stack: a directory of per-slice images, lexicographic order.

    With ``allow_tiff`` a multi-page TIFF file is accepted instead (optional
    reader, off by default).
    """
    p = Path(path)
    if p.is_dir():
        names = sorted(
            n for n in os.listdir(p) if n.lower().endswith(STACK_EXTENSIONS)
        )
        if not names:
            raise FileNotFoundError(f"no slice images found in {p}")
        slices = [load_image(p / n) for n in names]
    elif p.suffix.lower() in (".tif", ".tiff"):
        if not allow_tiff:
            raise ValueError(
                f"{p} is a TIFF; pass allow_tiff=True (CLI: --tiff) to read it"
            )
        with Image.open(p) as img:
            slices = [_from_pil(frame) for frame in ImageSequence.Iterator(img)]
    else:
        raise FileNotFoundError(f"stack path {p} is neither a directory nor a TIFF")
    first = slices[0].shape
    for i, s in enumerate(slices):
        if s.shape != first:
            raise ValueError(
                f"slice {i} has shape {s.shape}, expected {first} (all slices "
                "must share height/width/channels)"
            )
    return np.stack(slices, axis=0)


def save_preview_png(path: str | os.PathLike, image: np.ndarray) -> None:
    """Write a float [0, 1] image as an 8-bit grayscale or RGB PNG."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    data = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(path, format="PNG")


# -- raw float maps ---------------------------------------------------------

def sidecar_path(path: str | os.PathLike) -> Path:
    return Path(str(path) + ".json")


def save_float_map(path: str | os.PathLike, arr: np.ndarray) -> None:
    """Write a (H, W) or (H, W, C) float map as raw little-endian float32."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3:
        raise ValueError(f"expected a 2-D or 3-D map, got shape {arr.shape}")
    h, w, c = a.shape
    Path(path).write_bytes(np.ascontiguousarray(a, dtype="<f4").tobytes())
    sidecar_path(path).write_text(
        json.dumps({"width": w, "height": h, "channels": c}, sort_keys=True) + "\n"
    )


def load_float_map(path: str | os.PathLike) -> np.ndarray:
    """Read a raw float map via its sidecar; returns (H, W) or (H, W, C)."""
    meta = json.loads(sidecar_path(path).read_text())
    h, w, c = int(meta["height"]), int(meta["width"]), int(meta["channels"])
    data = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    if data.size != h * w * c:
        raise ValueError(
            f"{path}: {data.size} floats does not match sidecar {h}x{w}x{c}"
        )
    arr = data.reshape(h, w, c).astype(np.float64)
    return arr[:, :, 0] if c == 1 else arr


# -- points -----------------------------------------------------------------

def save_points_csv(path: str | os.PathLike, points: PointSet) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in points.xy:
            writer.writerow([repr(float(x)), repr(float(y))])


def load_points_csv(path: str | os.PathLike) -> PointSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["x", "y"]:
            raise ValueError(f"{path}: expected a CSV with header 'x,y'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    return PointSet(np.array(rows, dtype=np.float64).reshape(len(rows), 2))


# -- cluster labels ---------------------------------------------------------

def save_label_png(path: str | os.PathLike, label: np.ndarray) -> None:
    arr = np.asarray(label)
    values = np.unique(arr)
    bad = set(values.tolist()) - {CLS_BACKGROUND, CLS_NUCLEI, CLS_IGNORED}
    if bad:
        raise ValueError(f"label contains values outside {{0, 1, 255}}: {sorted(bad)}")
    Image.fromarray(arr.astype(np.uint8)).save(path, format="PNG")


def load_label_png(path: str | os.PathLike) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L") if img.mode != "L" else img)
    bad = set(np.unique(arr).tolist()) - {CLS_BACKGROUND, CLS_NUCLEI, CLS_IGNORED}
    if bad:
        raise ValueError(f"{path}: values outside {{0, 1, 255}}: {sorted(bad)}")
    return arr.astype(np.uint8)


def save_label_preview(path: str | os.PathLike, label: np.ndarray) -> None:
    """Color preview: green = nuclei, red = background, black = ignored."""
    arr = np.asarray(label)
    rgb = np.zeros(arr.shape + (3,), dtype=np.uint8)
    rgb[arr == CLS_BACKGROUND] = (255, 0, 0)
    rgb[arr == CLS_NUCLEI] = (0, 255, 0)
    Image.fromarray(rgb).save(path, format="PNG")


# -- index maps (instances, Voronoi cells) ----------------------------------

def save_index_png(path: str | os.PathLike, indices: np.ndarray) -> None:
    """Write a non-negative integer map as 16-bit grayscale PNG."""
    arr = np.asarray(indices)
    if arr.min() < 0 or arr.max() > 65535:
        raise ValueError("index map must fit in uint16")
    Image.fromarray(arr.astype(np.uint16)).save(path, format="PNG")


def load_index_png(path: str | os.PathLike) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img)
    return arr.astype(np.int32)


def save_index_preview(
    path: str | os.PathLike, indices: np.ndarray, seed: int = 0
) -> None:
    """Color preview of an index map with a deterministic per-index palette."""
    arr = np.asarray(indices)
    n = int(arr.max()) + 1
    rng = np.random.default_rng(seed)
    palette = rng.integers(64, 256, size=(max(n, 1), 3), dtype=np.int64)
    palette[0] = 0  # index 0 = not-an-instance stays black
    Image.fromarray(palette[arr].astype(np.uint8)).save(path, format="PNG")


def save_signed_preview(path: str | os.PathLike, values: np.ndarray) -> None:
    """Diverging preview of a [-1, 1] map: blue at -1, white at 0, red at +1."""
    v = np.clip(np.asarray(values, dtype=np.float64), -1.0, 1.0)
    pos = np.clip(v, 0.0, 1.0)
    neg = np.clip(-v, 0.0, 1.0)
    rgb = np.stack([1.0 - neg, 1.0 - np.abs(v), 1.0 - pos], axis=-1)
    Image.fromarray(np.rint(rgb * 255.0).astype(np.uint8)).save(path, format="PNG")


# -- small JSON / CSV carriers ----------------------------------------------

def save_roi_json(path: str | os.PathLike, vertices: np.ndarray) -> None:
    verts = [[float(x), float(y)] for x, y in np.asarray(vertices, dtype=np.float64)]
    Path(path).write_text(json.dumps(verts) + "\n")


def load_roi_json(path: str | os.PathLike) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{path}: expected a JSON list of [x, y] pairs")
    return arr


TRACE_HEADER = ("epoch", "ce", "dice", "mse", "entropy", "total")


def save_trace_csv(path: str | os.PathLike, rows) -> None:
    """Write a loss trace as CSV rows of (epoch, ce, dice, mse, entropy, total)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in rows:
            writer.writerow([repr(float(v)) if i else int(v) for i, v in enumerate(row)])


def load_trace_csv(path: str | os.PathLike) -> list[tuple]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        return [
            (int(r[0]),) + tuple(float(v) for v in r[1:]) for r in reader if r
        ]
