"""End-to-end orchestration: stack -> projection -> patches -> label artifacts.

One JSON config describes a run; `run_pipeline` executes projection, optional
ROI masking, patch extraction, cluster labeling, instance/offset-map
generation, and Gaussian point masks per patch, then writes a manifest with a
SHA-256 per artifact.  All randomness comes from config seeds and patch
outputs land at per-patch-unique paths, so reruns are bit-identical no matter
how many worker threads run (``WEAKLAB_THREADS`` caps the pool).
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .fileio import (
    CLS_BACKGROUND,
    load_image,
    load_points_csv,
    load_roi_json,
    load_stack,
    save_float_map,
    save_index_png,
    save_label_png,
    save_label_preview,
    sidecar_path,
)
from .geometry import PointSet
from .hover import hover_maps, label_instances
from .imaging import apply_roi, extract_patches, gaussian_mask, mip
from .weak_labels import LabelConfig, make_cluster_label

THREADS_ENV = "WEAKLAB_THREADS"


class PipelineError(RuntimeError):
    """A pipeline stage failed; carries the stage name and offending input."""


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown {where} config keys: {sorted(unknown)}")


@dataclass(frozen=True)
class InputConfig:
    stack: str
    points: str
    roi: str | None = None
    tiff: bool = False


@dataclass(frozen=True)
class PatchConfig:
    size: int = 256
    overlap: float = 0.1


@dataclass(frozen=True)
class MaskConfig:
    sigma: float = 5.0


@dataclass(frozen=True)
class MetricsConfig:
    r_nuc: float = 11.0


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig
    output_dir: str
    patch: PatchConfig = PatchConfig()
    label: LabelConfig = LabelConfig()
    mask: MaskConfig = MaskConfig()
    metrics: MetricsConfig = MetricsConfig()

    @staticmethod
    def from_dict(doc: dict) -> "PipelineConfig":
        _check_keys(
            doc, {"input", "output", "patch", "label", "mask", "metrics"}, "top-level"
        )
        for name in ("input", "output"):
            if name not in doc:
                raise ValueError(f"config is missing the {name!r} section")
        _check_keys(doc["input"], {"stack", "points", "roi", "tiff"}, "input")
        for name in ("stack", "points"):
            if name not in doc["input"]:
                raise ValueError(f"input section is missing {name!r}")
        _check_keys(doc["output"], {"dir"}, "output")
        if "dir" not in doc["output"]:
            raise ValueError("output section is missing 'dir'")
        patch = doc.get("patch", {})
        _check_keys(patch, {"size", "overlap"}, "patch")
        label = doc.get("label", {})
        _check_keys(
            label,
            {
                "cap", "k", "seed", "max_iter", "tol", "dilation_radius",
                "background_rule", "edge_width",
            },
            "label",
        )
        label = dict(label)
        if "seed" in label:
            label["rng_seed"] = label.pop("seed")
        mask = doc.get("mask", {})
        _check_keys(mask, {"sigma"}, "mask")
        metrics = doc.get("metrics", {})
        _check_keys(metrics, {"r_nuc"}, "metrics")
        return PipelineConfig(
            input=InputConfig(**doc["input"]),
            output_dir=doc["output"]["dir"],
            patch=PatchConfig(**patch),
            label=LabelConfig(**label),
            mask=MaskConfig(**mask),
            metrics=MetricsConfig(**metrics),
        )

    def to_dict(self) -> dict:
        label = asdict(self.label)
        label["seed"] = label.pop("rng_seed")
        return {
            "input": asdict(self.input),
            "output": {"dir": self.output_dir},
            "patch": asdict(self.patch),
            "label": label,
            "mask": asdict(self.mask),
            "metrics": asdict(self.metrics),
        }

    @staticmethod
    def from_json(path) -> "PipelineConfig":
        return PipelineConfig.from_dict(json.loads(Path(path).read_text()))


def worker_count() -> int:
    """Pool size: WEAKLAB_THREADS if set (>= 1), else the hardware default."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_projection(cfg: PipelineConfig) -> np.ndarray:
    stack_path = Path(cfg.input.stack)
    if not stack_path.exists():
        raise FileNotFoundError(f"input stack not found: {stack_path}")
    if stack_path.is_file() and stack_path.suffix.lower() not in (".tif", ".tiff"):
        image = load_image(stack_path)  # single image doubles as a 1-slice stack
    else:
        image = mip(load_stack(stack_path, allow_tiff=cfg.input.tiff))
    if cfg.input.roi is not None:
        roi_path = Path(cfg.input.roi)
        if not roi_path.exists():
            raise FileNotFoundError(f"ROI file not found: {roi_path}")
        image = apply_roi(image, load_roi_json(roi_path))
    return image


def _patch_points(points: PointSet, r: int, c: int, size: int) -> PointSet:
    x, y = points.xy[:, 0], points.xy[:, 1]
    inside = (x >= c) & (x < c + size) & (y >= r) & (y < r + size)
    return PointSet(points.xy[inside] - (c, r))


def _patch_artifacts(
    out_dir: Path, idx: int, patch: np.ndarray, pts: PointSet, cfg: PipelineConfig
) -> list[tuple[str, str]]:
    """Compute and write one patch's artifacts; returns (relpath, kind) rows."""
    size = cfg.patch.size
    if len(pts) > 0:
        label = make_cluster_label(patch, pts, cfg.label)
        instances = label_instances(label, pts)
        hover = hover_maps(instances)
        point_mask = gaussian_mask(pts, size, size, cfg.mask.sigma)
    else:
        label = np.full((size, size), CLS_BACKGROUND, dtype=np.uint8)
        instances = np.zeros((size, size), dtype=np.int32)
        hover = np.zeros((size, size, 2))
        point_mask = np.zeros((size, size))
    stem = f"patch_{idx:03d}"
    rows = []

    def emit(name: str, kind: str, writer, data) -> None:
        path = out_dir / "patches" / f"{stem}.{name}"
        writer(path, data)
        rows.append((str(path.relative_to(out_dir)), kind))
        if name.endswith(".raw"):
            rows.append(
                (str(sidecar_path(path).relative_to(out_dir)), kind + "-descriptor")
            )

    emit("label.png", "cluster-label", save_label_png, label)
    emit("preview.png", "label-preview", save_label_preview, label)
    emit("instances.png", "instances", save_index_png, instances)
    emit("hover_h.raw", "hover-h", save_float_map, hover[:, :, 0])
    emit("hover_v.raw", "hover-v", save_float_map, hover[:, :, 1])
    emit("point_mask.raw", "point-mask", save_float_map, point_mask)
    return rows


def run_pipeline(cfg: PipelineConfig) -> Path:
    """Execute the full run; returns the path of the written manifest."""
    points_path = Path(cfg.input.points)
    if not points_path.exists():
        raise FileNotFoundError(f"points file not found: {points_path}")
    image = _load_projection(cfg)
    points = load_points_csv(points_path)
    grid, patches = extract_patches(image, cfg.patch.size, cfg.patch.overlap)

    out_dir = Path(cfg.output_dir)
    (out_dir / "patches").mkdir(parents=True, exist_ok=True)

    def job(idx: int) -> list[tuple[str, str]]:
        r, c = grid.offsets[idx]
        pts = _patch_points(points, r, c, cfg.patch.size)
        try:
            return _patch_artifacts(out_dir, idx, patches[idx], pts, cfg)
        except Exception as exc:  # surface the stage and input with the cause
            raise PipelineError(
                f"labeling stage failed on patch {idx} (anchor {r},{c}) of "
                f"{cfg.input.stack}: {exc}"
            ) from exc

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows = [row for result in pool.map(job, range(len(patches))) for row in result]

    artifacts = [
        {"path": rel, "kind": kind, "sha256": _sha256(out_dir / rel)}
        for rel, kind in sorted(rows)
    ]
    manifest = {
        "config": cfg.to_dict(),
        "tool_version": __version__,
        "artifacts": artifacts,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
