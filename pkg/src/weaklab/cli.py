"""Command-line surface: one thin subcommand per library operation.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.  Image
outputs are chosen by extension — ``.png`` writes an 8-bit preview, anything
else a raw float32 map with its JSON sidecar.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, fileio, geometry, imaging, metrics, surrogate, synth
from .hover import hover_maps, label_instances
from .losses import (
    LossWeights,
    class_target_from_label,
    composite_loss,
    region_mask_from_label,
)
from .pipeline import PipelineConfig, run_pipeline
from .weak_labels import LabelConfig, make_cluster_label

USAGE_ERRORS = (ValueError, FileNotFoundError, NotADirectoryError, IsADirectoryError)


def _load_image_auto(path: str) -> np.ndarray:
    if str(path).endswith(".raw"):
        return fileio.load_float_map(path)
    return fileio.load_image(path)


def _save_image_auto(path: str, arr: np.ndarray) -> None:
    if str(path).endswith(".png"):
        fileio.save_preview_png(path, arr)
    else:
        fileio.save_float_map(path, arr)


def cmd_mip(args) -> int:
    _save_image_auto(args.output, imaging.mip(fileio.load_stack(args.stack, args.tiff)))
    return 0


def cmd_roi(args) -> int:
    image = _load_image_auto(args.image)
    _save_image_auto(args.output, imaging.apply_roi(image, fileio.load_roi_json(args.roi)))
    return 0


def cmd_patch(args) -> int:
    image = _load_image_auto(args.image)
    grid, patches = imaging.extract_patches(image, args.patch_size, args.overlap)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    ext = "png" if args.format == "png" else "raw"
    for i, patch in enumerate(patches):
        _save_image_auto(str(out / f"patch_{i:03d}.{ext}"), patch)
    (out / "grid.json").write_text(
        json.dumps(
            {
                "patch_size": grid.patch_size,
                "stride": grid.stride,
                "offsets": [list(o) for o in grid.offsets],
            },
            sort_keys=True,
        )
        + "\n"
    )
    return 0


def cmd_voronoi(args) -> int:
    points = fileio.load_points_csv(args.points)
    vlabel = geometry.rasterize_voronoi(points, args.height, args.width)
    fileio.save_index_png(args.output, vlabel.cell)
    if args.preview:
        fileio.save_index_preview(args.preview, vlabel.cell)
    return 0


def cmd_distmap(args) -> int:
    points = fileio.load_points_csv(args.points)
    dmap = geometry.clip_distance(
        geometry.distance_map(points, args.height, args.width), args.cap
    )
    fileio.save_float_map(args.output, dmap)
    return 0


def cmd_cluster_label(args) -> int:
    image = _load_image_auto(args.image)
    points = fileio.load_points_csv(args.points)
    config = LabelConfig(
        cap=args.cap,
        k=args.k,
        rng_seed=args.seed,
        dilation_radius=args.dilation_radius,
        background_rule=args.background_rule,
        edge_width=args.edge_width,
    )
    label = make_cluster_label(image, points, config)
    fileio.save_label_png(args.output, label)
    if args.preview:
        fileio.save_label_preview(args.preview, label)
    return 0


def cmd_hover_maps(args) -> int:
    label = fileio.load_label_png(args.label)
    points = fileio.load_points_csv(args.points)
    instances = label_instances(label, points)
    hover = hover_maps(instances)
    fileio.save_float_map(f"{args.out_prefix}.h.raw", hover[:, :, 0])
    fileio.save_float_map(f"{args.out_prefix}.v.raw", hover[:, :, 1])
    if args.instances:
        fileio.save_index_png(args.instances, instances)
    if args.preview:
        fileio.save_signed_preview(f"{args.preview}.h.png", hover[:, :, 0])
        fileio.save_signed_preview(f"{args.preview}.v.png", hover[:, :, 1])
    return 0


def cmd_gaussian_mask(args) -> int:
    points = fileio.load_points_csv(args.points)
    mask = imaging.gaussian_mask(points, args.height, args.width, args.sigma)
    _save_image_auto(args.output, mask)
    return 0


def _load_hover_pair(path_h: str, path_v: str) -> np.ndarray:
    return np.stack(
        [fileio.load_float_map(path_h), fileio.load_float_map(path_v)], axis=-1
    )


def cmd_losses(args) -> int:
    logits = fileio.load_float_map(args.logits)
    if logits.ndim != 3:
        raise ValueError("logits must be an (H, W, m) float map")
    label = fileio.load_label_png(args.label)
    mask = region_mask_from_label(label)
    target = class_target_from_label(label)
    hover_pred = hover_target = None
    if args.hover_pred:
        if not args.hover_target:
            raise ValueError("--hover-pred requires --hover-target")
        hover_pred = _load_hover_pair(*args.hover_pred)
        hover_target = _load_hover_pair(*args.hover_target)
    weights = LossWeights(ce=args.w_ce, dice=args.w_dice, mse=args.w_mse, entropy=args.w_ent)
    breakdown, _, _ = composite_loss(
        logits, target, mask, hover_pred=hover_pred, hover_target=hover_target, weights=weights
    )
    print(
        json.dumps(
            {
                "ce": breakdown.ce,
                "dice": breakdown.dice,
                "mse": breakdown.mse,
                "entropy": breakdown.entropy,
                "total": breakdown.total,
                "weights": {
                    "ce": weights.ce,
                    "dice": weights.dice,
                    "mse": weights.mse,
                    "entropy": weights.entropy,
                },
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_train_surrogate(args) -> int:
    image = _load_image_auto(args.image)
    label = fileio.load_label_png(args.label)
    config = surrogate.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        w_ce=args.w_ce,
        w_dice=args.w_dice,
        w_entropy=args.w_ent,
        rng_seed=args.seed,
    )
    classifier, trace = surrogate.train(config, [(image, label)])
    classifier.save(args.output)
    if args.trace:
        rows = [
            (i, b.ce, b.dice, b.mse, b.entropy, b.total) for i, b in enumerate(trace)
        ]
        fileio.save_trace_csv(args.trace, rows)
    return 0


def cmd_detect(args) -> int:
    classifier = surrogate.PixelClassifier.load(args.classifier)
    probs = surrogate.predict(classifier, _load_image_auto(args.image))
    points = surrogate.detect_centers(probs, args.threshold, args.min_area)
    fileio.save_points_csv(args.output, points)
    return 0


def _point_files(path: Path) -> dict[str, Path]:
    if path.is_dir():
        return {p.name: p for p in sorted(path.glob("*.csv"))}
    return {path.name: path}


def cmd_eval(args) -> int:
    det_path, ann_path = Path(args.detections), Path(args.annotations)
    if det_path.is_dir() != ann_path.is_dir():
        raise ValueError("detections and annotations must both be files or both dirs")
    dets, anns = _point_files(det_path), _point_files(ann_path)
    if det_path.is_dir():
        if set(dets) != set(anns):
            raise ValueError(
                "detection/annotation directories do not hold matching filenames"
            )
        names = sorted(dets)
    else:
        names = [det_path.name]
        anns = {det_path.name: ann_path}
    cfg = metrics.MatchConfig(r_nuc=args.r_nuc)
    reports = [
        metrics.match_detections(
            fileio.load_points_csv(dets[name]), fileio.load_points_csv(anns[name]), cfg
        )
        for name in names
    ]
    precision, recall, f1 = metrics.aggregate(reports)
    if args.per_image:
        with open(args.per_image, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "tp", "fp", "fn", "precision", "recall", "f1"])
            for name, rep in zip(names, reports):
                p, r, f = metrics.prf1(rep)
                writer.writerow([name, rep.tp, rep.fp, rep.fn, p, r, f])
    print(
        json.dumps(
            {
                "tp": sum(r.tp for r in reports),
                "fp": sum(r.fp for r in reports),
                "fn": sum(r.fn for r in reports),
                "precision": precision,
                "recall": recall,
                "f1": f1,
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_synth(args) -> int:
    cfg = synth.SceneConfig(
        height=args.height,
        width=args.width,
        count=args.count,
        radius_min=args.radius_min,
        radius_max=args.radius_max,
        min_separation=args.min_separation,
        touching_fraction=args.touching_fraction,
        core_level=args.core_level,
        edge_sigma=args.edge_sigma,
        noise_sigma=args.noise_sigma,
        rng_seed=args.seed,
    )
    image, gt = synth.generate_scene(cfg)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.save_preview_png(out / "image.png", image)
    fileio.save_float_map(out / "image.raw", image)
    fileio.save_points_csv(out / "points.csv", gt.points)
    fileio.save_index_png(out / "instances.png", gt.instances)
    return 0


def cmd_run(args) -> int:
    manifest = run_pipeline(PipelineConfig.from_json(args.config))
    print(manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weaklab",
        description="Weak nuclei labels from point annotations: cluster labels, "
        "offset targets, masked losses, and detection metrics.",
    )
    parser.add_argument("--version", action="version", version=f"weaklab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        p.set_defaults(func=func)
        return p

    p = add("mip", cmd_mip, "maximum intensity projection of a z-stack")
    p.add_argument("stack", help="directory of slice images (or TIFF with --tiff)")
    p.add_argument("output", help=".png preview or .raw float map")
    p.add_argument("--tiff", action="store_true", help="read a multi-page TIFF stack")

    p = add("roi", cmd_roi, "zero pixels outside a polygon ROI")
    p.add_argument("image")
    p.add_argument("roi", help="JSON list of [x, y] vertices")
    p.add_argument("output")

    p = add("patch", cmd_patch, "cut an image into overlapping patches")
    p.add_argument("image")
    p.add_argument("outdir")
    p.add_argument("--patch-size", type=int, default=256)
    p.add_argument("--overlap", type=float, default=0.1)
    p.add_argument("--format", choices=("png", "raw"), default="png")

    p = add("voronoi", cmd_voronoi, "rasterize the nearest-point partition")
    p.add_argument("points", help="CSV with header x,y")
    p.add_argument("height", type=int)
    p.add_argument("width", type=int)
    p.add_argument("output", help="16-bit PNG of cell indices")
    p.add_argument("--preview", help="optional color preview PNG")

    p = add("distmap", cmd_distmap, "clipped Euclidean distance map to the points")
    p.add_argument("points")
    p.add_argument("height", type=int)
    p.add_argument("width", type=int)
    p.add_argument("output", help="raw float map (+ JSON sidecar)")
    p.add_argument("--cap", type=float, default=20.0)

    p = add("cluster-label", cmd_cluster_label, "generate the per-pixel class map")
    p.add_argument("image")
    p.add_argument("points")
    p.add_argument("output", help="label PNG (0 background, 1 nuclei, 255 ignored)")
    p.add_argument("--preview", help="optional green/red/black preview PNG")
    p.add_argument("--cap", type=float, default=20.0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--dilation-radius", type=float, default=11.0)
    p.add_argument("--background-rule", choices=("complement", "literal"), default="complement")
    p.add_argument("--edge-width", type=int, default=2)

    p = add("hover-maps", cmd_hover_maps, "instance offset maps from a cluster label")
    p.add_argument("label", help="cluster label PNG")
    p.add_argument("points")
    p.add_argument("out_prefix", help="writes <prefix>.h.raw and <prefix>.v.raw")
    p.add_argument("--instances", help="optional 16-bit instance map PNG")
    p.add_argument("--preview", help="optional signed-colormap previews <prefix>.{h,v}.png")

    p = add("gaussian-mask", cmd_gaussian_mask, "max-combined Gaussian point mask")
    p.add_argument("points")
    p.add_argument("height", type=int)
    p.add_argument("width", type=int)
    p.add_argument("output")
    p.add_argument("--sigma", type=float, default=5.0)

    p = add("losses", cmd_losses, "evaluate the composite loss; JSON to stdout")
    p.add_argument("logits", help="raw float map (H, W, m)")
    p.add_argument("label", help="cluster label PNG (provides targets and masks)")
    p.add_argument("--hover-pred", nargs=2, metavar=("H_RAW", "V_RAW"))
    p.add_argument("--hover-target", nargs=2, metavar=("H_RAW", "V_RAW"))
    p.add_argument("--w-ce", type=float, default=1.0)
    p.add_argument("--w-dice", type=float, default=1.0)
    p.add_argument("--w-mse", type=float, default=1.0)
    p.add_argument("--w-ent", type=float, default=0.5)

    p = add("train-surrogate", cmd_train_surrogate, "train the linear pixel classifier")
    p.add_argument("image")
    p.add_argument("label", help="cluster label PNG")
    p.add_argument("output", help="classifier JSON")
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--w-ce", type=float, default=1.0)
    p.add_argument("--w-dice", type=float, default=1.0)
    p.add_argument("--w-ent", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="optional loss-trace CSV")

    p = add("detect", cmd_detect, "detect nuclei centers with a trained classifier")
    p.add_argument("classifier", help="classifier JSON")
    p.add_argument("image")
    p.add_argument("output", help="detections CSV")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--min-area", type=int, default=9)

    p = add("eval", cmd_eval, "score detections against annotations; JSON to stdout")
    p.add_argument("detections", help="CSV file or directory of CSVs")
    p.add_argument("annotations", help="CSV file or directory (matched by filename)")
    p.add_argument("--r-nuc", type=float, default=11.0)
    p.add_argument("--per-image", help="optional per-image CSV report")

    p = add("synth", cmd_synth, "generate a synthetic scene with ground truth")
    p.add_argument("outdir")
    p.add_argument("--seed", type=int, default=synth.STANDARD_SCENE.rng_seed)
    p.add_argument("--height", type=int, default=synth.STANDARD_SCENE.height)
    p.add_argument("--width", type=int, default=synth.STANDARD_SCENE.width)
    p.add_argument("--count", type=int, default=synth.STANDARD_SCENE.count)
    p.add_argument("--radius-min", type=float, default=synth.STANDARD_SCENE.radius_min)
    p.add_argument("--radius-max", type=float, default=synth.STANDARD_SCENE.radius_max)
    p.add_argument(
        "--min-separation", type=float, default=synth.STANDARD_SCENE.min_separation
    )
    p.add_argument(
        "--touching-fraction",
        type=float,
        default=synth.STANDARD_SCENE.touching_fraction,
    )
    p.add_argument("--core-level", type=float, default=synth.STANDARD_SCENE.core_level)
    p.add_argument("--edge-sigma", type=float, default=synth.STANDARD_SCENE.edge_sigma)
    p.add_argument("--noise-sigma", type=float, default=synth.STANDARD_SCENE.noise_sigma)

    p = add("run", cmd_run, "run the full pipeline from a JSON config")
    p.add_argument("config", help="pipeline config JSON")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
