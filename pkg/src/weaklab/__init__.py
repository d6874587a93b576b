"""Weak nuclei labels from point annotations.

From a single (x, y) click per nucleus, this toolkit derives dense training
targets — per-pixel {nuclei, background, ignored} cluster labels, instance
maps, horizontal/vertical offset targets, Gaussian point masks — plus the
masked losses (with entropy minimization on the ignored regions), a linear
surrogate classifier to exercise them, and radius-based detection metrics.
"""

__version__ = "0.1.0"

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
from .hover import hover_maps, label_instances
from .imaging import (
    PatchGrid,
    apply_roi,
    extract_patches,
    gaussian_mask,
    mip,
    stitch,
)
from .losses import (
    LossBreakdown,
    LossWeights,
    RegionMask,
    composite_loss,
    cross_entropy,
    dice_loss,
    entropy_min,
    mse_loss,
    softmax,
)
from .metrics import MatchConfig, MatchReport, aggregate, match_detections, prf1
from .pipeline import PipelineConfig, run_pipeline
from .surrogate import (
    PixelClassifier,
    TrainConfig,
    detect_centers,
    featurize,
    predict,
    train,
)
from .synth import STANDARD_SCENE, GroundTruth, SceneConfig, generate_scene, ideal_detections
from .weak_labels import (
    KMeansResult,
    LabelConfig,
    assign_classes,
    build_feature_map,
    kmeans,
    make_cluster_label,
    refine_with_voronoi,
)

__all__ = [
    "__version__",
    "CLS_BACKGROUND",
    "CLS_IGNORED",
    "CLS_NUCLEI",
    "PointSet",
    "VoronoiLabel",
    "clip_distance",
    "dilate_points",
    "distance_map",
    "rasterize_voronoi",
    "voronoi_edges",
    "hover_maps",
    "label_instances",
    "PatchGrid",
    "apply_roi",
    "extract_patches",
    "gaussian_mask",
    "mip",
    "stitch",
    "LossBreakdown",
    "LossWeights",
    "RegionMask",
    "composite_loss",
    "cross_entropy",
    "dice_loss",
    "entropy_min",
    "mse_loss",
    "softmax",
    "MatchConfig",
    "MatchReport",
    "aggregate",
    "match_detections",
    "prf1",
    "PipelineConfig",
    "run_pipeline",
    "PixelClassifier",
    "TrainConfig",
    "detect_centers",
    "featurize",
    "predict",
    "train",
    "STANDARD_SCENE",
    "GroundTruth",
    "SceneConfig",
    "generate_scene",
    "ideal_detections",
    "KMeansResult",
    "LabelConfig",
    "assign_classes",
    "build_feature_map",
    "kmeans",
    "make_cluster_label",
    "refine_with_voronoi",
]
