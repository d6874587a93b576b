"""Detection scoring: radius matching of detected centers to annotations.

A detection within ``r_nuc`` pixels of an annotation can count as a true
positive; matching is one-to-one and greedy by ascending distance, so the
closest detection claims an annotation and the rest become false positives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointSet


@dataclass(frozen=True)
class MatchConfig:
    """Matching radius in pixels (a rough average nuclear radius)."""

    r_nuc: float = 11.0

    def __post_init__(self):
        if self.r_nuc <= 0:
            raise ValueError("r_nuc must be > 0")


@dataclass(frozen=True)
class MatchReport:
    tp: int
    fp: int
    fn: int
    pairs: tuple[tuple[int, int, float], ...]  # (detection idx, annotation idx, distance)


def match_detections(
    detections: PointSet, annotations: PointSet, cfg: MatchConfig = MatchConfig()
) -> MatchReport:
    """Greedy one-to-one matching by ascending pair distance.

    Candidate pairs are those within ``r_nuc``; they are visited sorted by
    distance (ties: annotation index, then detection index) and accepted when
    both endpoints are still free.  Unmatched detections are FP, unmatched
    annotations FN.
    """
    n_det, n_ann = len(detections), len(annotations)
    if n_det == 0 or n_ann == 0:
        return MatchReport(tp=0, fp=n_det, fn=n_ann, pairs=())
    diff = detections.xy[:, None, :] - annotations.xy[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))  # (D, A)
    di, ai = np.nonzero(dist <= cfg.r_nuc)
    order = np.lexsort((di, ai, dist[di, ai]))
    det_free = np.ones(n_det, dtype=bool)
    ann_free = np.ones(n_ann, dtype=bool)
    pairs = []
    for k in order:
        d, a = int(di[k]), int(ai[k])
        if det_free[d] and ann_free[a]:
            det_free[d] = False
            ann_free[a] = False
            pairs.append((d, a, float(dist[d, a])))
    tp = len(pairs)
    return MatchReport(tp=tp, fp=n_det - tp, fn=n_ann - tp, pairs=tuple(pairs))


def prf1(report: MatchReport) -> tuple[float, float, float]:
    """Precision, recall, F1 = 2TP / (2TP + FP + FN); zero denominators give 0."""
    tp, fp, fn = report.tp, report.fp, report.fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
    return precision, recall, f1


def aggregate(reports) -> tuple[float, float, float]:
    """Micro-average: sum TP/FP/FN over reports, then compute P/R/F1 once."""
    reports = list(reports)
    if not reports:
        raise ValueError("at least one report is required")
    summed = MatchReport(
        tp=sum(r.tp for r in reports),
        fp=sum(r.fp for r in reports),
        fn=sum(r.fn for r in reports),
        pairs=(),
    )
    return prf1(summed)
