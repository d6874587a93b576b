"""Loss kernels with region masking and hand-derived logit gradients.

Supervised terms (cross-entropy, dice, offset-map regression) see only
labeled pixels; the entropy term sees only ignored pixels, pushing the
classifier toward confident predictions where no label exists.  Every kernel
returns ``(value, gradient)`` where the gradient is taken with respect to the
pre-softmax logits (regression: with respect to the prediction), so a plain
gradient-descent trainer needs no autodiff.

Reductions are means over the pixels of the kernel's own region, which keeps
the loss weights comparable across patch sizes.  All kernels accept arrays of
any leading shape ``(..., m)``; masks have the matching leading shape.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fileio import CLS_IGNORED

# Probability clamp for log paths; keeps gradients finite.
PROB_CLAMP = 1e-12
DICE_SMOOTH = 1e-3
FOREGROUND_CLASS = 1  # nuclei


@dataclass(frozen=True)
class RegionMask:
    """Disjoint labeled / ignored pixel sets of one training crop."""

    labeled: np.ndarray
    ignored: np.ndarray

    def __post_init__(self):
        labeled = np.asarray(self.labeled, dtype=bool)
        ignored = np.asarray(self.ignored, dtype=bool)
        if labeled.shape != ignored.shape:
            raise ValueError("labeled and ignored masks must share a shape")
        if np.any(labeled & ignored):
            raise ValueError("labeled and ignored masks overlap")
        object.__setattr__(self, "labeled", labeled)
        object.__setattr__(self, "ignored", ignored)


@dataclass(frozen=True)
class LossWeights:
    ce: float = 1.0
    dice: float = 1.0
    mse: float = 1.0
    entropy: float = 0.5

    def __post_init__(self):
        for name in ("ce", "dice", "mse", "entropy"):
            if getattr(self, name) < 0:
                raise ValueError(f"loss weight {name} must be >= 0")

    def astuple(self) -> tuple[float, float, float, float]:
        return (self.ce, self.dice, self.mse, self.entropy)


@dataclass(frozen=True)
class LossBreakdown:
    ce: float
    dice: float
    mse: float
    entropy: float
    total: float
    weights: LossWeights


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def region_mask_from_label(label: np.ndarray) -> RegionMask:
    """Labeled = background + nuclei pixels, ignored = the 255-coded class."""
    arr = np.asarray(label)
    ignored = arr == CLS_IGNORED
    return RegionMask(labeled=~ignored, ignored=ignored)


def class_target_from_label(label: np.ndarray) -> np.ndarray:
    """Class indices for the supervised losses; ignored pixels read as 0."""
    arr = np.asarray(label)
    return np.where(arr == CLS_IGNORED, 0, arr).astype(np.int64)


def _empty_region(probs: np.ndarray, what: str) -> tuple[float, np.ndarray]:
    warnings.warn(f"no {what} pixels; loss defined as 0 with zero gradient")
    return 0.0, np.zeros_like(probs)


def cross_entropy(
    probs: np.ndarray, target: np.ndarray, mask: RegionMask
) -> tuple[float, np.ndarray]:
    """Mean -log p[target] over labeled pixels; gradient (p - onehot)/N."""
    p = np.asarray(probs, dtype=np.float64)
    m = p.shape[-1]
    sel = mask.labeled
    t = np.asarray(target)[sel]
    if np.any((t < 0) | (t >= m)):
        raise ValueError(f"target classes must lie in [0, {m})")
    if t.size == 0:
        return _empty_region(p, "labeled")
    rows = p[sel]
    idx = np.arange(len(rows))
    value = float(-np.log(np.clip(rows[idx, t], PROB_CLAMP, 1.0)).mean())
    g = rows.copy()
    g[idx, t] -= 1.0
    grad = np.zeros_like(p)
    grad[sel] = g / len(rows)
    return value, grad


def dice_loss(
    probs: np.ndarray,
    target: np.ndarray,
    mask: RegionMask,
    smooth: float = DICE_SMOOTH,
    fg_class: int = FOREGROUND_CLASS,
) -> tuple[float, np.ndarray]:
    """Soft dice loss of the foreground class over labeled pixels.

    L = 1 - (2*sum(p*t) + s) / (sum(p) + sum(t) + s), with the gradient
    chained through the softmax to the logits.
    """
    p = np.asarray(probs, dtype=np.float64)
    sel = mask.labeled
    if not np.any(sel):
        return _empty_region(p, "labeled")
    rows = p[sel]  # (N, m)
    p_fg = rows[:, fg_class]
    t_fg = (np.asarray(target)[sel] == fg_class).astype(np.float64)
    inter = float((p_fg * t_fg).sum())
    denom = float(p_fg.sum() + t_fg.sum() + smooth)
    value = 1.0 - (2.0 * inter + smooth) / denom
    # dL/dp_fg, then dp_fg/dz_j = p_fg (delta_fg,j - p_j)
    dldp = -(2.0 * t_fg * denom - (2.0 * inter + smooth)) / (denom * denom)
    onehot = np.zeros(rows.shape[1])
    onehot[fg_class] = 1.0
    g = (dldp * p_fg)[:, None] * (onehot[None, :] - rows)
    grad = np.zeros_like(p)
    grad[sel] = g
    return value, grad


def mse_loss(
    pred: np.ndarray, target: np.ndarray, mask: RegionMask
) -> tuple[float, np.ndarray]:
    """Mean squared error over labeled pixels and all prediction channels."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"prediction {p.shape} and target {t.shape} disagree")
    sel = mask.labeled
    if not np.any(sel):
        return _empty_region(p, "labeled")
    diff = p[sel] - t[sel]
    value = float((diff * diff).mean())
    grad = np.zeros_like(p)
    grad[sel] = 2.0 * diff / diff.size
    return value, grad


def entropy_min(probs: np.ndarray, mask: RegionMask) -> tuple[float, np.ndarray]:
    """Mean Shannon entropy H(p) = -sum_i p_i log p_i over ignored pixels.

    The 0*log(0) = 0 convention applies; the gradient with respect to the
    logits is -p_j (log p_j + H) per pixel, divided by the pixel count.
    """
    p = np.asarray(probs, dtype=np.float64)
    sel = mask.ignored
    if not np.any(sel):
        return 0.0, np.zeros_like(p)
    rows = p[sel]
    logp = np.log(np.clip(rows, PROB_CLAMP, 1.0))
    h = -(rows * logp).sum(axis=1)
    value = float(h.mean())
    grad = np.zeros_like(p)
    grad[sel] = -(rows * (logp + h[:, None])) / len(rows)
    return value, grad


def composite_loss(
    logits: np.ndarray,
    class_target: np.ndarray,
    mask: RegionMask,
    hover_pred: np.ndarray | None = None,
    hover_target: np.ndarray | None = None,
    weights: LossWeights = LossWeights(),
) -> tuple[LossBreakdown, np.ndarray, np.ndarray | None]:
    """Weighted sum of the four kernels; returns (breakdown, dL/dlogits, dL/dhover).

    Supervised terms run on labeled pixels, entropy on ignored pixels; the
    regression term is skipped when no offset prediction is supplied.  The
    total and its gradients are linear in the weights.
    """
    probs = softmax(logits)
    ce, g_ce = cross_entropy(probs, class_target, mask)
    dice, g_dice = dice_loss(probs, class_target, mask)
    ent, g_ent = entropy_min(probs, mask)
    if hover_pred is None:
        mse, grad_hover = 0.0, None
    else:
        if hover_target is None:
            raise ValueError("hover_pred given without hover_target")
        mse, g_mse = mse_loss(hover_pred, hover_target, mask)
        grad_hover = weights.mse * g_mse
    total = (
        weights.ce * ce + weights.dice * dice + weights.mse * mse + weights.entropy * ent
    )
    grad_logits = weights.ce * g_ce + weights.dice * g_dice + weights.entropy * g_ent
    breakdown = LossBreakdown(
        ce=ce, dice=dice, mse=mse, entropy=ent, total=total, weights=weights
    )
    return breakdown, grad_logits, grad_hover
