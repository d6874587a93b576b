"""The masked composite loss, piece by piece.

Evaluates cross-entropy + dice on labeled pixels, mean-squared error on the
offset maps, and entropy on ignored pixels, for a fake prediction against a
weak label.  Then demonstrates the masking contract: with the entropy weight
at zero, nothing you do to ignored pixels changes the loss.
"""

from pathlib import Path

import numpy as np

from weaklab.hover import hover_maps, label_instances
from weaklab.losses import (
    LossWeights,
    class_target_from_label,
    composite_loss,
    region_mask_from_label,
)
from weaklab.synth import SceneConfig, generate_scene
from weaklab.weak_labels import make_cluster_label

out = Path(__file__).parent / "output"
out.mkdir(parents=True, exist_ok=True)

image, gt = generate_scene(SceneConfig(height=128, width=128, count=6, rng_seed=8))
label = make_cluster_label(image, gt.points)
mask = region_mask_from_label(label)
target = class_target_from_label(label)
print(f"labeled {mask.labeled.sum()} px, ignored {mask.ignored.sum()} px")

# A lazy "prediction": logits that lean toward nuclei wherever the image is
# bright.  Offsets are predicted as all zeros.
rng = np.random.default_rng(0)
logits = np.stack([1.0 - image, image], axis=-1) * 4.0
logits += rng.normal(0, 0.1, logits.shape)
hover_target = hover_maps(label_instances(label, gt.points))
hover_pred = np.zeros_like(hover_target)

weights = LossWeights(ce=1.0, dice=1.0, mse=1.0, entropy=0.5)
breakdown, grad_logits, grad_hover = composite_loss(
    logits, target, mask, hover_pred=hover_pred, hover_target=hover_target,
    weights=weights,
)
print("loss breakdown:")
for name in ("ce", "dice", "mse", "entropy", "total"):
    print(f"  {name:>8}: {getattr(breakdown, name):.4f}")
print(f"gradient shapes: logits {grad_logits.shape}, offsets {grad_hover.shape}")

# Masking contract: zero the entropy weight, then vandalize every ignored
# pixel's prediction.  The total must not move at all.
no_entropy = LossWeights(ce=1.0, dice=1.0, mse=1.0, entropy=0.0)
base, _, _ = composite_loss(
    logits, target, mask, hover_pred=hover_pred, hover_target=hover_target,
    weights=no_entropy,
)
vandalized = logits.copy()
vandalized[mask.ignored] = rng.normal(0, 100, (mask.ignored.sum(), 2))
after, _, _ = composite_loss(
    vandalized, target, mask, hover_pred=hover_pred, hover_target=hover_target,
    weights=no_entropy,
)
print(f"w_ent=0: total before {base.total:.10f}, after vandalizing ignored "
      f"pixels {after.total:.10f} (difference {abs(after.total - base.total):.1e})")
