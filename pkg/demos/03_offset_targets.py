"""Instance offset maps (the touching-nuclei separation signal).

Takes the weak label from the clustering recipe, splits it into per-nucleus
instances using the annotation points, and computes horizontal/vertical
offset-from-centroid maps normalized to [-1, 1] per instance.  Where two
nuclei touch, the offsets jump sign across the boundary — that gradient is
what a separation head would learn from.
"""

from pathlib import Path

import numpy as np

from weaklab.fileio import save_index_preview, save_signed_preview
from weaklab.hover import hover_maps, label_instances
from weaklab.synth import SceneConfig, generate_scene
from weaklab.weak_labels import make_cluster_label

out = Path(__file__).parent / "output" / "03_offset_targets"
out.mkdir(parents=True, exist_ok=True)

cfg = SceneConfig(height=256, width=256, count=18, touching_fraction=0.3, rng_seed=6)
image, gt = generate_scene(cfg)
label = make_cluster_label(image, gt.points)

# Nuclei-labeled components that contain a point become instances; components
# holding two points are split by nearest-point assignment.
instances = label_instances(label, gt.points)
n = instances.max()
print(f"{n} instances from {len(gt.points)} points "
      f"({len(gt.touching_pairs)} touching pairs in the scene)")
save_index_preview(out / "instances.png", instances)

hover = hover_maps(instances)
h, v = hover[:, :, 0], hover[:, :, 1]
print(f"h range [{h.min():+.2f}, {h.max():+.2f}], "
      f"v range [{v.min():+.2f}, {v.max():+.2f}]")

# Per-instance, the offsets are zero-mean and span the full [-1, 1] width.
ids = np.arange(1, n + 1)
for i in ids[:3]:
    mask = instances == i
    print(f"  instance {i}: {mask.sum()} px, "
          f"mean h {h[mask].mean():+.1e}, mean v {v[mask].mean():+.1e}")

save_signed_preview(out / "hover_h.png", h)
save_signed_preview(out / "hover_v.png", v)
print(f"artifacts in {out} (blue=-1, white=0, red=+1)")
