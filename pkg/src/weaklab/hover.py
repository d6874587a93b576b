"""Instance maps and horizontal/vertical offset targets.

Nuclei-class pixels are grouped into 4-connected components, tied back to the
annotation points they contain, and turned into per-instance horizontal and
vertical offset maps: each instance pixel carries its signed offset from the
instance's center of mass, normalized per instance to [-1, 1].
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .fileio import CLS_NUCLEI
from .geometry import PointSet

# 4-connectivity for everything instance-shaped.
STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def label_instances(label: np.ndarray, points: PointSet) -> np.ndarray:
    """4-connected nuclei components -> instance ids 1..N; 0 elsewhere.

    Components with no annotation point are dropped.  A component holding
    k >= 2 points is split by nearest-point assignment among those points
    (ties to the lower point index).  Ids are assigned in component order,
    then point order, so the result is deterministic.
    """
    arr = np.asarray(label)
    mask = arr == CLS_NUCLEI
    comp, n_comp = ndimage.label(mask, structure=STRUCTURE_4)
    out = np.zeros(arr.shape, dtype=np.int32)
    if n_comp == 0 or len(points) == 0:
        return out
    rows, cols = points.pixel_rc(*arr.shape)
    comp_of_point = comp[rows, cols]
    next_id = 1
    for cid in range(1, n_comp + 1):
        members = np.flatnonzero(comp_of_point == cid)
        if members.size == 0:
            continue
        rr, cc = np.nonzero(comp == cid)
        if members.size == 1:
            out[rr, cc] = next_id
            next_id += 1
            continue
        # split by nearest owning point; argmin ties go to the lower index
        px = points.xy[members, 0]
        py = points.xy[members, 1]
        d2 = (cc[:, None] - px[None, :]) ** 2 + (rr[:, None] - py[None, :]) ** 2
        out[rr, cc] = next_id + d2.argmin(axis=1)
        next_id += members.size
    return out


def hover_maps(instances: np.ndarray) -> np.ndarray:
    """(H, W, 2) float map: [..., 0] horizontal, [..., 1] vertical offsets.

    Per instance, offsets are taken from the unweighted pixel centroid and
    divided by the instance's maximum absolute offset along that axis; an
    axis one pixel wide maps to 0.  Non-instance pixels are 0.
    """
    inst = np.asarray(instances)
    out = np.zeros(inst.shape + (2,), dtype=np.float64)
    for i in np.unique(inst):
        if i == 0:
            continue
        rr, cc = np.nonzero(inst == i)
        hx = cc - cc.mean()
        vy = rr - rr.mean()
        hmax = np.abs(hx).max()
        vmax = np.abs(vy).max()
        out[rr, cc, 0] = hx / hmax if hmax > 0 else 0.0
        out[rr, cc, 1] = vy / vmax if vmax > 0 else 0.0
    return out
