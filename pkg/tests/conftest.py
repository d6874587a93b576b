"""Shared fixtures: the standard benchmark scene and its cluster label.

Both are session-scoped because label generation runs k-means over a 512x512
feature map; the acceptance suite re-times its own runs where the criterion
demands it.
"""

from __future__ import annotations

import pytest

from weaklab import STANDARD_SCENE, generate_scene, make_cluster_label


@pytest.fixture(scope="session")
def benchmark_scene():
    return generate_scene(STANDARD_SCENE)


@pytest.fixture(scope="session")
def benchmark_label(benchmark_scene):
    image, gt = benchmark_scene
    return make_cluster_label(image, gt.points)
