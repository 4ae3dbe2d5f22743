"""Regenerate the committed fixture shards under tests/fixtures/.

Deterministic: fixed RNG seed, fixed tar metadata, float32-exact depths.
Run from the repo root:

    python3 scripts/gen_fixture_shard.py
"""

import math
from pathlib import Path

import numpy as np

from condkit.dataset import SceneRecord, View, write_shard
from condkit.depth import DepthMap
from condkit.geometry import Pose

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SEED = 20240917


def _depth(rng, h, w, hole_fraction=0.0):
    # snap to float32 so shard round-trips are bit-exact
    values = (0.5 + 2.5 * rng.random((h, w))).astype(np.float32).astype(np.float64)
    if hole_fraction == 0.0:
        return DepthMap.full(values)
    mask = rng.random((h, w)) >= hole_fraction
    if not mask.any():
        mask[0, 0] = True
    return DepthMap(np.where(mask, values, 0.0), mask)


def _scene(rng, scene_id, n_views, fov, hole_fractions):
    views = []
    for v in range(n_views):
        azimuth = 2.0 * math.pi * v / n_views + rng.normal(0.0, 0.05)
        elevation = rng.uniform(-0.3, 0.5)
        radius = rng.uniform(1.5, 2.5)
        position = np.array(
            [
                radius * math.cos(elevation) * math.cos(azimuth),
                radius * math.cos(elevation) * math.sin(azimuth),
                radius * math.sin(elevation),
            ]
        )
        pose = Pose.look_at(position, np.zeros(3))
        image = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
        views.append(View(image, _depth(rng, 12, 16, hole_fractions[v]), pose))
    return SceneRecord(scene_id, tuple(views), fov, source_dataset="fixture")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    shard_a = [
        _scene(rng, "fixture-000", 4, math.radians(50.0), [0.0] * 4),
        _scene(rng, "fixture-001", 3, math.radians(45.0), [0.0, 0.3, 0.2]),
        _scene(rng, "fixture-002", 5, math.radians(60.0), [0.0] * 5),
    ]
    shard_b = [
        _scene(rng, "fixture-100", 4, math.radians(40.0), [0.0] * 4),
        _scene(rng, "fixture-101", 2, math.radians(55.0), [0.0, 0.1]),
    ]
    # single dense 2-view scene, used by the one-pair stream checks
    shard_c = [_scene(rng, "fixture-200", 2, math.radians(50.0), [0.0] * 2)]
    for name, scenes in (
        ("fixture-a.tar", shard_a),
        ("fixture-b.tar", shard_b),
        ("fixture-c.tar", shard_c),
    ):
        shard = write_shard(scenes, FIXTURES / name)
        print(f"{shard.path}: {shard.manifest['scene_count']} scenes")


if __name__ == "__main__":
    main()
