"""Shared builders for random poses, depth maps, and synthetic scenes."""

import math
from pathlib import Path

import numpy as np
import pytest

from condkit.dataset import SceneRecord, View, write_shard
from condkit.depth import DepthMap
from condkit.geometry import Pose

FIXTURES = Path(__file__).parent / "fixtures"


def rand_rotation(rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def rand_pose(rng: np.random.Generator, translation_scale: float = 1.0) -> Pose:
    return Pose(rand_rotation(rng), rng.normal(size=3) * translation_scale)


def const_depth(value: float, h: int = 4, w: int = 4) -> DepthMap:
    return DepthMap.full(np.full((h, w), value))


def rand_depth(
    rng: np.random.Generator,
    h: int = 6,
    w: int = 8,
    lo: float = 0.5,
    hi: float = 3.0,
    hole_fraction: float = 0.0,
) -> DepthMap:
    values = lo + (hi - lo) * rng.random((h, w))
    if hole_fraction == 0.0:
        return DepthMap.full(values)
    mask = rng.random((h, w)) >= hole_fraction
    if not mask.any():
        mask[0, 0] = True
    return DepthMap(np.where(mask, values, 0.0), mask)


def ring_pose(azimuth: float, elevation: float = 0.2, radius: float = 2.0) -> Pose:
    position = np.array(
        [
            radius * math.cos(elevation) * math.cos(azimuth),
            radius * math.cos(elevation) * math.sin(azimuth),
            radius * math.sin(elevation),
        ]
    )
    return Pose.look_at(position, np.zeros(3))


def make_scene(
    rng: np.random.Generator,
    scene_id: str,
    n_views: int = 3,
    image_hw: tuple = (8, 10),
    fov: float = math.radians(50.0),
) -> SceneRecord:
    h, w = image_hw
    views = []
    for v in range(n_views):
        azimuth = 2.0 * math.pi * v / n_views + rng.normal(0.0, 0.1)
        pose = ring_pose(azimuth, rng.uniform(-0.2, 0.4), rng.uniform(1.5, 2.5))
        image = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        depth = DepthMap.full(
            (0.5 + 2.0 * rng.random((h, w))).astype(np.float32).astype(np.float64)
        )
        views.append(View(image, depth, pose))
    return SceneRecord(scene_id, tuple(views), fov)


@pytest.fixture(scope="session")
def tmp_shard(tmp_path_factory) -> Path:
    """A small freshly written shard: 6 scenes of 3-4 views each."""
    rng = np.random.default_rng(11)
    scenes = [
        make_scene(rng, f"scene-{k:03d}", n_views=3 + k % 2) for k in range(6)
    ]
    path = tmp_path_factory.mktemp("shards") / "small-000.tar"
    write_shard(scenes, path)
    return path
