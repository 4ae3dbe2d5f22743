import math

import numpy as np
import pytest

from condkit.errors import DegenerateConfiguration, EmptyCandidates, TargetTooLarge
from condkit.geometry import Pose, compose, relative_pose
from condkit.preprocess import (
    DEFAULT_SCALE_CANDIDATES,
    Intrinsics,
    center_crop,
    elevation_from_pose,
    eval_scene_setup,
    fov_from_intrinsics,
    letterbox,
    resize,
    standardize_poses,
    world_scale_grid,
)

from conftest import rand_pose


def tilted_ring(n: int = 8, tilt: float = 0.4, radius: float = 2.0) -> list[Pose]:
    # circle of inward-looking cameras in a plane tilted about the x-axis
    u = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, math.cos(tilt), math.sin(tilt)])
    offset = np.array([5.0, -2.0, 3.0])
    poses = []
    for k in range(n):
        theta = 2 * math.pi * k / n
        center = offset + radius * (math.cos(theta) * u + math.sin(theta) * v)
        poses.append(Pose.look_at(center, offset))
    return poses


class TestIntrinsics:
    def test_centered(self):
        intr = Intrinsics.centered(500.0, 480.0, 640, 480)
        assert intr.cx == 320.0 and intr.cy == 240.0

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            Intrinsics(0.0, 1.0, 0.0, 0.0, 10, 10)
        with pytest.raises(ValueError):
            Intrinsics(1.0, 1.0, 0.0, 0.0, 0, 10)


class TestCenterCrop:
    def test_square_full_crop_unchanged(self):
        intr = Intrinsics.centered(400.0, 400.0, 512, 512)
        out = center_crop(intr, 512)
        assert out == intr

    def test_landscape_to_square(self):
        intr = Intrinsics.centered(500.0, 500.0, 640, 480)
        out = center_crop(intr, 480)
        assert out.width == 480 and out.height == 480
        assert out.cx == pytest.approx(320.0 - 80.0)
        assert out.cy == pytest.approx(240.0)
        assert out.fx == intr.fx and out.fy == intr.fy

    def test_target_too_large(self):
        intr = Intrinsics.centered(500.0, 500.0, 640, 480)
        with pytest.raises(TargetTooLarge):
            center_crop(intr, 481)


class TestResize:
    def test_halving(self):
        intr = Intrinsics.centered(500.0, 400.0, 480, 480)
        out = resize(intr, 240, 240)
        assert out.fx == pytest.approx(250.0)
        assert out.fy == pytest.approx(200.0)
        assert out.cx == pytest.approx(120.0)

    def test_fov_preserved_by_uniform_resize(self):
        intr = Intrinsics.centered(300.0, 300.0, 480, 480)
        out = resize(intr, 256, 256)
        assert fov_from_intrinsics(out) == pytest.approx(fov_from_intrinsics(intr))


class TestLetterbox:
    def test_matching_aspect_no_padding(self):
        intr = Intrinsics.centered(500.0, 500.0, 640, 480)
        out, (left, top) = letterbox(intr, 400, 300)
        assert (left, top) == (0, 0)
        assert out.width == 400 and out.height == 300
        assert out.fx == pytest.approx(500.0 * 400 / 640)

    def test_square_into_landscape_pads_left(self):
        intr = Intrinsics.centered(500.0, 500.0, 480, 480)
        out, (left, top) = letterbox(intr, 400, 300)
        assert (left, top) == (50, 0)
        assert out.width == 400 and out.height == 300
        assert out.cx == pytest.approx(150.0 + 50.0)


class TestFov:
    def test_ninety_degrees(self):
        intr = Intrinsics.centered(256.0, 256.0, 512, 512)
        assert fov_from_intrinsics(intr) == pytest.approx(math.pi / 2)

    def test_long_focal(self):
        intr = Intrinsics.centered(512.0, 512.0, 512, 512)
        assert fov_from_intrinsics(intr) == pytest.approx(2.0 * math.atan(0.5))

    def test_monotone_in_focal(self):
        fovs = [
            fov_from_intrinsics(Intrinsics.centered(fx, fx, 512, 512))
            for fx in (200.0, 400.0, 800.0)
        ]
        assert fovs[0] > fovs[1] > fovs[2]


class TestElevation:
    def test_straight_down(self):
        p = Pose.look_at(np.array([0.0, 0.0, 2.0]), np.zeros(3))
        assert elevation_from_pose(p) == pytest.approx(-math.pi / 2)

    def test_horizontal(self):
        p = Pose.look_at(np.array([3.0, 0.0, 0.0]), np.zeros(3))
        assert elevation_from_pose(p) == pytest.approx(0.0, abs=1e-12)

    def test_straight_up(self):
        p = Pose.look_at(np.array([0.0, 0.0, -2.0]), np.zeros(3))
        assert elevation_from_pose(p) == pytest.approx(math.pi / 2)

    def test_matches_forward_axis_geometry(self):
        # oracle: asin of the forward axis' vertical component
        rng = np.random.default_rng(60)
        for _ in range(30):
            p = rand_pose(rng)
            want = math.asin(float(np.clip(p.forward_axis[2], -1, 1)))
            assert elevation_from_pose(p) == pytest.approx(want, abs=1e-12)

    def test_rejects_non_unit_up(self):
        with pytest.raises(ValueError):
            elevation_from_pose(Pose.identity(), np.array([0.0, 0.0, 2.0]))


class TestWorldScaleGrid:
    def test_default_candidates(self):
        assert len(DEFAULT_SCALE_CANDIDATES) == 13
        assert DEFAULT_SCALE_CANDIDATES[0] == 0.3
        assert DEFAULT_SCALE_CANDIDATES[-1] == 1.5
        steps = np.diff(DEFAULT_SCALE_CANDIDATES)
        assert np.allclose(steps, 0.1)

    def test_picks_minimizer(self):
        assert world_scale_grid(lambda lam: abs(lam - 0.7)) == 0.7

    def test_tie_goes_to_smaller(self):
        assert world_scale_grid(lambda lam: 1.0) == 0.3
        # symmetric scores around 0.95 tie between 0.9 and 1.0
        assert world_scale_grid(lambda lam: abs(lam - 0.95)) == 0.9

    def test_custom_candidates(self):
        assert world_scale_grid(lambda lam: (lam - 3.0) ** 2, [1.0, 2.5, 4.0]) == 2.5

    def test_candidate_order_irrelevant(self):
        fn = lambda lam: abs(lam - 1.1)
        assert world_scale_grid(fn, [1.5, 0.3, 1.1]) == 1.1
        assert world_scale_grid(fn, [1.1, 1.5, 0.3]) == 1.1

    def test_empty_candidates(self):
        with pytest.raises(EmptyCandidates):
            world_scale_grid(lambda lam: lam, [])

    def test_calls_each_candidate_once(self):
        seen = []
        world_scale_grid(lambda lam: seen.append(lam) or 0.0)
        assert sorted(seen) == list(DEFAULT_SCALE_CANDIDATES)


class TestStandardizePoses:
    def test_tilted_ring_becomes_planar(self):
        fixed = standardize_poses(tilted_ring())
        centers = np.stack([p.camera_center for p in fixed])
        assert np.max(np.abs(centers[:, 2])) < 1e-6

    def test_centroid_at_origin(self):
        fixed = standardize_poses(tilted_ring(n=7))
        centers = np.stack([p.camera_center for p in fixed])
        assert np.max(np.abs(centers.mean(axis=0))) < 1e-9

    def test_relative_poses_preserved(self):
        poses = tilted_ring(n=6)
        fixed = standardize_poses(poses)
        for i in (0, 2):
            for j in (1, 4):
                before = relative_pose(poses[i], poses[j]).matrix
                after = relative_pose(fixed[i], fixed[j]).matrix
                assert np.max(np.abs(before - after)) < 1e-9

    def test_spread_ordered_across_axes(self):
        # anisotropic cloud: most spread along some direction, least along
        # another; after standardization variances must come out descending
        rng = np.random.default_rng(61)
        raw = rng.normal(size=(40, 3)) * np.array([5.0, 2.0, 0.3])
        tilt = rand_pose(rng, 4.0)
        poses = [
            compose(tilt, Pose.look_at(c, np.array([0.0, 0.0, 50.0])))
            for c in raw
        ]
        fixed = standardize_poses(poses)
        centers = np.stack([p.camera_center for p in fixed])
        var = centers.var(axis=0)
        assert var[0] >= var[1] >= var[2]

    def test_mean_camera_up_points_up(self):
        for tilt in (0.2, -0.5, 1.0):
            fixed = standardize_poses(tilted_ring(tilt=tilt))
            mean_up = np.mean([-p.rotation[:, 1] for p in fixed], axis=0)
            assert mean_up[2] > 0

    def test_rigid_only_distances_preserved(self):
        poses = tilted_ring(n=5)
        fixed = standardize_poses(poses)
        before = np.stack([p.camera_center for p in poses])
        after = np.stack([p.camera_center for p in fixed])
        d_before = np.linalg.norm(before[:, None] - before[None, :], axis=-1)
        d_after = np.linalg.norm(after[:, None] - after[None, :], axis=-1)
        assert np.max(np.abs(d_before - d_after)) < 1e-9

    def test_collinear_rejected(self):
        poses = [
            Pose.look_at(np.array([float(k), 0.0, 1.0]), np.zeros(3))
            for k in range(5)
        ]
        with pytest.raises(DegenerateConfiguration):
            standardize_poses(poses)

    def test_too_few_cameras(self):
        with pytest.raises(DegenerateConfiguration):
            standardize_poses([Pose.identity(), rand_pose(np.random.default_rng(62))])


class TestEvalSceneSetup:
    def test_all_scenes_present(self):
        setup = eval_scene_setup()
        assert sorted(setup) == [
            "bicycle",
            "bonsai",
            "counter",
            "garden",
            "kitchen",
            "room",
            "stump",
        ]

    def test_known_entries(self):
        setup = eval_scene_setup()
        assert setup["bicycle"] == {"input_view": 98, "content_scale": 0.9}
        assert setup["room"] == {"input_view": 151, "content_scale": 2.0}
        assert setup["stump"]["input_view"] == 34

    def test_content_scale_mostly_default(self):
        setup = eval_scene_setup()
        scales = [v["content_scale"] for k, v in sorted(setup.items())]
        assert scales.count(0.9) == 6
