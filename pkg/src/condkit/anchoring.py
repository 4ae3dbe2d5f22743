"""Distillation planning with anchored guidance.

Score-distillation against a single input view tends to collapse scene
content opposite the input camera. The planner here counters that by first
sampling k extra "anchor" views at azimuths evenly spaced around the scene,
then, per optimization step, guiding from either the input view or the
anchor nearest the target camera (a fair coin by default). Anchor guidance
is depth-gated so unconverged foreground does not receive gradients, the
maximum noise level anneals to a small end value (more slowly opposite the
input), and target cameras are drawn from an azimuth window that widens
linearly to the full circle.

Everything here is decision logic: the diffusion model itself stays behind
the GuidanceModel interface, and distill_plan emits a dry-run schedule an
external trainer consumes. No rendering, scoring, or backprop happens
in-repo; a deterministic mock model makes the planner testable end to end.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .conditioning import ConditioningVector, SceneView, m_6dof_viewer
from .depth import DepthMap, VIEWER_SCALE_HEURISTIC_DEFAULT
from .errors import (
    ConfigError,
    GuidanceFailure,
    StepOutOfRange,
    UnfilledPlan,
)
from .geometry import Pose, geodesic_distance, to_spherical, wrap_angle

PLAN_FORMAT = "condkit-plan/1"


class SourceKind(enum.Enum):
    INPUT_VIEW = "input_view"
    ANCHOR = "anchor"


@dataclass(frozen=True)
class InputView:
    """The single real observation driving distillation."""

    image: np.ndarray
    pose: Pose
    fov: float
    viewer_scale: float = VIEWER_SCALE_HEURISTIC_DEFAULT


@dataclass
class Anchor:
    azimuth: float
    pose: Pose
    image: np.ndarray | None = None  # filled by sample_anchors


@dataclass(frozen=True)
class GuidanceSource:
    kind: SourceKind
    image: np.ndarray
    pose: Pose
    conditioning: ConditioningVector
    index: int  # anchor index, or -1 for the input view


@dataclass
class AnchorPlan:
    anchors: list[Anchor]
    gating_threshold: float = 1.0
    anchor_probability: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.gating_threshold > 0:
            raise ValueError(f"gating threshold must be positive, got {self.gating_threshold}")
        if not 0.0 <= self.anchor_probability <= 1.0:
            raise ValueError(
                f"anchor probability must be in [0, 1], got {self.anchor_probability}"
            )
        wrapped = [wrap_angle(a.azimuth) for a in self.anchors]
        for i, a in enumerate(wrapped):
            for b in wrapped[i + 1 :]:
                if math.isclose(a, b, rel_tol=0, abs_tol=1e-12):
                    raise ValueError("anchor azimuths must be distinct modulo 2 pi")

    @property
    def filled(self) -> bool:
        return all(a.image is not None for a in self.anchors)


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step cap on diffusion noise, annealed toward a small end value."""

    total_steps: int
    max_noise_start: float
    max_noise_end: float
    anisotropy: Callable[[float], float]

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0.0 <= self.max_noise_end <= self.max_noise_start <= 1.0:
            raise ValueError(
                "need 0 <= max_noise_end <= max_noise_start <= 1, got "
                f"({self.max_noise_start}, {self.max_noise_end})"
            )
        if not math.isclose(self.anisotropy(0.0), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("anisotropy(0) must equal 1")

    @classmethod
    def cosine_anisotropy(
        cls,
        total_steps: int,
        max_noise_start: float,
        max_noise_end: float,
        beta: float = 1.0,
    ) -> NoiseSchedule:
        """Multiplier 1 + beta (1 - cos offset) / 2: x1 facing the input,
        x(1 + beta) directly opposite."""
        if beta < 0:
            raise ValueError(f"beta must be >= 0, got {beta}")

        def anisotropy(offset: float) -> float:
            return 1.0 + beta * (1.0 - math.cos(offset)) / 2.0

        return cls(total_steps, max_noise_start, max_noise_end, anisotropy)


class GuidanceModel(Protocol):
    """View-synthesis diffusion backend; implementations are seeded and
    deterministic."""

    def sample(
        self,
        input_image: np.ndarray,
        conditioning: ConditioningVector,
        steps: int,
        guidance_scale: float,
    ) -> np.ndarray: ...

    def score(
        self,
        noisy_render: np.ndarray,
        conditioning: ConditioningVector,
        noise_level: float,
    ) -> np.ndarray: ...


class MockGuidanceModel:
    """Stand-in backend: outputs are pure hashes of (seed, conditioning, args).

    Distinct conditioning vectors map to visibly distinct images, identical
    calls repeat bit-exactly, and no network weights are involved.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _rng(self, conditioning: ConditioningVector, *extra: float) -> np.random.Generator:
        h = hashlib.sha256()
        h.update(str(self.seed).encode())
        h.update(conditioning.to_bytes())
        for v in extra:
            h.update(repr(float(v)).encode())
        return np.random.default_rng(int.from_bytes(h.digest()[:8], "little"))

    def sample(self, input_image, conditioning, steps, guidance_scale):
        rng = self._rng(conditioning, steps, guidance_scale)
        return rng.random(np.asarray(input_image).shape, dtype=np.float64)

    def score(self, noisy_render, conditioning, noise_level):
        rng = self._rng(conditioning, noise_level)
        target = rng.random(np.asarray(noisy_render).shape, dtype=np.float64)
        return np.asarray(noisy_render, dtype=np.float64) - target


def _pose_at(azimuth: float, elevation: float, radius: float) -> Pose:
    position = np.array(
        [
            radius * math.cos(elevation) * math.cos(azimuth),
            radius * math.cos(elevation) * math.sin(azimuth),
            radius * math.sin(elevation),
        ]
    )
    return Pose.look_at(position, np.zeros(3))


def make_anchor_poses(
    input_pose: Pose, k: int, radius: float, elevation: float
) -> list[tuple[float, Pose]]:
    """k origin-facing poses evenly spaced in azimuth after the input view.

    Azimuths sit at input_azimuth + m * 360 / (k + 1) degrees for m = 1..k,
    so k = 2 lands at +120 and +240. Radius and elevation are shared.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    input_azimuth = to_spherical(input_pose).azimuth
    out = []
    for m in range(1, k + 1):
        azimuth = wrap_angle(input_azimuth + m * 2.0 * math.pi / (k + 1))
        out.append((azimuth, _pose_at(azimuth, elevation, radius)))
    return out


def _pair_conditioning(
    source_pose: Pose, target_pose: Pose, fov: float, viewer_scale: float
) -> ConditioningVector:
    s = SceneView(extrinsics=(source_pose, target_pose), fov=fov, input_index=0, target_index=1)
    return m_6dof_viewer(s, q_i=viewer_scale)


def sample_anchors(
    model: GuidanceModel,
    input_view: InputView,
    plan: AnchorPlan,
    ddim_steps: int = 500,
    guidance_scale: float = 3.0,
) -> AnchorPlan:
    """Fill every anchor slot by sampling the model conditioned on the input.

    Each anchor image is generated from the input view with that anchor's own
    conditioning vector; failures carry the offending anchor index.
    """
    filled = []
    for idx, anchor in enumerate(plan.anchors):
        cond = _pair_conditioning(
            input_view.pose, anchor.pose, input_view.fov, input_view.viewer_scale
        )
        try:
            image = model.sample(input_view.image, cond, ddim_steps, guidance_scale)
        except Exception as exc:
            raise GuidanceFailure(idx, exc) from exc
        filled.append(Anchor(anchor.azimuth, anchor.pose, image))
    return AnchorPlan(
        filled, plan.gating_threshold, plan.anchor_probability, plan.seed
    )


def nearest_anchor(plan: AnchorPlan, target_pose: Pose) -> int:
    """Index of the anchor with smallest rotation distance to the target;
    exact ties resolve toward the lower azimuth."""
    if not plan.anchors:
        raise ValueError("plan has no anchors")
    best = 0
    best_key = (
        geodesic_distance(plan.anchors[0].pose, target_pose),
        wrap_angle(plan.anchors[0].azimuth),
    )
    for idx in range(1, len(plan.anchors)):
        key = (
            geodesic_distance(plan.anchors[idx].pose, target_pose),
            wrap_angle(plan.anchors[idx].azimuth),
        )
        if key < best_key:
            best, best_key = idx, key
    return best


def select_guidance(
    plan: AnchorPlan,
    input_view: InputView,
    target_pose: Pose,
    rng: np.random.Generator,
) -> GuidanceSource:
    """Pick the guidance view for one step: input view, or nearest anchor.

    An anchor is chosen with the plan's anchor probability (never when the
    plan holds no anchors); the conditioning vector is recomputed relative to
    whichever view was chosen, since that view becomes the model's input.
    """
    use_anchor = bool(plan.anchors) and rng.random() < plan.anchor_probability
    if use_anchor:
        if not plan.filled:
            raise UnfilledPlan("anchor images not sampled yet")
        idx = nearest_anchor(plan, target_pose)
        anchor = plan.anchors[idx]
        cond = _pair_conditioning(
            anchor.pose, target_pose, input_view.fov, input_view.viewer_scale
        )
        return GuidanceSource(SourceKind.ANCHOR, anchor.image, anchor.pose, cond, idx)
    cond = _pair_conditioning(
        input_view.pose, target_pose, input_view.fov, input_view.viewer_scale
    )
    return GuidanceSource(
        SourceKind.INPUT_VIEW, input_view.image, input_view.pose, cond, -1
    )


def depth_gate(
    render_depth: DepthMap, source: GuidanceSource, threshold: float
) -> np.ndarray:
    """Boolean mask of pixels allowed to receive gradients.

    Anchor guidance passes only pixels rendered deeper than the threshold
    (near content belongs to the input view); input-view guidance is
    ungated.
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if source.kind is SourceKind.ANCHOR:
        return render_depth.values > threshold
    return np.ones((render_depth.height, render_depth.width), dtype=bool)


def noise_level(schedule: NoiseSchedule, step: int, target_angular_offset: float) -> float:
    """Maximum noise for one step, raised with angular distance from the input.

    The base level interpolates linearly from max_noise_start to
    max_noise_end across training; the anisotropy multiplier slows the decay
    for targets facing away from the input view. Clamped to 1.
    """
    if not 0 <= step < schedule.total_steps:
        raise StepOutOfRange(
            f"step {step} outside [0, {schedule.total_steps})"
        )
    if step == schedule.total_steps - 1:
        base = schedule.max_noise_end  # exact endpoint, no interpolation rounding
    else:
        t = step / (schedule.total_steps - 1)
        base = schedule.max_noise_start + t * (schedule.max_noise_end - schedule.max_noise_start)
    offset = abs(wrap_angle(target_angular_offset))
    return min(1.0, base * schedule.anisotropy(offset))


def progressive_camera(
    step: int,
    total_steps: int,
    azimuth_window_start: float,
    elevation_range: tuple[float, float],
    rng: np.random.Generator,
    input_azimuth: float = 0.0,
    radius: float = 1.0,
) -> Pose:
    """Sample a target camera from a window that widens as training proceeds.

    The azimuth window is centered on the input azimuth, +-azimuth_window_start
    wide at step 0, growing linearly to +-180 degrees at the final step.
    Elevation is uniform in elevation_range; the camera looks at the origin.
    """
    if not 0 <= step < total_steps:
        raise StepOutOfRange(f"step {step} outside [0, {total_steps})")
    lo, hi = elevation_range
    if not -math.pi / 2 < lo <= hi < math.pi / 2:
        raise ValueError(f"invalid elevation range ({lo}, {hi})")
    if not 0 < azimuth_window_start <= math.pi:
        raise ValueError(f"invalid start window {azimuth_window_start}")
    t = 1.0 if total_steps == 1 else step / (total_steps - 1)
    half_window = azimuth_window_start + t * (math.pi - azimuth_window_start)
    azimuth = wrap_angle(input_azimuth + rng.uniform(-half_window, half_window))
    elevation = rng.uniform(lo, hi)
    return _pose_at(azimuth, elevation, radius)


@dataclass(frozen=True)
class DistillConfig:
    total_steps: int = 10000
    stage1_fraction: float = 0.5  # 128px/batch-6 portion; remainder is 256px/batch-1
    k: int = 2
    anchor_probability: float = 0.5
    gating_threshold: float = 1.0
    ddim_steps: int = 500
    guidance_scale: float = 3.0
    max_noise_start: float = 0.98
    max_noise_end: float = 0.025
    anisotropy_beta: float = 1.0
    azimuth_window_start: float = math.radians(30.0)
    elevation_min: float = math.radians(-10.0)
    elevation_max: float = math.radians(30.0)
    camera_radius: float = 1.0
    input_elevation: float = 0.0
    fov: float = math.radians(50.0)
    viewer_scale: float = VIEWER_SCALE_HEURISTIC_DEFAULT
    seed: int = 0

    def __post_init__(self) -> None:
        checks = [
            ("total_steps", self.total_steps >= 1),
            ("stage1_fraction", 0.0 <= self.stage1_fraction <= 1.0),
            ("k", self.k >= 0),
            ("anchor_probability", 0.0 <= self.anchor_probability <= 1.0),
            ("gating_threshold", self.gating_threshold > 0),
            ("ddim_steps", self.ddim_steps >= 1),
            ("guidance_scale", self.guidance_scale > 0),
            ("max_noise", 0.0 <= self.max_noise_end <= self.max_noise_start <= 1.0),
            ("anisotropy_beta", self.anisotropy_beta >= 0),
            ("azimuth_window_start", 0 < self.azimuth_window_start <= math.pi),
            ("elevation", -math.pi / 2 < self.elevation_min <= self.elevation_max < math.pi / 2),
            ("camera_radius", self.camera_radius > 0),
            ("fov", 0 < self.fov < math.pi),
            ("viewer_scale", self.viewer_scale > 0),
        ]
        for field, ok in checks:
            if not ok:
                raise ConfigError(f"invalid {field}")


@dataclass(frozen=True)
class PlanStep:
    step: int
    pose: Pose
    kind: SourceKind
    source_index: int
    noise: float
    resolution: int
    batch: int


STAGES = ((128, 6), (256, 1))  # (resolution, batch) per stage


def _plan_input_view(config: DistillConfig) -> InputView:
    pose = _pose_at(0.0, config.input_elevation, config.camera_radius)
    image = np.full((8, 8, 3), 0.5)
    return InputView(image, pose, config.fov, config.viewer_scale)


def distill_plan(
    config: DistillConfig, model: GuidanceModel | None = None
) -> list[PlanStep]:
    """Emit the full per-step schedule for one distillation run.

    Anchors are sampled up front (through the given model, or the in-repo
    mock), then each step draws a progressive target camera, flips the
    guidance coin, and records the noise cap plus the stage's resolution and
    batch size. Deterministic for a fixed config.
    """
    input_view = _plan_input_view(config)
    anchors = [
        Anchor(azimuth, pose)
        for azimuth, pose in make_anchor_poses(
            input_view.pose, config.k, config.camera_radius, config.input_elevation
        )
    ]
    plan = AnchorPlan(
        anchors, config.gating_threshold, config.anchor_probability, config.seed
    )
    if plan.anchors:
        plan = sample_anchors(
            model or MockGuidanceModel(config.seed),
            input_view,
            plan,
            config.ddim_steps,
            config.guidance_scale,
        )
    schedule = NoiseSchedule.cosine_anisotropy(
        config.total_steps,
        config.max_noise_start,
        config.max_noise_end,
        config.anisotropy_beta,
    )
    input_azimuth = to_spherical(input_view.pose).azimuth
    stage1_steps = round(config.total_steps * config.stage1_fraction)
    rng = np.random.default_rng(config.seed)
    steps = []
    for step in range(config.total_steps):
        camera = progressive_camera(
            step,
            config.total_steps,
            config.azimuth_window_start,
            (config.elevation_min, config.elevation_max),
            rng,
            input_azimuth,
            config.camera_radius,
        )
        source = select_guidance(plan, input_view, camera, rng)
        offset = geodesic_distance(input_view.pose, camera)
        resolution, batch = STAGES[0] if step < stage1_steps else STAGES[1]
        steps.append(
            PlanStep(
                step,
                camera,
                source.kind,
                source.index,
                noise_level(schedule, step, offset),
                resolution,
                batch,
            )
        )
    return steps


def plan_to_ndjson(steps: list[PlanStep], config: DistillConfig) -> str:
    """Serialize a plan as newline-delimited JSON with a version header."""
    header = {"format": PLAN_FORMAT, "config": dataclasses.asdict(config)}
    lines = [json.dumps(header, sort_keys=True)]
    for s in steps:
        lines.append(
            json.dumps(
                {
                    "step": s.step,
                    "pose": s.pose.matrix.reshape(-1).tolist(),
                    "kind": s.kind.value,
                    "source_index": s.source_index,
                    "noise": s.noise,
                    "resolution": s.resolution,
                    "batch": s.batch,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"
