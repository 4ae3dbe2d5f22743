"""Scene preprocessing and evaluation-protocol utilities.

Covers the camera-side bookkeeping around model input preparation: centered
square cropping with intrinsics adjustment, field-of-view derivation,
automatic elevation from a standardized pose, and the world-scale grid
search. Pose standardization is rigid (rotation + translation, never scale)
so it composes cleanly with the conditioning module's scale normalizations.
"""

from __future__ import annotations

import functools
import importlib.resources
import math
import sys
from dataclasses import dataclass, replace

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as tomli
else:
    import tomli

from .errors import DegenerateConfiguration, EmptyCandidates, TargetTooLarge
from .geometry import Pose, compose

WORLD_UP = np.array([0.0, 0.0, 1.0])

# Grid-search candidates for per-scene world scale, 0.3 to 1.5 in steps of 0.1.
DEFAULT_SCALE_CANDIDATES = tuple(round(0.3 + 0.1 * k, 1) for k in range(13))

@functools.lru_cache(maxsize=1)
def eval_scene_setup() -> dict:
    """Per-scene evaluation metadata (input view index, content scale).

    Loaded from the static file shipped with the package; content scale is
    opaque metadata consumed by downstream renderers.
    """
    blob = importlib.resources.files("condkit").joinpath("data/eval_scenes.toml")
    return tomli.loads(blob.read_text())


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels; no skew or distortion."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")

    @classmethod
    def centered(cls, fx: float, fy: float, width: int, height: int) -> Intrinsics:
        return cls(fx, fy, width / 2.0, height / 2.0, width, height)


def center_crop(intr: Intrinsics, target: int) -> Intrinsics:
    """Crop to a centered target x target square, shifting the principal point."""
    if target > min(intr.width, intr.height):
        raise TargetTooLarge(
            f"crop {target} exceeds image {intr.width}x{intr.height}"
        )
    dx = (intr.width - target) / 2.0
    dy = (intr.height - target) / 2.0
    return replace(
        intr, cx=intr.cx - dx, cy=intr.cy - dy, width=target, height=target
    )


def resize(intr: Intrinsics, new_width: int, new_height: int) -> Intrinsics:
    """Rescale intrinsics for a resized image; focal lengths scale with size."""
    sx = new_width / intr.width
    sy = new_height / intr.height
    return Intrinsics(
        intr.fx * sx, intr.fy * sy, intr.cx * sx, intr.cy * sy, new_width, new_height
    )


def letterbox(intr: Intrinsics, target_width: int, target_height: int) -> tuple[Intrinsics, tuple[int, int]]:
    """Fit inside target_width x target_height preserving aspect, then pad.

    Returns the padded intrinsics and the (left, top) pad offsets so callers
    can place the resized image inside the target canvas.
    """
    scale = min(target_width / intr.width, target_height / intr.height)
    inner_w = max(1, round(intr.width * scale))
    inner_h = max(1, round(intr.height * scale))
    inner = resize(intr, inner_w, inner_h)
    left = (target_width - inner_w) // 2
    top = (target_height - inner_h) // 2
    padded = replace(
        inner, cx=inner.cx + left, cy=inner.cy + top,
        width=target_width, height=target_height,
    )
    return padded, (left, top)


def fov_from_intrinsics(intr: Intrinsics) -> float:
    """Horizontal field of view in radians, f = 2 atan(width / (2 fx))."""
    return 2.0 * math.atan(intr.width / (2.0 * intr.fx))


def elevation_from_pose(e: Pose, world_up: np.ndarray | None = None) -> float:
    """Angle between the camera's forward axis and the horizontal plane.

    Positive looking up, negative looking down, so a straight-down camera
    reads -pi/2. ``world_up`` must be unit-norm; defaults to +Z.
    """
    up = WORLD_UP if world_up is None else np.asarray(world_up, dtype=np.float64)
    if not math.isclose(float(np.linalg.norm(up)), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError("world_up must be unit-norm")
    d = float(np.dot(e.forward_axis, up))
    return math.asin(max(-1.0, min(1.0, d)))


def world_scale_grid(score_fn, candidates=None) -> float:
    """Return the candidate scale minimizing score_fn; ties go to the smaller."""
    cands = DEFAULT_SCALE_CANDIDATES if candidates is None else tuple(candidates)
    if not cands:
        raise EmptyCandidates("no scale candidates")
    best, best_score = None, math.inf
    for c in sorted(cands):
        score = score_fn(c)
        if score < best_score:
            best, best_score = c, score
    return best


def standardize_poses(extrinsics: list[Pose]) -> list[Pose]:
    """Rigidly align camera centers so their principal axes hit the world axes.

    The centroid moves to the origin and the direction of least spread
    becomes world Z, putting the dominant camera layout in the XY-plane.
    Purely rotation + translation (no scaling), so relative poses between
    views are untouched. The Z sign is chosen so the mean camera up-vector
    points toward positive world up.
    """
    if len(extrinsics) < 3:
        raise DegenerateConfiguration("need at least 3 cameras to standardize")
    centers = np.stack([p.camera_center for p in extrinsics])
    centroid = centers.mean(axis=0)
    centered = centers - centroid
    # rows of vt are the principal directions, by decreasing spread
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    if singular[0] <= 0.0 or singular[1] <= 1e-12 * singular[0]:
        raise DegenerateConfiguration("camera centers are coincident or collinear")
    axes = vt.copy()
    if np.linalg.det(axes) < 0:
        axes[2] = -axes[2]
    # camera up in world coordinates is -R[:, 1] (camera Y points down)
    mean_up = np.mean([-p.rotation[:, 1] for p in extrinsics], axis=0)
    if float(axes[2] @ mean_up) < 0:
        axes[1] = -axes[1]
        axes[2] = -axes[2]
    world_fix = Pose(axes, -axes @ centroid)
    return [compose(world_fix, p) for p in extrinsics]
