"""Camera conditioning embeddings for view-synthesis models.

Five variants map a scene and an (input, target) view pair to the vector a
view-synthesis model consumes next to the input image:

- ``zero123``: componentwise difference of 3DoF spherical projections
  (3 entries; cannot express roll or free placement).
- ``sixdof``: relative pose plus field of view (19 entries).
- ``sixdof_norm``: as ``sixdof``, translation normalized by the average
  camera-location norm about the camera centroid.
- ``sixdof_agg``: translation normalized by the aggregate depth scale
  (10th percentile of the per-view 5th depth percentiles).
- ``sixdof_viewer``: translation normalized by the input view's own depth
  scale (20th percentile of its infilled map) -- depends only on content
  visible in the input view.

Layout convention for the 19-entry variants: the full 4x4 homogeneous
relative-pose matrix flattened row-major (the constant bottom row included),
followed by [fov, sin(fov), cos(fov)]. Row-major and the included bottom row
are conventions of this library, recorded here because they are
compatibility-relevant for anything consuming the serialized vectors.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .depth import DepthMap, scene_scale_agg, viewer_scale
from .errors import DegenerateScale, EmptyScene, FovOutOfRange, NotInfilled
from .geometry import Pose, relative_pose, scale_translation, to_spherical, wrap_angle

SIXDOF_LENGTH = 19
ZERO123_LENGTH = 3


class Variant(enum.Enum):
    """Conditioning variants; values are the 1-byte wire tags."""

    ZERO123 = 0
    SIXDOF = 1
    SIXDOF_NORM = 2
    SIXDOF_AGG = 3
    SIXDOF_VIEWER = 4

    @property
    def wire_tag(self) -> int:
        return self.value

    @property
    def key(self) -> str:
        return self.name.lower()

    @classmethod
    def from_key(cls, key: str) -> Variant:
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown variant {key!r}") from None


@dataclass(frozen=True)
class SceneView:
    """A scene plus the (input, target) index pair to condition on."""

    extrinsics: tuple[Pose, ...]
    fov: float
    input_index: int
    target_index: int
    depths: tuple[DepthMap, ...] | None = None

    def __post_init__(self) -> None:
        extr = tuple(self.extrinsics)
        if len(extr) == 0:
            raise ValueError("scene must contain at least one view")
        if not 0.0 < self.fov < math.pi:
            raise FovOutOfRange(f"fov must be in (0, pi), got {self.fov}")
        for name, idx in (("input", self.input_index), ("target", self.target_index)):
            if not 0 <= idx < len(extr):
                raise IndexError(f"{name} index {idx} out of range for {len(extr)} views")
        depths = self.depths
        if depths is not None:
            depths = tuple(depths)
            if len(depths) != len(extr):
                raise ValueError(
                    f"{len(depths)} depth maps for {len(extr)} views"
                )
        object.__setattr__(self, "extrinsics", extr)
        object.__setattr__(self, "depths", depths)

    @property
    def n_views(self) -> int:
        return len(self.extrinsics)

    @property
    def input_pose(self) -> Pose:
        return self.extrinsics[self.input_index]

    @property
    def target_pose(self) -> Pose:
        return self.extrinsics[self.target_index]


@dataclass(frozen=True)
class ConditioningVector:
    """Embedding output of any variant; fixed length, finite entries."""

    entries: np.ndarray
    variant: Variant

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.float64).reshape(-1)
        expected = ZERO123_LENGTH if self.variant is Variant.ZERO123 else SIXDOF_LENGTH
        if entries.shape != (expected,):
            raise ValueError(
                f"{self.variant.key} vector must have {expected} entries, got {entries.shape}"
            )
        if not np.all(np.isfinite(entries)):
            raise ValueError("conditioning entries must be finite")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def to_bytes(self) -> bytes:
        """Length-prefixed little-endian float32 array plus 1-byte variant tag."""
        payload = np.asarray(self.entries, dtype="<f4").tobytes()
        return struct.pack("<I", self.entries.size) + payload + bytes([self.variant.wire_tag])

    @classmethod
    def from_bytes(cls, blob: bytes) -> ConditioningVector:
        if len(blob) < 5:
            raise ValueError("conditioning blob too short")
        (n,) = struct.unpack_from("<I", blob, 0)
        expected = 4 + 4 * n + 1
        if len(blob) != expected:
            raise ValueError(f"conditioning blob length {len(blob)} != expected {expected}")
        entries = np.frombuffer(blob, dtype="<f4", count=n, offset=4).astype(np.float64)
        variant = Variant(blob[-1])
        return cls(entries, variant)


def fov_embedding(fov: float) -> np.ndarray:
    """Field-of-view sub-vector [f, sin(f), cos(f)], f in radians."""
    if not (0.0 < fov < math.pi and math.isfinite(fov)):
        raise FovOutOfRange(f"fov must be in (0, pi), got {fov}")
    return np.array([fov, math.sin(fov), math.cos(fov)])


def _scene_centroid(s: SceneView) -> np.ndarray:
    centers = np.stack([p.camera_center for p in s.extrinsics])
    return centers.mean(axis=0)


def m_zero123(
    s: SceneView,
    origin: np.ndarray | None = None,
    wrap_azimuth: bool = True,
) -> ConditioningVector:
    """Spherical-difference conditioning: projection(input) - projection(target).

    ``origin`` defaults to the centroid of the scene's camera centers (the
    object-centered assumption built into this variant). The azimuth
    difference is wrapped to [-pi, pi) by default, the only convention
    invariant to the branch cut; pass ``wrap_azimuth=False`` for the raw
    difference.
    """
    origin_v = _scene_centroid(s) if origin is None else np.asarray(origin, dtype=np.float64)
    sph_i = to_spherical(s.input_pose, origin_v)
    sph_j = to_spherical(s.target_pose, origin_v)
    d_azimuth = sph_i.azimuth - sph_j.azimuth
    if wrap_azimuth:
        d_azimuth = wrap_angle(d_azimuth)
    entries = np.array(
        [sph_i.elevation - sph_j.elevation, d_azimuth, sph_i.radius - sph_j.radius]
    )
    return ConditioningVector(entries, Variant.ZERO123)


def _assemble_sixdof(rel: Pose, fov: float, variant: Variant) -> ConditioningVector:
    flat = rel.matrix.reshape(-1)  # row-major, 16 entries incl. [0,0,0,1]
    return ConditioningVector(np.concatenate([flat, fov_embedding(fov)]), variant)


def m_6dof(s: SceneView) -> ConditioningVector:
    """Relative pose plus field of view, no scale normalization."""
    rel = relative_pose(s.input_pose, s.target_pose)
    return _assemble_sixdof(rel, s.fov, Variant.SIXDOF)


def camera_location_scale(poses: tuple[Pose, ...] | list[Pose]) -> float:
    """Average distance of the camera centers from their centroid."""
    centers = np.stack([p.camera_center for p in poses])
    deviations = centers - centers.mean(axis=0)
    return float(np.linalg.norm(deviations, axis=1).mean())


def m_6dof_norm(s: SceneView) -> ConditioningVector:
    """Relative pose with translation normalized by camera-location spread."""
    scale = camera_location_scale(s.extrinsics)
    if scale <= 0.0:
        raise DegenerateScale("all camera centers coincident; location scale is zero")
    rel = scale_translation(relative_pose(s.input_pose, s.target_pose), 1.0 / scale)
    return _assemble_sixdof(rel, s.fov, Variant.SIXDOF_NORM)


def m_6dof_agg(s: SceneView, method: str = "linear") -> ConditioningVector:
    """Relative pose with translation normalized by the aggregate depth scale.

    The scale aggregates over every view's depth map, so adding a view with
    different depth statistics changes the output for an unchanged (i, j)
    pair. Computed over the valid (sparse) pixels of each map.
    """
    if s.depths is None:
        raise EmptyScene("aggregate normalization requires depth maps for every view")
    q = scene_scale_agg(list(s.depths), method=method)
    rel = scale_translation(relative_pose(s.input_pose, s.target_pose), 1.0 / q)
    return _assemble_sixdof(rel, s.fov, Variant.SIXDOF_AGG)


def m_6dof_viewer(
    s: SceneView,
    d_bar_i: DepthMap | None = None,
    q_i: float | None = None,
    method: str = "linear",
) -> ConditioningVector:
    """Relative pose with translation normalized by the input view's scale.

    Pass either the input view's infilled depth map ``d_bar_i`` or a direct
    ``q_i`` (the inference-time heuristic; 0.7 to 1.0 works for most
    images). Never depends on views other than (i, j), which is the property
    that keeps the embedding stable when cameras are added to the scene.
    """
    if (d_bar_i is None) == (q_i is None):
        raise ValueError("provide exactly one of d_bar_i or q_i")
    if d_bar_i is not None:
        q = viewer_scale(d_bar_i, method=method)
    else:
        if not (q_i > 0 and math.isfinite(q_i)):
            raise ValueError(f"q_i must be positive and finite, got {q_i}")
        q = float(q_i)
    rel = scale_translation(relative_pose(s.input_pose, s.target_pose), 1.0 / q)
    return _assemble_sixdof(rel, s.fov, Variant.SIXDOF_VIEWER)


def infilled_input_depth(s: SceneView) -> DepthMap:
    """The input view's depth map, which must already be dense."""
    if s.depths is None:
        raise EmptyScene("scene carries no depth maps")
    d = s.depths[s.input_index]
    if not d.fully_valid:
        raise NotInfilled(
            f"input view {s.input_index} depth map has holes; infill it first"
        )
    return d


def compute(
    s: SceneView,
    variant: Variant,
    origin: np.ndarray | None = None,
    q_i: float | None = None,
    method: str = "linear",
) -> ConditioningVector:
    """Dispatch to the requested variant with scene-derived inputs."""
    if variant is Variant.ZERO123:
        return m_zero123(s, origin=origin)
    if variant is Variant.SIXDOF:
        return m_6dof(s)
    if variant is Variant.SIXDOF_NORM:
        return m_6dof_norm(s)
    if variant is Variant.SIXDOF_AGG:
        return m_6dof_agg(s, method=method)
    if variant is Variant.SIXDOF_VIEWER:
        if q_i is not None:
            return m_6dof_viewer(s, q_i=q_i, method=method)
        return m_6dof_viewer(s, d_bar_i=infilled_input_depth(s), method=method)
    raise ValueError(f"unknown variant {variant}")
