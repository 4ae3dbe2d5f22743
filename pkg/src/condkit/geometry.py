"""SE(3) pose algebra and the 3DoF spherical camera parameterization.

Conventions (load-bearing, also recorded in shard metadata):

- Poses are camera-to-world: the camera center in world coordinates is the
  translation component directly.
- World frame is right-handed and Z-up. Elevation is measured from the XY
  plane (not inclination from the pole), azimuth is ``atan2(y, x)`` wrapped
  to [-pi, pi).
- Camera frame is OpenCV-style: +X right, +Y down, +Z forward. The camera's
  forward axis in world coordinates is the third column of the rotation.

All types are immutable after construction and all operations are pure
functions, safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRadius, InvalidRotation, NonPositiveScale

# Construction accepts rotations this far from orthonormal and repairs them
# by polar projection; anything worse is rejected.
ORTHONORMAL_TOLERANCE = 1e-6

# Below this deviation the polar projection is a numerical no-op; skip it so
# exact matrices (identity, composition results) pass through unchanged.
_PROJECTION_SKIP = 1e-12

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to the canonical interval [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def _polar_project(r: np.ndarray) -> np.ndarray:
    # Nearest orthonormal matrix in Frobenius norm: U @ Vt from the SVD.
    u, _, vt = np.linalg.svd(r)
    return u @ vt


def rotation_angle(r: np.ndarray) -> float:
    """Rotation angle in [0, pi] of an orthonormal 3x3 matrix."""
    c = (float(np.trace(r)) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


@dataclass(frozen=True)
class Pose:
    """Rigid transform in SE(3): orthonormal rotation plus translation.

    Camera-to-world by convention, so ``translation`` is the camera center.
    The constructor validates orthonormality within ORTHONORMAL_TOLERANCE,
    re-orthonormalizes by polar projection, and rejects reflections.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if r.shape != (3, 3):
            raise InvalidRotation(f"rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise InvalidRotation(f"translation must be a 3-vector, got {t.shape}")
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(t)):
            raise InvalidRotation("pose entries must be finite")

        deviation = float(np.max(np.abs(r.T @ r - np.eye(3))))
        det = float(np.linalg.det(r))
        if deviation > ORTHONORMAL_TOLERANCE or abs(det - 1.0) > ORTHONORMAL_TOLERANCE:
            raise InvalidRotation(
                f"rotation not orthonormal within {ORTHONORMAL_TOLERANCE:g} "
                f"(deviation={deviation:.3g}, det={det:.6f})"
            )
        if deviation > _PROJECTION_SKIP:
            r = _polar_project(r)

        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> Pose:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> Pose:
        """Build from a 4x4 homogeneous matrix; bottom row must be [0,0,0,1]."""
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidRotation(f"matrix must be 4x4, got {m.shape}")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise InvalidRotation("bottom row must be [0, 0, 0, 1]")
        return cls(m[:3, :3].copy(), m[:3, 3].copy())

    @classmethod
    def look_at(
        cls,
        position: np.ndarray,
        target: np.ndarray,
        up: np.ndarray | None = None,
    ) -> Pose:
        """Camera at ``position`` with its forward axis toward ``target``.

        Roll-free with respect to ``up`` (default world +Z). If the viewing
        direction is parallel to ``up``, +X is used as the fallback up so the
        pose stays well-defined straight up/down.
        """
        position = np.asarray(position, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        up_v = np.array([0.0, 0.0, 1.0]) if up is None else np.asarray(up, dtype=np.float64)

        forward = target - position
        norm = np.linalg.norm(forward)
        if norm < 1e-12:
            raise DegenerateRadius("look_at position coincides with target")
        forward = forward / norm

        right = np.cross(forward, up_v)
        if np.linalg.norm(right) < 1e-9:
            right = np.cross(forward, np.array([1.0, 0.0, 0.0]))
        right = right / np.linalg.norm(right)
        down = np.cross(forward, right)

        return cls(np.stack([right, down, forward], axis=1), position)

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous matrix [[R, t], [0, 0, 0, 1]]."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @property
    def camera_center(self) -> np.ndarray:
        return self.translation

    @property
    def forward_axis(self) -> np.ndarray:
        """Camera viewing direction in world coordinates."""
        return self.rotation[:, 2]

    def allclose(self, other: Pose, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol)
            and np.allclose(self.translation, other.translation, atol=atol)
        )


@dataclass(frozen=True)
class Spherical3DoF:
    """Elevation / azimuth / radius parameterization of a camera position.

    Elevation is the angle from the XY plane in radians, azimuth is wrapped
    to [-pi, pi), radius is the Euclidean distance from the origin and must
    be strictly positive. Roll is not representable.
    """

    elevation: float
    azimuth: float = field(default=0.0)
    radius: float = field(default=1.0)

    def __post_init__(self) -> None:
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise DegenerateRadius(f"radius must be > 0, got {self.radius}")
        object.__setattr__(self, "azimuth", wrap_angle(self.azimuth))

    def as_array(self) -> np.ndarray:
        return np.array([self.elevation, self.azimuth, self.radius])


def compose(a: Pose, b: Pose) -> Pose:
    """Rigid transform "apply b then a": spatial composition a @ b."""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(p: Pose) -> Pose:
    """Inverse transform (R^T, -R^T t)."""
    rt = p.rotation.T
    return Pose(rt.copy(), -rt @ p.translation)


def relative_pose(e_i: Pose, e_j: Pose) -> Pose:
    """Pose of camera j expressed in camera i's frame.

    Invariant under any common rigid transform of both cameras.
    """
    return compose(inverse(e_i), e_j)


def scale_translation(e: Pose, scale: float) -> Pose:
    """Scale the translation component, leaving rotation untouched."""
    if not (scale > 0.0 and math.isfinite(scale)):
        raise NonPositiveScale(f"scale must be a positive finite number, got {scale}")
    return Pose(e.rotation.copy(), e.translation * scale)


def to_spherical(e: Pose, origin: np.ndarray | None = None) -> Spherical3DoF:
    """Project a pose to (elevation, azimuth, radius) about ``origin``.

    Only the camera center matters; orientation (including roll) is
    discarded. Raises DegenerateRadius when the center sits on the origin.
    """
    origin_v = np.zeros(3) if origin is None else np.asarray(origin, dtype=np.float64)
    d = e.camera_center - origin_v
    radius = float(np.linalg.norm(d))
    if radius < 1e-12:
        raise DegenerateRadius("camera center coincides with the projection origin")
    elevation = math.atan2(d[2], math.hypot(d[0], d[1]))
    azimuth = math.atan2(d[1], d[0])
    return Spherical3DoF(elevation=elevation, azimuth=azimuth, radius=radius)


def geodesic_distance(a: Pose, b: Pose) -> float:
    """Geodesic distance between the two rotations, in radians [0, pi]."""
    return rotation_angle(a.rotation.T @ b.rotation)
