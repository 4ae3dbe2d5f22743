"""Error classes shared across the package.

Every raisable condition named in an operation contract has its own class so
callers (and the CLI's exit-code mapping) can dispatch on error kind rather
than on message text.
"""


class CondkitError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


class InvalidRotation(CondkitError, ValueError):
    """Rotation matrix fails orthonormality validation beyond repairable tolerance."""


class NonPositiveScale(CondkitError, ValueError):
    """Translation scaling factor must be strictly positive."""


class DegenerateRadius(CondkitError, ValueError):
    """Camera center coincides with the spherical-projection origin."""


# ---------------------------------------------------------------------------
# depth
# ---------------------------------------------------------------------------


class EmptyDepth(CondkitError, ValueError):
    """Depth map has no valid pixels for the requested statistic."""


class EmptyScene(CondkitError, ValueError):
    """Scene-level statistic requested over an empty collection of maps."""


class NotInfilled(CondkitError, ValueError):
    """Operation requires a fully valid (infilled) depth map."""


class InsufficientOverlap(CondkitError, ValueError):
    """Fewer than two valid overlapping pixels for scale/shift alignment."""


class SingularSystem(CondkitError, ValueError):
    """Normal equations are singular (constant predicted disparity)."""


class NonPositiveFillWarning(UserWarning):
    """Some infilled depths were clamped to the positive floor."""


class NonPositiveScaleWarning(UserWarning):
    """Disparity alignment produced a non-positive scale (reported, not rejected)."""


# ---------------------------------------------------------------------------
# conditioning
# ---------------------------------------------------------------------------


class FovOutOfRange(CondkitError, ValueError):
    """Field of view must lie strictly inside (0, pi)."""


class DegenerateScale(CondkitError, ValueError):
    """Camera-location normalization is undefined (all cameras coincident)."""


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


class IoFailure(CondkitError, IOError):
    """Shard could not be written or read."""


class InvalidScene(CondkitError, ValueError):
    """Scene record violates its invariants; carries the offending scene_id."""

    def __init__(self, scene_id: str, message: str):
        super().__init__(f"scene {scene_id!r}: {message}")
        self.scene_id = scene_id


class ChecksumMismatch(IoFailure):
    """Stored payload checksum does not match the bytes read."""

    def __init__(self, scene_id: str, detail: str = "payload checksum mismatch"):
        super().__init__(f"scene {scene_id!r}: {detail}")
        self.scene_id = scene_id


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------


class TargetTooLarge(CondkitError, ValueError):
    """Requested crop exceeds the source image dimensions."""


class EmptyCandidates(CondkitError, ValueError):
    """Grid search invoked with no candidate scales."""


class DegenerateConfiguration(CondkitError, ValueError):
    """Camera centers are coincident/collinear; PCA standardization undefined."""


# ---------------------------------------------------------------------------
# anchoring
# ---------------------------------------------------------------------------


class GuidanceFailure(CondkitError, RuntimeError):
    """Guidance model raised while sampling an anchor; carries the anchor index."""

    def __init__(self, anchor_index: int, cause: BaseException):
        super().__init__(f"anchor {anchor_index}: {cause}")
        self.anchor_index = anchor_index
        self.__cause__ = cause


class UnfilledPlan(CondkitError, ValueError):
    """Guidance selection requires a plan whose anchor images are filled."""


class StepOutOfRange(CondkitError, ValueError):
    """Schedule queried outside [0, total_steps)."""


class ConfigError(CondkitError, ValueError):
    """Plan/CLI configuration rejected; message names the offending field."""


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


class ShapeMismatch(CondkitError, ValueError):
    """Image pair shapes differ."""


class TooSmall(CondkitError, ValueError):
    """Image smaller than the SSIM window."""


class ExternalUnavailable(CondkitError, RuntimeError):
    """External metric command is not available on this system."""


class ParseFailure(CondkitError, RuntimeError):
    """External metric produced unparseable output."""
