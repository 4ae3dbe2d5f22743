"""Sparse depth maps, quantile statistics, and disparity alignment/infilling.

Quantiles default to linear interpolation between order statistics; the
nearest-rank convention is available via ``method="nearest"`` for
sensitivity checks. Scale/shift alignment runs in disparity space (1/depth),
matching how monodepth predictions are fitted to sparse metric depth.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyDepth,
    EmptyScene,
    InsufficientOverlap,
    NonPositiveFillWarning,
    NonPositiveScaleWarning,
    NotInfilled,
    SingularSystem,
)

# Infilled depths are clamped to this floor so quantiles stay positive even
# when the fitted disparity crosses zero far from its support.
INFILL_DEPTH_FLOOR = 1e-4

# Inference-time heuristic when no input-view depth exists: any value in
# [0.7, 1.0] works for most images; 0.7 is the forward-facing benchmark
# default.
VIEWER_SCALE_HEURISTIC_RANGE = (0.7, 1.0)
VIEWER_SCALE_HEURISTIC_DEFAULT = 0.7


@dataclass(frozen=True)
class DepthMap:
    """H x W grid of depths with a per-pixel validity mask.

    Valid entries must be finite and strictly positive; invalid entries are
    canonicalized to 0 so serialization and hashing are deterministic.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"depth values must be 2-D, got shape {values.shape}")
        if self.mask is None:
            mask = np.ones(values.shape, dtype=bool)
        else:
            mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != values.shape:
            raise ValueError(f"mask shape {mask.shape} != values shape {values.shape}")

        valid = values[mask]
        if valid.size and not (np.all(np.isfinite(valid)) and np.all(valid > 0)):
            raise ValueError("valid depth entries must be finite and > 0")

        values = np.where(mask, values, 0.0)
        values.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)

    @classmethod
    def full(cls, values: np.ndarray) -> DepthMap:
        """Fully valid map."""
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.mask.sum())

    @property
    def fully_valid(self) -> bool:
        return bool(self.mask.all())

    def valid_values(self) -> np.ndarray:
        return self.values[self.mask]


@dataclass(frozen=True)
class ScaleShift:
    """Affine disparity alignment parameters: aligned = scale * pred + shift."""

    scale: float
    shift: float


def quantile(d: DepthMap, k: float, method: str = "linear") -> float:
    """k-th percentile (k in [0, 100]) of the valid depth values.

    ``linear`` interpolates between order statistics; ``nearest`` is the
    classic nearest-rank definition (smallest value covering at least k% of
    the data).
    """
    if not 0.0 <= k <= 100.0:
        raise ValueError(f"k must be in [0, 100], got {k}")
    valid = d.valid_values()
    if valid.size == 0:
        raise EmptyDepth("quantile of a depth map with no valid pixels")
    if method == "linear":
        return float(np.percentile(valid, k))
    if method == "nearest":
        ordered = np.sort(valid)
        rank = max(1, math.ceil(k / 100.0 * ordered.size))
        return float(ordered[rank - 1])
    raise ValueError(f"unknown quantile method {method!r}")


def scene_scale_agg(depths: list[DepthMap], method: str = "linear") -> float:
    """Aggregate scene scale: 10th percentile of the per-map 5th percentiles."""
    if len(depths) == 0:
        raise EmptyScene("scene scale over an empty list of depth maps")
    per_map = np.array([quantile(d, 5.0, method=method) for d in depths])
    if method == "linear":
        return float(np.percentile(per_map, 10.0))
    ordered = np.sort(per_map)
    rank = max(1, math.ceil(0.10 * ordered.size))
    return float(ordered[rank - 1])


def viewer_scale(d_bar: DepthMap, method: str = "linear") -> float:
    """Input-view scale: 20th percentile of a fully valid (infilled) map."""
    if d_bar.n_valid == 0:
        raise EmptyDepth("viewer scale of an empty depth map")
    if not d_bar.fully_valid:
        raise NotInfilled("viewer scale requires a fully valid (infilled) depth map")
    return quantile(d_bar, 20.0, method=method)


def align_scale_shift(predicted_disparity: DepthMap, sparse_gt_depth: DepthMap) -> ScaleShift:
    """Least-squares fit of predicted disparity to ground-truth disparity.

    Minimizes sum((a * pred + b - 1/gt_depth)^2) over pixels valid in both
    maps, solved in closed form from the 2x2 normal equations. A non-positive
    fitted scale is reported via NonPositiveScaleWarning but returned as-is.
    """
    if predicted_disparity.values.shape != sparse_gt_depth.values.shape:
        raise ValueError(
            f"shape mismatch: predicted {predicted_disparity.values.shape} "
            f"vs ground truth {sparse_gt_depth.values.shape}"
        )
    overlap = predicted_disparity.mask & sparse_gt_depth.mask
    n = int(overlap.sum())
    if n < 2:
        raise InsufficientOverlap(f"need >= 2 valid overlapping pixels, got {n}")

    p = predicted_disparity.values[overlap]
    d = 1.0 / sparse_gt_depth.values[overlap]

    sum_p = float(np.sum(p))
    sum_pp = float(np.sum(p * p))
    sum_d = float(np.sum(d))
    sum_pd = float(np.sum(p * d))

    det = n * sum_pp - sum_p * sum_p  # n^2 * var(p)
    if det <= n * n * 1e-18 * (1.0 + (sum_p / n) ** 2):
        raise SingularSystem("predicted disparity is constant over the overlap")

    scale = (n * sum_pd - sum_p * sum_d) / det
    shift = (sum_pp * sum_d - sum_p * sum_pd) / det
    if scale <= 0:
        warnings.warn(
            f"disparity alignment produced non-positive scale {scale:.3g}",
            NonPositiveScaleWarning,
            stacklevel=2,
        )
    return ScaleShift(scale=scale, shift=shift)


def infill(sparse: DepthMap, predicted_disparity: DepthMap) -> DepthMap:
    """Fill the holes of a sparse depth map from aligned predicted disparity.

    Valid pixels of ``sparse`` are preserved bit-exactly; holes become
    1 / (a * pred + b) clamped to INFILL_DEPTH_FLOOR. The prediction must be
    dense. Fully valid inputs are returned unchanged.
    """
    if predicted_disparity.values.shape != sparse.values.shape:
        raise ValueError(
            f"shape mismatch: predicted {predicted_disparity.values.shape} "
            f"vs sparse {sparse.values.shape}"
        )
    if sparse.fully_valid:
        return sparse
    if not predicted_disparity.fully_valid:
        raise NotInfilled("predicted disparity must be dense to infill holes")

    fit = align_scale_shift(predicted_disparity, sparse)
    disp = fit.scale * predicted_disparity.values + fit.shift

    with np.errstate(divide="ignore", over="ignore"):
        fill = np.where(disp > 0, np.divide(1.0, disp, where=disp > 0), -np.inf)
    clamped = (~np.isfinite(fill)) | (fill < INFILL_DEPTH_FLOOR)
    fill = np.where(clamped, INFILL_DEPTH_FLOOR, fill)

    holes = ~sparse.mask
    n_clamped = int(np.sum(clamped & holes))
    if n_clamped:
        warnings.warn(
            f"{n_clamped} infilled depths clamped to the {INFILL_DEPTH_FLOOR:g} floor",
            NonPositiveFillWarning,
            stacklevel=2,
        )

    values = np.where(sparse.mask, sparse.values, fill)
    return DepthMap(values, np.ones(values.shape, dtype=bool))


def downsample(d: DepthMap, factor: int) -> DepthMap:
    """Block-subsample by taking each factor x factor block's top-left pixel.

    Subsampling (not averaging) keeps the value set semantics that quantile
    statistics rely on; averaging would mix valid and invalid depths.
    """
    if not (isinstance(factor, (int, np.integer)) and factor >= 1):
        raise ValueError(f"factor must be a positive integer, got {factor}")
    if factor == 1:
        return d
    return DepthMap(d.values[::factor, ::factor], d.mask[::factor, ::factor])


def synthetic_disparity(true_depth: DepthMap, scale: float, shift: float) -> DepthMap:
    """Deterministic stand-in for a monodepth predictor, for tests.

    Returns the dense disparity whose optimal alignment to ``true_depth`` is
    exactly (scale, shift): pred = (1/depth - shift) / scale. The parameters
    must keep the produced disparity strictly positive (DepthMap invariant);
    pick shift below the smallest true disparity.
    """
    if not true_depth.fully_valid:
        raise NotInfilled("synthetic producer needs a complete ground-truth map")
    if scale == 0:
        raise ValueError("scale must be nonzero")
    pred = (1.0 / true_depth.values - shift) / scale
    if not np.all(pred > 0):
        raise ValueError("scale/shift drive the synthetic disparity non-positive")
    return DepthMap.full(pred)
