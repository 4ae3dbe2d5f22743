"""condkit: camera-conditioning representations for novel view synthesis.

The package covers everything around the neural network of a view-synthesis
pipeline: SE(3) pose algebra, depth statistics and scale normalization, the
five conditioning embedding variants, sharded streaming of multiview scenes,
anchored-distillation planning, and full-reference evaluation metrics. Model
inference stays behind the anchoring module's GuidanceModel interface.
"""

from .conditioning import (
    ConditioningVector,
    SceneView,
    Variant,
    fov_embedding,
    m_6dof,
    m_6dof_agg,
    m_6dof_norm,
    m_6dof_viewer,
    m_zero123,
)
from .depth import (
    DepthMap,
    ScaleShift,
    align_scale_shift,
    downsample,
    infill,
    quantile,
    scene_scale_agg,
    viewer_scale,
)
from .geometry import (
    Pose,
    Spherical3DoF,
    compose,
    geodesic_distance,
    inverse,
    relative_pose,
    scale_translation,
    to_spherical,
    wrap_angle,
)
from .metrics import lpips_external, psnr, ssim

__version__ = "0.1.0"

__all__ = [
    "ConditioningVector",
    "SceneView",
    "Variant",
    "fov_embedding",
    "m_6dof",
    "m_6dof_agg",
    "m_6dof_norm",
    "m_6dof_viewer",
    "m_zero123",
    "DepthMap",
    "ScaleShift",
    "align_scale_shift",
    "downsample",
    "infill",
    "quantile",
    "scene_scale_agg",
    "viewer_scale",
    "Pose",
    "Spherical3DoF",
    "compose",
    "geodesic_distance",
    "inverse",
    "relative_pose",
    "scale_translation",
    "to_spherical",
    "wrap_angle",
    "psnr",
    "ssim",
    "lpips_external",
    "__version__",
]
