"""Complementary-depth geometry, fusion, and error-complementarity analysis.

The package turns the closed-form depth estimators of a monocular 3D
detector (box-height, ground-elevation, and combined midpoint forms) into a
standalone library: project/backproject camera math, ground-plane and
horizon-line conversions, uncertainty-weighted depth fusion, the MAE / ESOP
/ CS metric family, and seeded flip experiments that quantify how much a
depth ensemble loses to error-sign coupling.
"""

from .camera import (
    DEFAULT_EPS_DEN,
    CameraIntrinsics,
    Pixel,
    Point3D,
    backproject_xy,
    depth_from_elevation,
    project,
)
from .depth_branches import (
    BoxKeypoints,
    box_corners,
    box_keypoints,
    focal_rescale,
    z_alt,
    z_comp,
    z_global,
    z_key,
)
from .errors import (
    AllBranchesInvalid,
    CompdepthError,
    DegenerateHeight,
    DegeneratePlane,
    EmptyEnsemble,
    EmptyInput,
    HorizonSingularity,
    InsufficientSupport,
    JoinError,
    KOutOfRange,
    LengthMismatch,
    MalformedLine,
    MalformedMatrix,
    MidpointSingularity,
    MissingKey,
    NonMonotoneEdges,
    NonPositiveDepth,
    NonPositiveSigma,
    RayParallelToPlane,
    SchemaError,
    TopSingularity,
    UnknownBranch,
    ZeroMAE,
)
from .fusion import FusedDepth, fuse_with_mask, soft_fuse, soft_fuse_array
from .ground_plane import (
    DEFAULT_CAM_HEIGHT,
    GroundPlane,
    HorizonFitInfo,
    HorizonHeatmap,
    HorizonLine,
    PlaneFitInfo,
    fit_horizon,
    fit_plane,
    heatmap_from_pgm,
    heatmap_to_pgm,
    horizon_to_plane,
    plane_to_horizon,
    rasterize_horizon,
    y_global,
)
from .kitti_io import (
    DepthBranch,
    DepthEnsemble,
    Object3D,
    filter_objects,
    format_calib,
    format_labels,
    parse_calib,
    parse_calib_matrix,
    parse_labels,
    read_predictions,
    read_report,
    write_curves,
    write_predictions,
    write_report,
)
from .lab import (
    ErrorModelConfig,
    MultiFlipResult,
    SweepCurve,
    complementary_error,
    coupling_error,
    disturb_sweep,
    ensembles_to_arrays,
    flip,
    flip_sweep,
    generate_ensembles,
    multi_flip,
)
from .metrics import (
    DEFAULT_DEPTH_EDGES,
    DEFAULT_Y_ERROR_EDGES,
    BinnedMae,
    ComplementarityReport,
    binned_mae,
    complementarity_score,
    esop,
    evaluate_ensembles,
    mae,
)
from .synthetic import DEFAULT_INTRINSICS, Scene, make_scene, random_plane

__version__ = "0.1.0"

__all__ = [
    "AllBranchesInvalid", "BinnedMae", "BoxKeypoints", "CameraIntrinsics",
    "CompdepthError", "ComplementarityReport", "DEFAULT_CAM_HEIGHT",
    "DEFAULT_DEPTH_EDGES", "DEFAULT_EPS_DEN", "DEFAULT_INTRINSICS",
    "DEFAULT_Y_ERROR_EDGES", "DegenerateHeight", "DegeneratePlane",
    "DepthBranch", "DepthEnsemble", "EmptyEnsemble", "EmptyInput",
    "ErrorModelConfig", "FusedDepth", "GroundPlane", "HorizonFitInfo",
    "HorizonHeatmap", "HorizonLine", "HorizonSingularity",
    "InsufficientSupport", "JoinError", "KOutOfRange", "LengthMismatch",
    "MalformedLine", "MalformedMatrix", "MidpointSingularity", "MissingKey",
    "MultiFlipResult", "NonMonotoneEdges", "NonPositiveDepth",
    "NonPositiveSigma", "Object3D", "Pixel", "PlaneFitInfo", "Point3D",
    "RayParallelToPlane", "Scene", "SchemaError", "SweepCurve",
    "TopSingularity", "UnknownBranch", "ZeroMAE",
    "backproject_xy", "binned_mae", "box_corners", "box_keypoints",
    "complementarity_score", "complementary_error", "coupling_error",
    "depth_from_elevation", "disturb_sweep", "ensembles_to_arrays", "esop",
    "evaluate_ensembles", "filter_objects", "fit_horizon", "fit_plane",
    "flip", "flip_sweep", "focal_rescale", "format_calib", "format_labels",
    "fuse_with_mask", "generate_ensembles", "heatmap_from_pgm",
    "heatmap_to_pgm", "horizon_to_plane", "mae", "make_scene", "multi_flip",
    "parse_calib", "parse_calib_matrix", "parse_labels", "plane_to_horizon",
    "project", "random_plane", "rasterize_horizon", "read_predictions",
    "read_report", "soft_fuse", "soft_fuse_array", "write_curves",
    "write_predictions", "write_report", "y_global", "z_alt", "z_comp",
    "z_global", "z_key",
]
