"""Gravity-aligned homography solvers with radial distortion auto-calibration."""

from .geometry import (
    Correspondence,
    Intrinsics,
    MotionHomography,
    RelativePose,
    compose_homography,
    extract_pose,
    homography_error,
    pose_errors,
)
from .ransac import (
    RansacConfig,
    RansacHomographyEstimator,
    RansacReport,
    lo_refine,
    reprojection_errors,
    run_ransac,
)
from .solvers import (
    SolverSolution,
    filter_by_unused_equation,
    solve_calibrated,
    solve_fhf,
    solve_frhfr,
)

__version__ = "0.1.0"

__all__ = [
    "Correspondence",
    "Intrinsics",
    "MotionHomography",
    "RansacConfig",
    "RansacHomographyEstimator",
    "RansacReport",
    "RelativePose",
    "SolverSolution",
    "lo_refine",
    "reprojection_errors",
    "run_ransac",
    "compose_homography",
    "extract_pose",
    "filter_by_unused_equation",
    "homography_error",
    "pose_errors",
    "solve_calibrated",
    "solve_fhf",
    "solve_frhfr",
    "__version__",
]
