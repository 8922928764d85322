"""Camera model, gravity alignment, homography composition and error metrics.

Conventions used throughout the library:

* Image coordinates are distortion-centered (principal point at the origin)
  and scale-normalized by half the image diagonal, so focal lengths and
  division-model coefficients are O(1).
* Rotations are world-to-camera, with gravity along the world y-axis.
* The ground plane has unit normal n = [0, 1, 0]^T at distance d = 1 from
  the first camera, which fixes the scale of the motion homography

      H_y = [[1, h1, 0],
             [0, h2, 0],
             [0, h3, 1]],    t = [h1, h2 - 1, h3].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import NoRealRoot, NormalizationFailure, ZeroTranslation

LOG = logging.getLogger(__name__)

PLANE_NORMAL = np.array([0.0, 1.0, 0.0])

_ZERO_T_TOL = 1e-12
_H33_TOL = 1e-12


@dataclass(frozen=True)
class Intrinsics:
    """Focal length and division-model coefficient, K = diag(f, f, 1)."""

    f: float
    lam: float = 0.0

    def __post_init__(self):
        if not (self.f > 0):
            raise ValueError(f"focal length must be positive, got {self.f}")
        if not np.isfinite(self.lam):
            raise ValueError("lambda must be finite")

    @property
    def K(self) -> np.ndarray:
        return np.diag([self.f, self.f, 1.0])

    @property
    def K_inv(self) -> np.ndarray:
        return np.diag([1.0 / self.f, 1.0 / self.f, 1.0])


@dataclass(frozen=True)
class MotionHomography:
    """Middle column (h1, h2, h3) of the gravity-aligned homography H_y."""

    h1: float
    h2: float
    h3: float

    @property
    def h(self) -> np.ndarray:
        return np.array([self.h1, self.h2, self.h3])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([
            [1.0, self.h1, 0.0],
            [0.0, self.h2, 0.0],
            [0.0, self.h3, 1.0],
        ])

    @property
    def translation(self) -> np.ndarray:
        """Aligned-frame translation t with t = [h1, h2-1, h3]."""
        return np.array([self.h1, self.h2 - 1.0, self.h3])


@dataclass(frozen=True)
class RelativePose:
    """Relative rotation and unit translation direction (scale unobservable)."""

    rotation: np.ndarray
    translation_dir: np.ndarray


@dataclass(frozen=True)
class Correspondence:
    """A pair of distorted, centered image points with per-frame rotations."""

    p1: np.ndarray
    p2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


def check_rotation(R: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or np.linalg.det(R) < 0:
        raise ValueError("matrix is not a proper rotation")
    return R


def rot_x(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Hamilton-convention unit quaternion (w, x, y, z) to rotation matrix."""
    w, x, y, z = np.asarray(q, dtype=float)
    n = np.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(R: np.ndarray) -> np.ndarray:
    """Rotation matrix to Hamilton quaternion (w, x, y, z), w >= 0."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k]) * 2
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


# --- Division model ---

def distort_div(p: np.ndarray, lam: float) -> np.ndarray:
    """Forward division model: measured point -> undistorted homogeneous point.

    Returns [x, y, 1 + lam * (x^2 + y^2)].  Total function; a non-positive
    third component must be handled by the caller.
    """
    x, y = float(p[0]), float(p[1])
    return np.array([x, y, 1.0 + lam * (x * x + y * y)])


def undistort(p: np.ndarray, lam: float) -> np.ndarray:
    """Inhomogeneous pinhole point corresponding to a measured distorted point."""
    h = distort_div(p, lam)
    if h[2] <= 0:
        raise NoRealRoot("point beyond the division-model singularity")
    return h[:2] / h[2]


def redistort(p: np.ndarray, lam: float) -> np.ndarray:
    """Inverse of the division model: undistorted pinhole point -> measured point.

    Solves lam*r_u*r_d^2 - r_d + r_u = 0 for the distorted radius, taking the
    root continuous with lam -> 0.  Raises NoRealRoot when 1 - 4*lam*r_u^2 < 0.
    """
    p = np.asarray(p, dtype=float)
    r2 = float(p[0] ** 2 + p[1] ** 2)
    if lam == 0.0 or r2 == 0.0:
        return p.copy()
    disc = 1.0 - 4.0 * lam * r2
    if disc < 0:
        raise NoRealRoot(f"discriminant {disc:.3e} < 0")
    scale = 2.0 / (1.0 + np.sqrt(disc))
    return p * scale


def redistort_many(pts: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized redistort; returns (points, valid mask) instead of raising."""
    pts = np.asarray(pts, dtype=float)
    if lam == 0.0:
        return pts.copy(), np.ones(len(pts), dtype=bool)
    r2 = np.einsum("ij,ij->i", pts, pts)
    disc = 1.0 - 4.0 * lam * r2
    valid = disc >= 0
    scale = np.where(valid, 2.0 / (1.0 + np.sqrt(np.where(valid, disc, 0.0))), np.nan)
    return pts * scale[:, None], valid


# --- Gravity alignment and homography composition ---

def align_point(p: np.ndarray, R: np.ndarray, intr: Intrinsics) -> np.ndarray:
    """Gravity-aligned ray y = R^T K^{-1} [x, y, 1]."""
    x, y = float(p[0]), float(p[1])
    return np.asarray(R).T @ np.array([x / intr.f, y / intr.f, 1.0])


def align_undistorted(p: np.ndarray, R: np.ndarray, intr: Intrinsics) -> np.ndarray:
    """Aligned ray of a measured (distorted) point: R^T K^{-1} phi(p, lam)."""
    h = distort_div(p, intr.lam)
    h[:2] /= intr.f
    return np.asarray(R).T @ h


def compose_homography(hy: MotionHomography, r1: np.ndarray, r2: np.ndarray,
                       intr: Intrinsics) -> np.ndarray:
    """Pixel-domain homography H ~ K R2 H_y R1^T K^{-1}, scaled so h33 = 1."""
    H = intr.K @ np.asarray(r2) @ hy.matrix @ np.asarray(r1).T @ intr.K_inv
    return normalize_h33(H)


def normalize_h33(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if abs(H[2, 2]) < _H33_TOL:
        raise NormalizationFailure("h33 entry too small to normalize")
    return H / H[2, 2]


def extract_pose(hy: MotionHomography, r1: np.ndarray, r2: np.ndarray) -> RelativePose:
    """Relative pose from the motion homography: R_rel = R2 R1^T, t_rel ~ R2 t."""
    t = hy.translation
    nt = np.linalg.norm(t)
    if nt < _ZERO_T_TOL:
        raise ZeroTranslation("pure rotation: translation direction undefined")
    r1 = np.asarray(r1)
    r2 = np.asarray(r2)
    t_rel = r2 @ t
    return RelativePose(rotation=r2 @ r1.T, translation_dir=t_rel / np.linalg.norm(t_rel))


# --- Error metrics ---

def homography_error(H_est: np.ndarray, H_gt: np.ndarray) -> float:
    """Frobenius distance of h33-normalized homographies, relative to ||H_gt||_F."""
    He = normalize_h33(H_est)
    Hg = normalize_h33(H_gt)
    return float(np.linalg.norm(He - Hg) / np.linalg.norm(Hg))


def _clamped_arccos(c: float, what: str) -> float:
    if abs(c) > 1.0 + 1e-9:
        LOG.debug("DomainClamp: %s arccos argument %.3e clamped", what, c)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def rotation_error(R_est: np.ndarray, R_gt: np.ndarray) -> float:
    """Angle of the residual rotation, arccos((tr(R_gt R_est^T) - 1) / 2)."""
    c = (np.trace(np.asarray(R_gt) @ np.asarray(R_est).T) - 1.0) / 2.0
    return _clamped_arccos(c, "rotation")


def translation_error(t_est: np.ndarray, t_gt: np.ndarray) -> float:
    """Angle between translation directions, folded to [0, pi/2].

    The absolute dot product is used because homography decomposition leaves
    the sign of (t, n) unobservable.
    """
    t_est = np.asarray(t_est, dtype=float)
    t_gt = np.asarray(t_gt, dtype=float)
    ne, ng = np.linalg.norm(t_est), np.linalg.norm(t_gt)
    if ne == 0 or ng == 0:
        raise ZeroTranslation("translation must be nonzero")
    c = abs(float(t_gt @ t_est)) / (ne * ng)
    return _clamped_arccos(c, "translation")


def focal_error(f_est: float, f_gt: float) -> float:
    return abs(f_gt - f_est) / f_gt


def lambda_error(lam_est: float, lam_gt: float) -> float:
    """Relative error in lambda; absolute when lam_gt = 0 (the relative
    formula divides by zero there)."""
    if lam_gt == 0.0:
        return abs(lam_est)
    return abs(lam_gt - lam_est) / abs(lam_gt)


def pose_errors(est: RelativePose, f_est: float,
                gt: RelativePose, f_gt: float) -> tuple[float, float, float]:
    """(e_R, e_t, e_f) between an estimated and a ground-truth pose."""
    e_r = rotation_error(est.rotation, gt.rotation)
    e_t = translation_error(est.translation_dir, gt.translation_dir)
    return e_r, e_t, focal_error(f_est, f_gt)
