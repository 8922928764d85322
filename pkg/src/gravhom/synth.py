"""Forward scene generator and experiment protocols.

Scenes are built the same way the solvers see them: a ground plane with
unit normal along gravity at distance 1 from the first camera, two
world-to-camera rotations, and a translation t so that the aligned-frame
homography is H_y = I + t n^T.  Points are projected through K, pushed
through the inverse division model into distorted measurements, and
optionally corrupted with pixel noise, uniform outliers and yaw drift on
the reported rotations.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import solvers
from .exceptions import GenerationFailure, GravhomError, NoRealRoot
from .geometry import (
    Correspondence,
    Intrinsics,
    MotionHomography,
    RelativePose,
    compose_homography,
    extract_pose,
    homography_error,
    lambda_error,
    pose_errors,
    redistort,
    redistort_many,
    rot_x,
    rot_y,
    rot_z,
    undistort,
)

DEFAULT_IMAGE = (640, 480)


@dataclass(frozen=True)
class SceneConfig:
    """Parameters of one synthetic scene."""

    n_points: int = 100
    f_gt: float = 1.0
    lambda_gt: float = 0.0
    translation_range: tuple[float, float] = (0.05, 0.5)
    tilt_max_deg: float = 30.0
    yaw_max_deg: float = 180.0
    noise_sigma: float = 0.0          # pixel-domain Gaussian sigma
    outlier_fraction: float = 0.0
    yaw_drift_deg: float = 0.0
    rng_seed: int = 0
    image_size: tuple[int, int] = DEFAULT_IMAGE

    def __post_init__(self):
        if not (self.f_gt > 0):
            raise ValueError("f_gt must be positive")
        if not (0 <= self.outlier_fraction < 1):
            raise ValueError("outlier_fraction must be in [0, 1)")

    @property
    def scale(self) -> float:
        """Half the image diagonal in pixels; the unit of normalized coords."""
        w, h = self.image_size
        return 0.5 * float(np.hypot(w, h))


@dataclass
class SyntheticInstance:
    """One generated problem instance with full ground truth."""

    pts1: np.ndarray                  # (n, 2) distorted, normalized, frame 1
    pts2: np.ndarray
    r1_reported: np.ndarray
    r2_reported: np.ndarray
    r1_true: np.ndarray
    r2_true: np.ndarray
    hy_gt: MotionHomography
    H_gt: np.ndarray                  # pixel homography, h33 = 1
    pose_gt: RelativePose
    f_gt: float
    lambda_gt: float
    inlier_mask: np.ndarray
    config: SceneConfig

    @property
    def scale(self) -> float:
        return self.config.scale

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(self.f_gt, self.lambda_gt)

    def correspondences(self, indices=None) -> list[Correspondence]:
        idx = range(len(self.pts1)) if indices is None else indices
        return [Correspondence(self.pts1[i], self.pts2[i],
                               self.r1_reported, self.r2_reported)
                for i in idx]


def instance_seed(base_seed: int, index: int) -> int:
    """Derived per-instance seed; hash mixing keeps parallel runs reproducible."""
    h = hashlib.sha256(f"{base_seed}:{index}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def _sample_rotation(rng: np.random.Generator, cfg: SceneConfig) -> np.ndarray:
    tilt = np.deg2rad(cfg.tilt_max_deg)
    yaw = np.deg2rad(cfg.yaw_max_deg)
    return (rot_x(rng.uniform(-tilt, tilt))
            @ rot_z(rng.uniform(-tilt, tilt))
            @ rot_y(rng.uniform(-yaw, yaw)))


def sample_scene_params(rng: np.random.Generator, distortion: bool) -> dict:
    """Per-instance (f, lambda) draws covering realistic wide-angle optics."""
    return {
        "f_gt": float(rng.uniform(0.5, 2.5)),
        "lambda_gt": float(rng.uniform(-0.6, 0.0)) if distortion else 0.0,
    }


def _project_points(rng, config, intr, r1, r2, t, bx, by):
    """Points visible in both frames for one pose draw, or None.

    Candidates are drawn and validated in fixed-size batches, so the draw
    pattern (and hence the instance) depends only on the seed.
    """
    n = config.n_points
    lam = config.lambda_gt
    batch = 4 * max(n, 1)
    budget = 50 * max(n, 1)
    kept1: list[np.ndarray] = []
    kept2: list[np.ndarray] = []
    total = 0
    while total < n:
        if budget <= 0:
            return None
        budget -= batch
        # Sample measured points in frame 1 and lift them to the plane
        # n.X = 1; every validity condition is applied as a mask.
        p1 = rng.uniform([-bx, -by], [bx, by], size=(batch, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            h3 = 1.0 + lam * np.einsum("ij,ij->i", p1, p1)
            valid = h3 > 0
            u = p1 / (h3[:, None] * intr.f)
            rays = np.column_stack([u, np.ones(batch)]) @ r1
            valid &= rays[:, 1] > 1e-6
            X = rays / rays[:, 1:2]            # points on the plane, frame 1
            v2 = (X + t) @ (intr.K @ r2).T     # aligned frame of camera 2
            valid &= v2[:, 2] > 1e-9
            q = v2[:, :2] / v2[:, 2:3]
            p2, ok = redistort_many(q, lam)
            valid &= ok
            valid &= (np.abs(p2[:, 0]) <= bx) & (np.abs(p2[:, 1]) <= by)
        idx = np.flatnonzero(valid)
        kept1.append(p1[idx])
        kept2.append(p2[idx])
        total += idx.size
    pts1 = np.concatenate(kept1)[:n]
    pts2 = np.concatenate(kept2)[:n]
    return pts1, pts2


def generate(config: SceneConfig, max_retries: int = 200) -> SyntheticInstance:
    """Generate one instance; raises GenerationFailure if visibility fails."""
    rng = np.random.default_rng(config.rng_seed)
    intr = Intrinsics(config.f_gt, config.lambda_gt)
    w, h = config.image_size
    scale = config.scale
    bx, by = 0.5 * w / scale, 0.5 * h / scale  # normalized half extents

    for _attempt in range(max_retries):
        r1 = _sample_rotation(rng, config)
        r2 = _sample_rotation(rng, config)
        lo, hi = config.translation_range
        d = rng.normal(size=3)
        t = d / np.linalg.norm(d) * rng.uniform(lo, hi)
        if abs(1.0 + t[1]) < 0.2:   # keep H_y invertible (h2 = 1 + t_y)
            continue
        pts = _project_points(rng, config, intr, r1, r2, t, bx, by)
        if pts is not None:
            pts1, pts2 = pts
            break
    else:
        raise GenerationFailure("visibility constraints could not be met")
    hy = MotionHomography(t[0], 1.0 + t[1], t[2])

    inlier_mask = np.ones(config.n_points, dtype=bool)
    n_out = int(np.floor(config.outlier_fraction * config.n_points))
    if n_out:
        out_idx = rng.choice(config.n_points, size=n_out, replace=False)
        pts2[out_idx] = rng.uniform([-bx, -by], [bx, by], size=(n_out, 2))
        inlier_mask[out_idx] = False

    if config.noise_sigma > 0:
        sig = config.noise_sigma / scale
        pts1 += rng.normal(scale=sig, size=pts1.shape)
        pts2 += rng.normal(scale=sig, size=pts2.shape)

    r2_reported = r2 @ rot_y(np.deg2rad(config.yaw_drift_deg))

    return SyntheticInstance(
        pts1=pts1, pts2=pts2,
        r1_reported=r1, r2_reported=r2_reported,
        r1_true=r1, r2_true=r2,
        hy_gt=hy,
        H_gt=compose_homography(hy, r1, r2, intr),
        pose_gt=extract_pose(hy, r1, r2),
        f_gt=config.f_gt, lambda_gt=config.lambda_gt,
        inlier_mask=inlier_mask, config=config,
    )


# ---------------------------------------------------------------------------
# Experiment protocols
# ---------------------------------------------------------------------------

def _solution_errors(inst: SyntheticInstance, sols) -> dict:
    """Errors of the best (minimum homography error) solution of an instance."""
    intr_gt = inst.intrinsics
    best = None
    for s in sols:
        f = s.f if s.f is not None else inst.f_gt
        lam = s.lam if s.lam is not None else inst.lambda_gt
        try:
            # The estimated model lives on the reported rotations.
            H = compose_homography(s.hy, inst.r1_reported, inst.r2_reported,
                                   Intrinsics(f, lam))
            e_h = homography_error(H, inst.H_gt)
        except GravhomError:
            continue
        if best is None or e_h < best["e_h"]:
            rec = {"e_h": e_h,
                   "e_f": abs(inst.f_gt - f) / inst.f_gt,
                   "e_lam": lambda_error(lam, inst.lambda_gt)}
            try:
                pose = extract_pose(s.hy, inst.r1_reported, inst.r2_reported)
                e_r, e_t, _ = pose_errors(pose, f, inst.pose_gt, inst.f_gt)
            except GravhomError:
                e_r, e_t = np.nan, np.nan
            rec["e_r"], rec["e_t"] = e_r, e_t
            rec["n_solutions"] = len(sols)
            best = rec
    return best


def run_solver_on_instance(inst: SyntheticInstance, solver: str) -> dict:
    """Solve a minimal sample of an instance, returning an error record."""
    m = solvers.MIN_SAMPLE[solver]
    corrs = inst.correspondences(range(m))
    rec = {"seed": inst.config.rng_seed, "solver": solver,
           "f_gt": inst.f_gt, "lambda_gt": inst.lambda_gt,
           "status": "ok", "n_solutions": 0,
           "e_h": np.nan, "e_f": np.nan, "e_lam": np.nan,
           "e_r": np.nan, "e_t": np.nan}
    try:
        intr = inst.intrinsics if solver == "calibrated" else None
        sols = solvers.solve(corrs, solver, intr)
    except GravhomError as exc:
        rec["status"] = exc.category
        return rec
    errs = _solution_errors(inst, sols)
    if errs is None:
        rec["status"] = "unusable-solutions"
        return rec
    rec.update(errs)
    return rec


def _minimal_config(solver: str, seed: int, rng: np.random.Generator,
                    noise_sigma: float = 0.0, n_points: int | None = None,
                    yaw_drift_deg: float = 0.0) -> SceneConfig:
    params = sample_scene_params(rng, distortion=(solver == "frhfr"))
    n = n_points if n_points is not None else solvers.MIN_SAMPLE[solver]
    return SceneConfig(n_points=n, noise_sigma=noise_sigma,
                       yaw_drift_deg=yaw_drift_deg, rng_seed=seed, **params)


def stability_experiment(n_instances: int, solver: str, base_seed: int = 0,
                         start: int = 0) -> list[dict]:
    """Noise-free error records over randomly generated problem instances.

    ``start`` offsets the instance index so a run split into chunks
    reproduces the records of a single sequential run bit for bit.
    """
    records = []
    for i in range(start, start + n_instances):
        seed = instance_seed(base_seed, i)
        rng = np.random.default_rng(seed)
        cfg = _minimal_config(solver, seed, rng)
        try:
            inst = generate(cfg)
        except GenerationFailure:
            records.append({"seed": seed, "solver": solver, "status": "generation-failure"})
            continue
        rec = run_solver_on_instance(inst, solver)
        rec["instance"] = i
        records.append(rec)
    return records


_QUANT_KEYS = ("e_r", "e_t", "e_f", "e_lam", "e_h")


def quantile_summary(records: list[dict], keys=_QUANT_KEYS) -> dict:
    """Boxplot-style quantiles (min, q25, median, q75, max) per error metric."""
    out = {}
    for k in keys:
        vals = np.array([r[k] for r in records
                         if r.get("status") == "ok" and np.isfinite(r.get(k, np.nan))])
        if vals.size == 0:
            out[k] = None
            continue
        q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
        out[k] = {"min": q[0], "q25": q[1], "median": q[2], "q75": q[3], "max": q[4]}
    out["n_ok"] = sum(1 for r in records if r.get("status") == "ok")
    out["n_failed"] = sum(1 for r in records if r.get("status") != "ok")
    return out


def noise_experiment(sigmas: list[float], n_per_level: int, solver: str,
                     base_seed: int = 0,
                     seed_index_offset: int = 0) -> tuple[list[dict], dict]:
    """Error records and per-sigma quantiles for a Gaussian noise sweep.

    ``seed_index_offset`` shifts the global seed index so per-sigma blocks
    run in isolation (e.g. one worker per sigma) match a sequential sweep.
    """
    records = []
    for si, sigma in enumerate(sigmas):
        for i in range(n_per_level):
            seed = instance_seed(base_seed,
                                 seed_index_offset + si * n_per_level + i)
            rng = np.random.default_rng(seed)
            cfg = _minimal_config(solver, seed, rng, noise_sigma=sigma)
            try:
                inst = generate(cfg)
            except GenerationFailure:
                records.append({"seed": seed, "solver": solver, "sigma": sigma,
                                "status": "generation-failure"})
                continue
            rec = run_solver_on_instance(inst, solver)
            rec["sigma"] = sigma
            rec["instance"] = i
            records.append(rec)
    summary = {str(s): quantile_summary([r for r in records if r.get("sigma") == s])
               for s in sigmas}
    return records, summary


def drift_experiment(yaw_drifts: list[float], solver: str = "fhf",
                     noise_sigma: float = 0.0, n_per_level: int = 200,
                     n_points: int = 50, base_seed: int = 0) -> list[dict]:
    """Solver-only vs LO-refined errors across yaw-drift magnitudes."""
    from .ransac import lo_refine, reprojection_errors  # avoids a cycle

    def full_set_cost(inst, sol):
        f = sol.f if sol.f is not None else inst.f_gt
        lam = sol.lam if sol.lam is not None else inst.lambda_gt
        e = reprojection_errors(sol.hy, Intrinsics(f, lam), inst.pts1,
                                inst.pts2, inst.r1_reported, inst.r2_reported)
        return float(np.sum(np.minimum(e * inst.scale, 10.0) ** 2))

    records = []
    for di, drift in enumerate(yaw_drifts):
        for i in range(n_per_level):
            seed = instance_seed(base_seed, di * n_per_level + i)
            rng = np.random.default_rng(seed)
            cfg = _minimal_config(solver, seed, rng, noise_sigma=noise_sigma,
                                  n_points=n_points, yaw_drift_deg=drift)
            try:
                inst = generate(cfg)
            except GenerationFailure:
                records.append({"seed": seed, "solver": solver, "drift": drift,
                                "status": "generation-failure"})
                continue
            rec = run_solver_on_instance(inst, solver)
            rec["drift"] = drift
            rec["instance"] = i
            rec["e_h_lo"] = np.nan
            if rec["status"] == "ok":
                try:
                    corrs = inst.correspondences(range(solvers.MIN_SAMPLE[solver]))
                    intr = inst.intrinsics if solver == "calibrated" else None
                    sols = solvers.solve(corrs, solver, intr)
                    # The algebraic residual only ranks fits on the minimal
                    # sample; pick the start by cost over all points instead.
                    best = min(sols, key=lambda s: full_set_cost(inst, s))
                    refined = lo_refine(best, inst.correspondences(),
                                        scale=inst.scale)
                    errs = _solution_errors(inst, [refined])
                    if errs is not None:
                        rec["e_h_lo"] = errs["e_h"]
                except GravhomError:
                    pass
            records.append(rec)
    return records
