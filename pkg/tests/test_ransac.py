import numpy as np
import pytest

from gravhom import ransac, synth
from gravhom.exceptions import InsufficientData
from gravhom.geometry import Correspondence, Intrinsics, MotionHomography
from gravhom.ransac import (
    RansacConfig,
    RansacHomographyEstimator,
    lo_refine,
    reprojection_errors,
    run_ransac,
)
from gravhom.solvers import SolverSolution

from conftest import make_instance


def _gt_solution(inst, tag="frhfr"):
    return SolverSolution(hy=inst.hy_gt, f=inst.f_gt, lam=inst.lambda_gt,
                          residual=0.0, tag=tag)


# --- reprojection scoring ---

def test_ground_truth_scores_zero_on_noise_free_inliers():
    inst = make_instance(seed=20, n_points=30)
    errs = reprojection_errors(inst.hy_gt, inst.intrinsics, inst.pts1,
                               inst.pts2, inst.r1_true, inst.r2_true)
    assert np.max(errs) * inst.scale < 1e-9  # pixels


def test_identity_model_on_identical_pairs():
    pts = np.array([[0.1, 0.2], [-0.3, 0.1], [0.2, -0.4]])
    errs = reprojection_errors(MotionHomography(0, 1, 0), Intrinsics(1.0),
                               pts, pts, np.eye(3), np.eye(3))
    np.testing.assert_allclose(errs, 0, atol=1e-14)


def test_outliers_score_far_above_threshold():
    inst = make_instance(seed=21, n_points=100, outlier_fraction=0.3)
    errs = reprojection_errors(inst.hy_gt, inst.intrinsics, inst.pts1,
                               inst.pts2, inst.r1_true, inst.r2_true)
    out_errs = errs[~inst.inlier_mask] * inst.scale
    assert np.mean(out_errs > 4.0) > 0.9


def test_unscoreable_points_get_infinite_error():
    # Beyond the division-model singularity 1 + lam r^2 <= 0 the point has
    # no pinhole preimage and cannot be scored.
    pts1 = np.array([[1.5, 1.5]])
    pts2 = np.array([[0.1, 0.1]])
    errs = reprojection_errors(MotionHomography(0, 1, 0),
                               Intrinsics(1.0, -0.5),
                               pts1, pts2, np.eye(3), np.eye(3))
    assert np.isinf(errs[0])


def test_symmetric_scoring_agrees_at_ground_truth():
    inst = make_instance(seed=22, n_points=20)
    one = reprojection_errors(inst.hy_gt, inst.intrinsics, inst.pts1,
                              inst.pts2, inst.r1_true, inst.r2_true)
    sym = reprojection_errors(inst.hy_gt, inst.intrinsics, inst.pts1,
                              inst.pts2, inst.r1_true, inst.r2_true,
                              symmetric=True)
    assert np.max(sym) * inst.scale < 1e-9
    assert np.max(one) * inst.scale < 1e-9


# --- local optimization ---

def test_lo_refine_keeps_ground_truth():
    inst = make_instance(seed=23, n_points=30)
    refined = lo_refine(_gt_solution(inst), inst.correspondences())
    assert abs(refined.f - inst.f_gt) < 1e-9
    assert abs(refined.lam - inst.lambda_gt) < 1e-9


def test_lo_refine_recovers_perturbed_focal():
    inst = make_instance(seed=24, n_points=40)
    start = SolverSolution(hy=inst.hy_gt, f=inst.f_gt * 1.05,
                           lam=inst.lambda_gt, residual=0.0, tag="frhfr")
    refined = lo_refine(start, inst.correspondences(), max_steps=30)
    assert abs(refined.f - inst.f_gt) / inst.f_gt <= 1e-6


def test_lo_refine_three_inliers_precondition():
    inst = make_instance(seed=25)
    with pytest.raises(InsufficientData):
        lo_refine(_gt_solution(inst), inst.correspondences([0, 1, 2]))


def test_lo_refine_cost_nonincreasing_random_starts():
    """100 perturbed starts; the refined cost never exceeds the start cost."""
    inst = make_instance(seed=26, n_points=30, noise_sigma=0.5)
    corrs = inst.correspondences()
    pts1, pts2 = inst.pts1, inst.pts2
    rng = np.random.default_rng(0)

    def cost(sol):
        e = reprojection_errors(sol.hy, Intrinsics(sol.f, sol.lam), pts1,
                                pts2, inst.r1_reported, inst.r2_reported)
        return float(np.sum(np.minimum(e, 10.0) ** 2))

    for _ in range(100):
        start = SolverSolution(
            hy=MotionHomography(inst.hy_gt.h1 + rng.normal(scale=0.05),
                                inst.hy_gt.h2 + rng.normal(scale=0.05),
                                inst.hy_gt.h3 + rng.normal(scale=0.05)),
            f=inst.f_gt * (1 + rng.normal(scale=0.05)),
            lam=inst.lambda_gt + rng.normal(scale=0.05),
            residual=0.0, tag="frhfr")
        if start.f <= 0:
            continue
        refined = lo_refine(start, corrs, max_steps=5)
        assert cost(refined) <= cost(start) * (1 + 1e-12)


def test_lo_refine_calibrated_uses_known_intrinsics():
    inst = make_instance(solver="calibrated", seed=27, n_points=30,
                         lambda_gt=-0.2)
    start = SolverSolution(
        hy=MotionHomography(inst.hy_gt.h1 + 0.02, inst.hy_gt.h2,
                            inst.hy_gt.h3 - 0.02),
        f=None, lam=None, residual=0.0, tag="calibrated")
    refined = lo_refine(start, inst.correspondences(), intr=inst.intrinsics,
                        max_steps=30)
    np.testing.assert_allclose(
        [refined.hy.h1, refined.hy.h2, refined.hy.h3],
        [inst.hy_gt.h1, inst.hy_gt.h2, inst.hy_gt.h3], atol=1e-6)


# --- the full loop ---

def test_run_ransac_all_inliers_noise_free():
    inst = make_instance(seed=28, n_points=100)
    cfg = RansacConfig(solver="frhfr", threshold_px=4.0, scale=inst.scale,
                       max_iterations=100, seed=1)
    report = run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                        inst.r2_reported, cfg)
    assert report.inlier_mask.all()
    assert abs(report.solution.f - inst.f_gt) / inst.f_gt <= 1e-6
    assert abs(report.solution.lam - inst.lambda_gt) <= 1e-6


def test_run_ransac_insufficient_data():
    inst = make_instance(seed=29)
    cfg = RansacConfig(solver="frhfr", scale=inst.scale)
    with pytest.raises(InsufficientData):
        run_ransac(inst.pts1[:2], inst.pts2[:2], inst.r1_reported,
                   inst.r2_reported, cfg)


def test_run_ransac_contaminated_scene():
    inst = make_instance(seed=30, n_points=150, outlier_fraction=0.3,
                         noise_sigma=1.0)
    cfg = RansacConfig(solver="frhfr", threshold_px=4.0, scale=inst.scale,
                       max_iterations=500, seed=3)
    report = run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                        inst.r2_reported, cfg)
    est, gt = report.inlier_mask, inst.inlier_mask
    tp = np.sum(est & gt)
    assert tp / max(est.sum(), 1) >= 0.95   # precision
    assert tp / gt.sum() >= 0.95            # recall


def test_run_ransac_iteration_capped_determinism():
    inst = make_instance(seed=31, n_points=80, outlier_fraction=0.2,
                         noise_sigma=1.0)
    cfg = RansacConfig(solver="fhf", threshold_px=4.0, scale=inst.scale,
                       max_iterations=60, seed=7)
    cfg2 = RansacConfig(solver="fhf", threshold_px=4.0, scale=inst.scale,
                        max_iterations=60, seed=7)
    r1 = run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                    inst.r2_reported, cfg)
    r2 = run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                    inst.r2_reported, cfg2)
    assert r1.trace == r2.trace
    assert np.array_equal(r1.inlier_mask, r2.inlier_mask)
    assert r1.solution.hy == r2.solution.hy
    assert r1.elapsed_ms is None
    assert all("elapsed_ms" not in row for row in r1.trace)


def test_run_ransac_trace_monotone_best_count():
    inst = make_instance(seed=32, n_points=100, outlier_fraction=0.25,
                         noise_sigma=1.0)
    cfg = RansacConfig(solver="frhfr", threshold_px=4.0, scale=inst.scale,
                       max_iterations=80, seed=5)
    report = run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                        inst.r2_reported, cfg)
    best = [row["best_inlier_count"] for row in report.trace]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))


def test_run_ransac_time_budget_mode_records_clock():
    inst = make_instance(seed=33, n_points=60, outlier_fraction=0.2,
                         noise_sigma=1.0)
    cfg = RansacConfig(solver="fhf", threshold_px=4.0, scale=inst.scale,
                       max_iterations=100000, time_budget_ms=20.0, seed=2)
    report = run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                        inst.r2_reported, cfg)
    assert report.elapsed_ms is not None
    assert all("elapsed_ms" in row for row in report.trace)
    assert report.stop_reason in ("time-budget", "confidence")


def test_run_ransac_calibrated_requires_intrinsics():
    inst = make_instance(seed=34, n_points=20)
    cfg = RansacConfig(solver="calibrated", scale=inst.scale)
    with pytest.raises(ValueError):
        run_ransac(inst.pts1, inst.pts2, inst.r1_reported,
                   inst.r2_reported, cfg)


# --- sklearn-style wrapper ---

def test_estimator_fit_and_score():
    inst = make_instance(seed=35, n_points=80, outlier_fraction=0.2,
                         noise_sigma=1.0)
    X = np.hstack([inst.pts1, inst.pts2])
    est = RansacHomographyEstimator(solver="frhfr", scale=inst.scale,
                                    max_iterations=200, seed=4)
    est.fit(X, r1=inst.r1_reported, r2=inst.r2_reported)
    assert est.best_solution_.tag == "frhfr"
    assert est.inlier_mask_.sum() >= 0.9 * inst.inlier_mask.sum()
    assert 0 < est.score(X) <= 1


def test_estimator_get_set_params_round_trip():
    est = RansacHomographyEstimator(threshold_px=2.0)
    params = est.get_params()
    assert params["threshold_px"] == 2.0
    est.set_params(threshold_px=3.5)
    assert est.threshold_px == 3.5


def test_estimator_rejects_bad_shape():
    est = RansacHomographyEstimator()
    with pytest.raises(ValueError):
        est.fit(np.zeros((5, 3)), r1=np.eye(3), r2=np.eye(3))
