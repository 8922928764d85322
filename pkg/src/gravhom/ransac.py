"""Locally-optimized RANSAC over gravity-aligned homography hypotheses.

The loop draws minimal samples, scores candidate models by distorted-domain
reprojection distance, and refines new best models with a small
Levenberg-Marquardt search over the homography parameters (plus focal
length and distortion coefficient when the solver estimates them).

Two stopping modes are supported: a wall-clock budget for real-time use,
and a fixed iteration cap which keeps runs bitwise reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import solvers
from .exceptions import GravhomError, InsufficientData, NoModelFound
from .geometry import (
    Correspondence,
    Intrinsics,
    MotionHomography,
    redistort_many,
)
from .solvers import MIN_SAMPLE, SolverSolution

_MIN_LO_POINTS = 4


def reprojection_errors(hy: MotionHomography, intr: Intrinsics,
                        pts1: np.ndarray, pts2: np.ndarray,
                        r1: np.ndarray, r2: np.ndarray,
                        symmetric: bool = False) -> np.ndarray:
    """Distorted-domain distances between mapped pts1 and measured pts2.

    Distances are in normalized units (multiply by the half-diagonal scale
    for pixels).  Points that cannot be mapped (behind the camera, outside
    the division-model domain) get an infinite error.  With ``symmetric``
    the mean of the forward and backward transfer distances is returned.
    """
    fwd = _one_sided(hy.matrix, intr, pts1, pts2, r1, r2)
    if not symmetric:
        return fwd
    h1, h2, h3 = hy.h1, hy.h2, hy.h3
    if abs(h2) < 1e-12:
        return np.full(len(pts1), np.inf)
    hy_inv = np.array([
        [1.0, -h1 / h2, 0.0],
        [0.0, 1.0 / h2, 0.0],
        [0.0, -h3 / h2, 1.0],
    ])
    bwd = _one_sided(hy_inv, intr, pts2, pts1, r2, r1)
    return 0.5 * (fwd + bwd)


def _one_sided(hy_mat: np.ndarray, intr: Intrinsics,
               src: np.ndarray, dst: np.ndarray,
               r_src: np.ndarray, r_dst: np.ndarray) -> np.ndarray:
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    n = len(src)
    z = 1.0 + intr.lam * np.einsum("ij,ij->i", src, src)
    rays = np.empty((n, 3))
    rays[:, 0] = src[:, 0] / intr.f
    rays[:, 1] = src[:, 1] / intr.f
    rays[:, 2] = z
    mapped = (rays @ r_src) @ hy_mat.T @ r_dst.T  # rows: R_dst Hy R_src^T ray
    errs = np.full(n, np.inf)
    ok = mapped[:, 2] > 1e-12
    if not np.any(ok):
        return errs
    pin = mapped[ok, :2] * (intr.f / mapped[ok, 2, None])
    redist, valid = redistort_many(pin, intr.lam)
    d = np.full(ok.sum(), np.inf)
    d[valid] = np.linalg.norm(redist[valid] - dst[ok][valid], axis=1)
    errs[ok] = d
    return errs


def _unpack(corrs: list[Correspondence]):
    pts1 = np.array([c.p1 for c in corrs], dtype=float)
    pts2 = np.array([c.p2 for c in corrs], dtype=float)
    return pts1, pts2, np.asarray(corrs[0].r1), np.asarray(corrs[0].r2)


def _model_residuals(params: np.ndarray, tag: str, pts1, pts2, r1, r2,
                     symmetric: bool, base: SolverSolution,
                     known: Intrinsics | None) -> np.ndarray:
    h1, h2, h3 = params[:3]
    if tag in ("fhf", "frhfr"):
        f = params[3]
    else:
        f = base.f if base.f is not None else (known.f if known else 1.0)
    if tag == "frhfr":
        lam = params[4]
    elif base.lam is not None:
        lam = base.lam
    else:
        lam = known.lam if known else 0.0
    if f <= 1e-3:
        return np.full(len(pts1), np.inf)
    e = reprojection_errors(MotionHomography(h1, h2, h3), Intrinsics(f, lam),
                            pts1, pts2, r1, r2, symmetric)
    # A finite ceiling keeps one unmappable point from wiping out the step.
    return np.minimum(e, 10.0)


def lo_refine(sol: SolverSolution, corrs: list[Correspondence],
              scale: float | None = None, max_steps: int = 10,
              symmetric: bool = False,
              intr: Intrinsics | None = None) -> SolverSolution:
    """Levenberg-Marquardt refinement of a solver hypothesis.

    Optimizes (h1, h2, h3) and, depending on the hypothesis kind, f and
    lambda, over the summed squared reprojection distances of ``corrs``.
    The cost never increases.  At least four correspondences are required
    to constrain the parameters.  ``scale`` is accepted for interface
    symmetry with pixel-threshold callers and does not affect the optimum.
    """
    del scale
    if len(corrs) < _MIN_LO_POINTS:
        raise InsufficientData(
            f"{len(corrs)} correspondences < {_MIN_LO_POINTS} needed for "
            "local refinement")
    pts1, pts2, r1, r2 = _unpack(corrs)
    tag = sol.tag
    p = [sol.hy.h1, sol.hy.h2, sol.hy.h3]
    if tag in ("fhf", "frhfr"):
        p.append(sol.f)
    if tag == "frhfr":
        p.append(sol.lam)
    p = np.array(p, dtype=float)

    def residuals(q):
        return _model_residuals(q, tag, pts1, pts2, r1, r2, symmetric, sol, intr)

    r = residuals(p)
    cost = float(np.sum(r * r))
    if not np.isfinite(cost):
        return sol
    mu = 1e-3
    for _ in range(max_steps):
        # Forward-difference Jacobian.
        J = np.empty((len(r), len(p)))
        for j in range(len(p)):
            step = 1e-6 * (1.0 + abs(p[j]))
            pj = p.copy()
            pj[j] += step
            J[:, j] = (residuals(pj) - r) / step
        g = J.T @ r
        H = J.T @ J
        improved = False
        for _try in range(5):
            try:
                delta = np.linalg.solve(H + mu * np.diag(np.maximum(np.diag(H), 1e-12)),
                                        -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            r_new = residuals(p + delta)
            cost_new = float(np.sum(r_new * r_new))
            if np.isfinite(cost_new) and cost_new < cost:
                p = p + delta
                r, cost = r_new, cost_new
                mu = max(mu / 10.0, 1e-12)
                improved = True
                break
            mu *= 10.0
        if not improved:
            break

    f = float(p[3]) if tag in ("fhf", "frhfr") else sol.f
    lam = float(p[4]) if tag == "frhfr" else sol.lam
    return SolverSolution(
        hy=MotionHomography(float(p[0]), float(p[1]), float(p[2])),
        f=f, lam=lam, residual=float(np.sqrt(cost / len(r))), tag=tag,
        spurious_filtered=sol.spurious_filtered,
    )


@dataclass
class RansacConfig:
    """Knobs of the locally-optimized RANSAC loop.

    ``threshold_px`` is converted to normalized units through ``scale``
    (half the image diagonal in pixels).  With ``time_budget_ms`` set, the
    loop stops when the wall clock runs out; otherwise it runs a fixed,
    reproducible number of iterations.
    """

    solver: str = "frhfr"
    threshold_px: float = 4.0
    scale: float = 400.0
    confidence: float = 0.99
    max_iterations: int = 1000
    time_budget_ms: float | None = None
    lo_max_steps: int = 10
    symmetric: bool = False
    seed: int = 0
    intrinsics: Intrinsics | None = None


@dataclass
class RansacReport:
    """Outcome of one RANSAC run."""

    solution: SolverSolution
    inlier_mask: np.ndarray
    n_iterations: int
    best_inlier_count: int
    stop_reason: str
    trace: list[dict] = field(default_factory=list)
    elapsed_ms: float | None = None
    n_solver_failures: int = 0


def _required_iterations(inlier_ratio: float, m: int, confidence: float) -> float:
    good = inlier_ratio ** m
    if good >= 1.0:
        return 1.0
    if good <= 0.0:
        return np.inf
    return np.log(max(1.0 - confidence, 1e-300)) / np.log(1.0 - good)


def run_ransac(pts1: np.ndarray, pts2: np.ndarray,
               r1: np.ndarray, r2: np.ndarray,
               config: RansacConfig) -> RansacReport:
    """Minimal-sample consensus with local optimization on new best models."""
    pts1 = np.asarray(pts1, dtype=float)
    pts2 = np.asarray(pts2, dtype=float)
    n = len(pts1)
    m = MIN_SAMPLE[config.solver]
    if n < max(m, MIN_SAMPLE[config.solver]):
        raise InsufficientData(f"{n} correspondences < minimal sample {m}")
    if config.solver == "calibrated" and config.intrinsics is None:
        raise ValueError("calibrated RANSAC requires intrinsics")

    thr = config.threshold_px / config.scale
    rng = np.random.default_rng(config.seed)
    timed = config.time_budget_ms is not None
    t0 = time.perf_counter()

    best: SolverSolution | None = None
    best_count = -1
    best_errs = None
    required = float(config.max_iterations)
    trace: list[dict] = []
    n_failures = 0
    stop_reason = "max-iterations"
    it = 0

    def score(sol: SolverSolution):
        intr = Intrinsics(sol.f if sol.f is not None else config.intrinsics.f,
                          sol.lam if sol.lam is not None
                          else (config.intrinsics.lam if config.intrinsics else 0.0))
        e = reprojection_errors(sol.hy, intr, pts1, pts2, r1, r2, config.symmetric)
        return e, int(np.sum(e <= thr))

    while it < config.max_iterations:
        if it >= required:
            stop_reason = "confidence"
            break
        if timed and (time.perf_counter() - t0) * 1e3 > config.time_budget_ms:
            stop_reason = "time-budget"
            break
        it += 1
        idx = rng.choice(n, size=m, replace=False)
        corrs = [Correspondence(pts1[i], pts2[i], r1, r2) for i in idx]
        try:
            sols = solvers.solve(corrs, config.solver, config.intrinsics)
        except GravhomError:
            n_failures += 1
            trace.append(_trace_row(it, 0, best_count, timed, t0))
            continue

        iter_best = -1
        for sol in sols:
            try:
                errs, count = score(sol)
            except GravhomError:
                continue
            iter_best = max(iter_best, count)
            if count > best_count:
                best, best_count, best_errs = sol, count, errs
                if count >= _MIN_LO_POINTS:
                    inl = np.nonzero(errs <= thr)[0]
                    refined = lo_refine(
                        sol, [Correspondence(pts1[i], pts2[i], r1, r2) for i in inl],
                        max_steps=config.lo_max_steps, symmetric=config.symmetric,
                        intr=config.intrinsics)
                    r_errs, r_count = score(refined)
                    if r_count >= best_count:
                        best, best_count, best_errs = refined, r_count, r_errs
                required = min(required,
                               _required_iterations(best_count / n, m,
                                                    config.confidence))
        trace.append(_trace_row(it, max(iter_best, 0), best_count, timed, t0))

    if best is None:
        raise NoModelFound(f"no candidate model in {it} iterations "
                           f"({n_failures} solver failures)")

    # Final local optimization, re-run while the consensus set keeps growing.
    prev_inl = None
    for _round in range(3):
        inl = np.nonzero(best_errs <= thr)[0]
        if inl.size < _MIN_LO_POINTS or (prev_inl is not None
                                         and np.array_equal(inl, prev_inl)):
            break
        prev_inl = inl
        refined = lo_refine(
            best, [Correspondence(pts1[i], pts2[i], r1, r2) for i in inl],
            max_steps=config.lo_max_steps, symmetric=config.symmetric,
            intr=config.intrinsics)
        r_errs, r_count = score(refined)
        if r_count < best_count:
            break
        best, best_count, best_errs = refined, r_count, r_errs

    elapsed = (time.perf_counter() - t0) * 1e3
    return RansacReport(
        solution=best,
        inlier_mask=best_errs <= thr,
        n_iterations=it,
        best_inlier_count=best_count,
        stop_reason=stop_reason,
        trace=trace,
        elapsed_ms=elapsed if timed else None,
        n_solver_failures=n_failures,
    )


def _trace_row(iteration: int, count: int, best: int, timed: bool, t0: float) -> dict:
    row = {"iteration": iteration, "inlier_count": count,
           "best_inlier_count": max(best, 0)}
    if timed:
        # Wall-clock timestamps are only recorded in budget mode so that
        # iteration-capped runs stay bitwise reproducible.
        row["elapsed_ms"] = (time.perf_counter() - t0) * 1e3
    return row


class RansacHomographyEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`run_ransac`.

    ``fit`` expects X of shape (n, 4) with columns (x1, y1, x2, y2) in
    normalized image coordinates, plus the two frame rotations.  Fitted
    attributes: ``best_solution_``, ``inlier_mask_``, ``report_``.
    """

    def __init__(self, solver: str = "frhfr", threshold_px: float = 4.0,
                 scale: float = 400.0, confidence: float = 0.99,
                 max_iterations: int = 1000, time_budget_ms: float | None = None,
                 lo_max_steps: int = 10, symmetric: bool = False,
                 seed: int = 0, f: float | None = None, lam: float = 0.0):
        self.solver = solver
        self.threshold_px = threshold_px
        self.scale = scale
        self.confidence = confidence
        self.max_iterations = max_iterations
        self.time_budget_ms = time_budget_ms
        self.lo_max_steps = lo_max_steps
        self.symmetric = symmetric
        self.seed = seed
        self.f = f
        self.lam = lam

    def fit(self, X, y=None, *, r1: np.ndarray, r2: np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 4:
            raise ValueError("X must be (n, 4): columns x1, y1, x2, y2")
        intr = Intrinsics(self.f, self.lam) if self.f is not None else None
        config = RansacConfig(
            solver=self.solver, threshold_px=self.threshold_px,
            scale=self.scale, confidence=self.confidence,
            max_iterations=self.max_iterations,
            time_budget_ms=self.time_budget_ms,
            lo_max_steps=self.lo_max_steps, symmetric=self.symmetric,
            seed=self.seed, intrinsics=intr,
        )
        self.report_ = run_ransac(X[:, :2], X[:, 2:], r1, r2, config)
        self.best_solution_ = self.report_.solution
        self.inlier_mask_ = self.report_.inlier_mask
        return self

    def score(self, X, y=None):
        """Inlier fraction of the fitted model (requires a prior fit)."""
        if not hasattr(self, "report_"):
            raise NoModelFound("estimator is not fitted")
        return float(np.mean(self.inlier_mask_))
