"""Minimal solvers for the gravity-aligned homography.

Three solvers are provided:

* ``solve_calibrated`` -- known intrinsics, 1.5 points (3 linear equations).
* ``solve_fhf``        -- unknown shared focal length, 2 points.  The four
  cross-product equations become M(w) [h; 1] = 0 with M quadratic in w; a
  nontrivial nullspace exists iff det M(w) = 0, a sextic whose spurious
  roots have nullspace vectors with vanishing last element.
* ``solve_frhfr``      -- unknown shared focal length and division-model
  coefficient, 2.5 points.  The three third-row equations are linear in the
  monomials of (t2_hat, t1_hat, f, lambda); Gauss-Jordan elimination of the
  t2_hat block yields consistency constraints, which together with two
  f-cleared first-row equations give a bivariate system in (f, lambda).
  lambda is eliminated against the quadratic constraint by modular
  reduction, leaving a univariate eliminant in f whose real roots are
  Newton-polished in 2-d; f = 0 solutions are saturated away.

All solver math happens in distortion-centered, half-diagonal-normalized
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import poly
from .exceptions import (
    DegenerateConfiguration,
    DegenerateInput,
    EliminationFailure,
    InsufficientData,
    NoSolution,
)
from .geometry import Correspondence, Intrinsics, MotionHomography, align_undistorted

_F_SATURATION = 1e-6
_SPURIOUS_TOL = 1e-8
_PIVOT_TOL = 1e-10

MIN_SAMPLE = {"calibrated": 2, "fhf": 2, "frhfr": 3}


@dataclass
class SolverSolution:
    """One hypothesis from a minimal solver.

    ``f``/``lam`` are None when the solver does not estimate them.
    ``residual`` is the held-out DLT equation value for frhfr/calibrated;
    the fhf minimal case consumes all four equations, so its residual is
    the smallest singular value of M(w) at the accepted root.
    """

    hy: MotionHomography
    f: float | None
    lam: float | None
    residual: float
    tag: str
    spurious_filtered: int = 0


# ---------------------------------------------------------------------------
# DLT rows: y2 x (H_y y1) = 0, linear in (h1, h2, h3, 1)
# ---------------------------------------------------------------------------

def _dlt_rows(y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """First two cross-product rows as a (2, 4) matrix over [h1, h2, h3, 1]."""
    b = y1[1]
    return np.array([
        [0.0, -y2[2] * b, y2[1] * b, y2[1] * y1[2]],
        [y2[2] * b, 0.0, -y2[0] * b, y2[2] * y1[0] - y2[0] * y1[2]],
    ])


def solve_calibrated(corrs: list[Correspondence], intr: Intrinsics) -> SolverSolution:
    """1.5-point solver: three scalar DLT equations, solved as A h = b.

    The fourth equation of the two correspondences is held out and its
    residual stored on the returned solution.
    """
    if len(corrs) < 2:
        raise InsufficientData("calibrated solver needs 2 correspondences")
    c0, c1 = corrs[0], corrs[1]
    y1a = align_undistorted(c0.p1, c0.r1, intr)
    y2a = align_undistorted(c0.p2, c0.r2, intr)
    y1b = align_undistorted(c1.p1, c1.r1, intr)
    y2b = align_undistorted(c1.p2, c1.r2, intr)

    rows_a = _dlt_rows(y1a, y2a)
    rows_b = _dlt_rows(y1b, y2b)
    system = np.vstack([rows_a, rows_b[:1]])
    A = system[:, :3]
    b = -system[:, 3]
    det = np.linalg.det(A)
    norm = np.linalg.norm(A)
    if abs(det) < 1e-12 * norm ** 3:
        raise DegenerateConfiguration("rank-deficient 3x3 DLT system")
    h = np.linalg.solve(A, b)
    held_out = float(rows_b[1, :3] @ h + rows_b[1, 3])
    return SolverSolution(
        hy=MotionHomography(*h), f=intr.f, lam=intr.lam,
        residual=held_out, tag="calibrated",
    )


# ---------------------------------------------------------------------------
# fHf: unknown equal focal length
# ---------------------------------------------------------------------------

def _linmul(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Product of two linear polynomials as a quadratic coefficient triple."""
    return np.array([u[0] * v[0], u[0] * v[1] + u[1] * v[0], u[1] * v[1]])


def build_fhf_matrix(corrs: list[Correspondence]) -> np.ndarray:
    """The 4x4 polynomial matrix M(w) over [h1, h2, h3, 1], entries quadratic in w."""
    M = np.zeros((4, 4, 3))
    for k, corr in enumerate(corrs[:2]):
        # y(w) = A + B w with K^{-1} = diag(1, 1, w).
        a1 = corr.p1[0] * corr.r1[0] + corr.p1[1] * corr.r1[1]
        b1 = corr.r1[2]
        a2 = corr.p2[0] * corr.r2[0] + corr.p2[1] * corr.r2[1]
        b2 = corr.r2[2]
        y1 = [np.array([a1[i], b1[i]]) for i in range(3)]
        y2 = [np.array([a2[i], b2[i]]) for i in range(3)]
        M[2 * k, 1] = -_linmul(y2[2], y1[1])
        M[2 * k, 2] = _linmul(y2[1], y1[1])
        M[2 * k, 3] = _linmul(y2[1], y1[2])
        M[2 * k + 1, 0] = _linmul(y2[2], y1[1])
        M[2 * k + 1, 2] = -_linmul(y2[0], y1[1])
        M[2 * k + 1, 3] = _linmul(y2[2], y1[0]) - _linmul(y2[0], y1[2])
    return M


def solve_fhf(corrs: list[Correspondence]) -> list[SolverSolution]:
    """2-point solver for unknown equal focal length (input points pinhole).

    Returns up to four solutions; sextic roots whose nullspace vector has a
    vanishing last element are the spurious pair and are discarded, as are
    roots with w <= 0 (f = w in normalized units).
    """
    if len(corrs) < 2:
        raise InsufficientData("fhf solver needs 2 correspondences")
    M = build_fhf_matrix(corrs)
    det = poly.det_polymatrix(M)
    # Pure rotation (or coincident points) makes det M structurally zero; the
    # computed coefficients are then rounding noise around the matrix scale.
    if np.max(np.abs(det)) < 1e-10 * max(np.max(np.abs(M)), 1e-300) ** 4:
        raise DegenerateConfiguration("det M(w) vanishes identically")
    try:
        roots = poly.real_roots(det)
    except DegenerateInput as exc:
        raise DegenerateConfiguration("det M(w) vanishes identically") from exc

    scale = float(np.max(np.abs(M)))
    sols: list[SolverSolution] = []
    n_spurious = 0
    for w in roots:
        if w <= _F_SATURATION:
            continue
        Mw = poly.eval_polymatrix(M, w)
        v, smin = poly.nullspace_min(Mw)
        if abs(v[3]) < _SPURIOUS_TOL * np.linalg.norm(v):
            n_spurious += 1
            continue
        h = v[:3] / v[3]
        sols.append(SolverSolution(
            hy=MotionHomography(*h), f=float(w), lam=None,
            residual=smin / max(scale, 1e-300), tag="fhf",
        ))
    if not sols:
        raise NoSolution("all sextic roots filtered")
    # A sample consistent with H_y = I (zero baseline) cannot constrain f:
    # the pure-rotation fit is one of the algebraic solutions, and the rest
    # are artifacts of the degeneracy.
    if any(np.linalg.norm(s.hy.translation) < 1e-8 for s in sols):
        raise DegenerateConfiguration(
            "sample consistent with pure rotation; focal length unobservable")
    sols.sort(key=lambda s: abs(s.residual))
    sols = sols[:4]
    for s in sols:
        s.spurious_filtered = n_spurious
    return sols


# ---------------------------------------------------------------------------
# Bivariate polynomial helpers: C[i, j] is the coefficient of f^i lam^j
# ---------------------------------------------------------------------------

try:  # the np.convolve wrapper costs as much as the small products themselves
    from numpy._core.multiarray import correlate as _raw_correlate
except ImportError:  # pragma: no cover - pre-2.0 module layout
    from numpy.core.multiarray import correlate as _raw_correlate


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full 1-d convolution of float arrays (np.convolve without dispatch)."""
    if a.size < b.size:
        a, b = b, a
    return _raw_correlate(a, b[::-1], 2)


def _bmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Kronecker substitution: with stride S no lam-degrees can collide, so
    # the 2-d product is one 1-d convolution of the row-flattened arrays.
    m = A.shape[0] + B.shape[0] - 1
    S = A.shape[1] + B.shape[1] - 1
    pa = np.zeros((A.shape[0], S))
    pa[:, : A.shape[1]] = A
    pb = np.zeros((B.shape[0], S))
    pb[:, : B.shape[1]] = B
    flat = _conv(pa.ravel(), pb.ravel())
    # Degrees beyond m*S - 1 cannot occur; the tail is structural zeros.
    return flat[: m * S].reshape(m, S)


def _bshift(C: np.ndarray, df: int, dl: int) -> np.ndarray:
    """Multiply by the monomial f^df * lam^dl (a pure index shift)."""
    out = np.zeros((C.shape[0] + df, C.shape[1] + dl))
    out[df:, dl:] = C
    return out


def _badd(*terms: np.ndarray) -> np.ndarray:
    m = max(t.shape[0] for t in terms)
    n = max(t.shape[1] for t in terms)
    out = np.zeros((m, n))
    for t in terms:
        out[: t.shape[0], : t.shape[1]] += t
    return out


def _btrim(C: np.ndarray, rel: float = 1e-14) -> np.ndarray:
    m = np.max(np.abs(C))
    if m == 0:
        return C[:1, :1]
    mask = np.abs(C) > rel * m
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    return C[: rows[-1] + 1, : cols[-1] + 1]


def _bder(C: np.ndarray, axis: int) -> np.ndarray:
    if C.shape[axis] == 1:
        return np.zeros((1, 1))
    k = np.arange(1, C.shape[axis])
    if axis == 0:
        return C[1:, :] * k[:, None]
    return C[:, 1:] * k[None, :]


def _bstack(polys: list[np.ndarray]) -> np.ndarray:
    m = max(p.shape[0] for p in polys)
    n = max(p.shape[1] for p in polys)
    out = np.zeros((len(polys), m, n))
    for k, p in enumerate(polys):
        out[k, : p.shape[0], : p.shape[1]] = p
    return out


def _bval_stack(T: np.ndarray, f: np.ndarray, lam: np.ndarray) -> np.ndarray:
    fp = np.power.outer(f, np.arange(T.shape[1]))
    lp = np.power.outer(lam, np.arange(T.shape[2]))
    return np.einsum("pij,ki,kj->pk", T, fp, lp)


def _bval_stack_with_scale(T: np.ndarray, f: np.ndarray,
                           lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stack values plus the matching absolute-coefficient magnitude scale.

    Requires f > 0, so the scale evaluation at (|f|, |lam|) can reuse the
    power basis: |lam|^j = |lam^j|.
    """
    fp = np.power.outer(f, np.arange(T.shape[1]))
    lp = np.power.outer(lam, np.arange(T.shape[2]))
    v = np.einsum("pij,ki,kj->pk", T, fp, lp)
    w = np.einsum("pij,ki,kj->pk", np.abs(T), fp, np.abs(lp))
    return v, w


def _bval(C: np.ndarray, f, lam):
    f = np.atleast_1d(np.asarray(f, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    return _bval_stack(C[None], f, lam)[0]


# ---------------------------------------------------------------------------
# frHfr: unknown equal focal length and radial distortion
# ---------------------------------------------------------------------------

@dataclass
class _CorrData:
    a: float
    b: float
    c: float
    d: float
    r1sq: float
    r2sq: float


@dataclass
class EliminatedSystem:
    """The Gauss-Jordan-reduced 2.5-point system.

    ``ghat`` holds the three eliminated-row polynomials g_i(t1_hat, f, lam)
    as coefficient rows over [t1*f*lam, t1*f, t1, f*lam, f, 1], so that
    t2_hat * f * lam = -g1, t2_hat * f = -g2, t2_hat = -g3.  ``equations``
    stacks the five solver equations, each linear in (t1_hat, t3_hat) with
    bivariate polynomial coefficients in (f, lam).
    """

    ghat: np.ndarray
    alphas: list[np.ndarray]
    gammas: list[np.ndarray]
    first_rows: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    pivot_conditioning: float
    Rhat: np.ndarray
    nhat: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    data: list[_CorrData] = field(default_factory=list)

    # --- evaluation helpers (used by tests and by root polishing) ---

    def g(self, i: int, t1: float, f: float, lam: float) -> float:
        m = np.array([t1 * f * lam, t1 * f, t1, f * lam, f, 1.0])
        return float(self.ghat[i] @ m)

    def t2_recovery(self, t1: float, f: float, lam: float) -> np.ndarray:
        """t2_hat recovered three ways from the eliminated rows."""
        return np.array([
            -self.g(0, t1, f, lam) / (f * lam),
            -self.g(1, t1, f, lam) / f,
            -self.g(2, t1, f, lam),
        ])

    def residuals(self, t1: float, t3: float, f: float, lam: float) -> np.ndarray:
        """The five solver equations at a candidate point."""
        out = np.empty(5)
        for k in range(3):
            out[k] = (_bval(self.alphas[k], f, lam) * t1
                      + _bval(self.gammas[k], f, lam))[0]
        for k, (ak, bk, ck) in enumerate(self.first_rows):
            out[3 + k] = (_bval(ak, f, lam) * t1 + _bval(bk, f, lam) * t3
                          + _bval(ck, f, lam))[0]
        return out

    def residual_scales(self, t1: float, t3: float, f: float,
                        lam: float) -> np.ndarray:
        """Magnitude scale of each equation (absolute-coefficient value)."""
        fa, la, t1a, t3a = abs(f), abs(lam), abs(t1), abs(t3)
        out = np.empty(5)
        for k in range(3):
            out[k] = (_bval(np.abs(self.alphas[k]), fa, la) * t1a
                      + _bval(np.abs(self.gammas[k]), fa, la))[0]
        for k, (ak, bk, ck) in enumerate(self.first_rows):
            out[3 + k] = (_bval(np.abs(ak), fa, la) * t1a
                          + _bval(np.abs(bk), fa, la) * t3a
                          + _bval(np.abs(ck), fa, la))[0]
        return out


def _corr_data(corr: Correspondence) -> _CorrData:
    a, b = float(corr.p1[0]), float(corr.p1[1])
    c, d = float(corr.p2[0]), float(corr.p2[1])
    return _CorrData(a, b, c, d, a * a + b * b, c * c + d * d)


def _third_row_coeffs(dat: _CorrData, Rh: np.ndarray, nh: np.ndarray) -> np.ndarray:
    """Row over [t2*f*lam, t2*f, t2, t1*f*lam, t1*f, t1, f*lam, f, 1]."""
    a, b, c, d, r1sq = dat.a, dat.b, dat.c, dat.d, dat.r1sq
    s1 = nh[0] * a + nh[1] * b
    n3 = nh[2]
    u = c * (Rh[1, 0] * a + Rh[1, 1] * b) - d * (Rh[0, 0] * a + Rh[0, 1] * b)
    w3 = c * Rh[1, 2] - d * Rh[0, 2]
    return np.array([
        c * n3 * r1sq, c * n3, c * s1,
        -d * n3 * r1sq, -d * n3, -d * s1,
        w3 * r1sq, w3, u,
    ])


def _first_row_polys(dat: _CorrData, Rh: np.ndarray, nh: np.ndarray):
    """Bivariate coefficient arrays for the two f-cleared first-row equations.

    Returns (beta, delta, const1, const2):
      component 1:  d*beta * t3  - delta * t2 + const1 = 0
      component 2:  delta * t1 - c*beta * t3 + const2 = 0
    """
    a, b, c, d, r1sq, r2sq = dat.a, dat.b, dat.c, dat.d, dat.r1sq, dat.r2sq
    s1 = nh[0] * a + nh[1] * b
    n3 = nh[2]

    beta = np.array([[s1, 0.0], [n3, n3 * r1sq]])
    delta = np.array([
        [0.0, 0.0, 0.0],
        [s1, s1 * r2sq, 0.0],
        [n3, n3 * (r1sq + r2sq), n3 * r1sq * r2sq],
    ])

    w1 = Rh[0, 0] * a + Rh[0, 1] * b
    w2 = Rh[1, 0] * a + Rh[1, 1] * b
    w3 = Rh[2, 0] * a + Rh[2, 1] * b

    const1 = np.array([
        [d * w3, 0.0, 0.0],
        [d * Rh[2, 2] - w2, d * Rh[2, 2] * r1sq - w2 * r2sq, 0.0],
        [-Rh[1, 2], -Rh[1, 2] * (r1sq + r2sq), -Rh[1, 2] * r1sq * r2sq],
    ])
    const2 = np.array([
        [-c * w3, 0.0, 0.0],
        [w1 - c * Rh[2, 2], w1 * r2sq - c * Rh[2, 2] * r1sq, 0.0],
        [Rh[0, 2], Rh[0, 2] * (r1sq + r2sq), Rh[0, 2] * r1sq * r2sq],
    ])
    return beta, delta, const1, const2


def build_frhfr_system(corrs: list[Correspondence]) -> EliminatedSystem:
    """Assemble and Gauss-Jordan-reduce the 2.5-point system.

    The three third-row equations supply the eliminated rows; the third
    correspondence supplies the two f-cleared first-row equations.
    """
    if len(corrs) < 3:
        raise InsufficientData("frhfr solver needs 3 correspondences")
    R1 = np.asarray(corrs[0].r1, dtype=float)
    R2 = np.asarray(corrs[0].r2, dtype=float)
    Rh = R2 @ R1.T
    nh = R1[:, 1].copy()

    data = [_corr_data(c) for c in corrs[:3]]
    M3 = np.vstack([_third_row_coeffs(d, Rh, nh) for d in data])

    A = M3[:, :3]
    s = np.linalg.svd(A, compute_uv=False)
    cond = s[-1] / max(s[0], 1e-300)
    row_scale = max(np.max(np.abs(M3)), 1e-300)
    if s[-1] < _PIVOT_TOL * row_scale:
        raise EliminationFailure(
            f"t2 pivot block singular (smin={s[-1]:.3e}, rows={row_scale:.3e})")
    Q = np.linalg.solve(A, M3[:, 3:])  # g_i coefficient rows (3 x 6)

    # Constraints g1 - lam*g2, g2 - f*g3, g1 - lam*f*g3, written directly
    # over the Gauss-Jordan rows q_i = (f*lam, f, 1 | f*lam, f, 1) of Q.
    def combos(o):
        q = Q[:, o:o + 3]
        return [
            np.array([[q[0, 2], -q[1, 2], 0.0],
                      [q[0, 1], q[0, 0] - q[1, 1], -q[1, 0]]]),
            np.array([[q[1, 2], 0.0],
                      [q[1, 1] - q[2, 2], q[1, 0]],
                      [-q[2, 1], -q[2, 0]]]),
            np.array([[q[0, 2], 0.0, 0.0],
                      [q[0, 1], q[0, 0] - q[2, 2], 0.0],
                      [0.0, -q[2, 1], -q[2, 0]]]),
        ]

    alphas = combos(0)
    gammas = combos(3)

    # First-row equations: the first cross-product component of the second
    # and third correspondences, with t2_hat = -g3 substituted so each is
    # linear in (t1_hat, t3_hat).  The pair must come from two different
    # correspondences: within one correspondence the identity
    # c*comp1 + d*comp2 + z2*comp3 = 0 makes the only t3-free combination
    # of its two first-row components collapse onto its third-row equation.
    L2 = np.array([[Q[2, 2], 0.0], [Q[2, 1], Q[2, 0]]])
    C2 = np.array([[Q[2, 5], 0.0], [Q[2, 4], Q[2, 3]]])
    first_rows = []
    for dat in (data[1], data[2]):
        beta, delta, c1raw, _ = _first_row_polys(dat, Rh, nh)
        first_rows.append((_bmul(delta, L2), dat.d * beta,
                           _badd(c1raw, _bmul(delta, C2))))

    return EliminatedSystem(
        ghat=Q, alphas=alphas, gammas=gammas,
        first_rows=first_rows, pivot_conditioning=float(cond),
        Rhat=Rh, nhat=nh, R1=R1, R2=R2, data=data,
    )


def first_row_value(dat: _CorrData, Rh: np.ndarray, nh: np.ndarray,
                    t_hat: np.ndarray, f: float, lam: float,
                    component: int = 1) -> float:
    """f-cleared first-row-family cross-product component of one DLT pair.

    ``component=1`` is d*h3 - f*z2*h2, ``component=2`` is f*z2*h1 - c*h3.
    """
    G = Rh + np.outer(t_hat, nh)
    z1 = 1.0 + lam * dat.r1sq
    z2 = 1.0 + lam * dat.r2sq
    h1 = (G[0, 0] * dat.a + G[0, 1] * dat.b) + f * z1 * G[0, 2]
    h2 = (G[1, 0] * dat.a + G[1, 1] * dat.b) + f * z1 * G[1, 2]
    h3 = (G[2, 0] * dat.a + G[2, 1] * dat.b) + f * z1 * G[2, 2]
    if component == 1:
        return float(dat.d * h3 - z2 * f * h2)
    return float(z2 * f * h1 - dat.c * h3)


def _polish_bivariate(P1: np.ndarray, P2: np.ndarray, seeds: np.ndarray,
                      iters: int = 30) -> np.ndarray:
    """Newton iteration on (P1, P2) = 0 from an array of (f, lam) seeds.

    Rows retire individually: a row stops iterating once its step reaches
    rounding level, and a row whose step has stopped shrinking twice in a
    row is abandoned as non-converging (the residual acceptance downstream
    discards it).  Folds, which contract by a factor of ~2 per step, keep
    iterating until they converge or the cap is hit.
    """
    T = _bstack([P1, P2, _bder(P1, 0), _bder(P1, 1), _bder(P2, 0), _bder(P2, 1)])
    deg_f = np.arange(T.shape[1])
    deg_l = np.arange(T.shape[2])
    x = np.ascontiguousarray(seeds.T)
    idx = np.arange(x.shape[1])
    xa = x
    best = np.full(x.shape[1], np.inf)
    stalls = np.zeros(x.shape[1], dtype=np.int8)
    # A vanishing Newton determinant makes the step inf/NaN; the clip and
    # the NaN-rejecting keep-mask below retire such rows without a guard.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for it in range(iters):
            fp = np.power.outer(xa[0], deg_f)
            lp = np.power.outer(xa[1], deg_l)
            v = np.einsum("pij,ki,kj->pk", T, fp, lp)
            s = np.stack([v[0] * v[5] - v[1] * v[3],
                          v[1] * v[2] - v[0] * v[4]])
            s /= v[2] * v[5] - v[3] * v[4]
            np.clip(s, -0.5, 0.5, out=s)
            xa -= s
            s0, s1 = s
            if it < 6:
                # Quadratic-formula seeds either converge within a handful
                # of steps or are junk; skipping the retirement bookkeeping
                # here keeps the common iterations to the bare Newton update.
                continue
            mag = np.maximum(np.abs(s0), np.abs(s1))
            # The stall count never resets, so oscillating non-converging
            # rows accumulate evidence even when an occasional step shrinks.
            # A row retiring after a sub-1e-9 step leaves at most ~1e-9
            # error in the root, far below the residual acceptance level;
            # NaN steps compare false everywhere and retire immediately.
            stalls += (mag > 0.75 * best) & (mag > 1e-13)
            # A row still taking coarse steps this late is drifting, not
            # converging.
            keep = (mag >= 1e-9) & (stalls < 3) & (mag <= 1e-3)
            if keep.all():
                np.minimum(best, mag, out=best)
                continue
            x[:, idx] = xa
            idx = idx[keep]
            xa = x[:, idx]
            if idx.size == 0:
                break
            best = np.minimum(best, mag)[keep]
            stalls = stalls[keep]
    x[:, idx] = xa
    return x.T


def _poly_add(*ps: np.ndarray) -> np.ndarray:
    n = max(p.size for p in ps)
    out = np.zeros(n)
    for p in ps:
        out[: p.size] += p
    return out


def _solve_bivariate(P1: np.ndarray, P2: np.ndarray,
                     f_min: float, f_max: float) -> np.ndarray:
    """All real solutions of {P1 = 0, P2 = 0} with f in (f_min, f_max].

    P1 must be (at most) quadratic in lambda, which holds by construction
    for the t2-consistency constraints.  Writing P1 = a(f)*lam^2 + b(f)*lam
    + c(f), powers of lambda in P2 reduce modulo P1 via

        a^(k-1) * lam^k == u_k(f)*lam + v_k(f),
        u_{k+1} = a*v_k - b*u_k,   v_{k+1} = -c*u_k,

    so a^(K-1)*P2 == B(f)*lam + A(f) on the P1 curve.  Substituting the
    quadratic formula lam = (-b +/- sqrt(D))/(2a), D = b^2 - 4ac, and
    multiplying the two sign choices gives the univariate eliminant

        R(f) = (2aA - bB)^2 - B^2 * D,

    whose real roots carry all solutions; lambda follows from the quadratic
    formula and a short 2-d Newton polish restores full accuracy.
    """
    if P1.shape[1] > 3:
        raise EliminationFailure("lambda-degree of the eliminant exceeds 2")
    K = P2.shape[1] - 1

    # Balance the lambda columns first: when a is orders of magnitude below
    # b and c the repeated multiplication by a amplifies coefficient roundoff
    # into the eliminant.  Substituting lam = s*mu with s from the column
    # magnitudes keeps the reduction well-scaled; mu-roots are mapped back.
    m1 = np.max(np.abs(P1), axis=0)
    m2 = np.max(np.abs(P2), axis=0)
    s = 1.0
    if P1.shape[1] == 3 and m1[0] > 0 and m1[2] > 0 and K >= 1 \
            and m2[0] > 0 and m2[-1] > 0:
        s = float(np.sqrt(np.sqrt(m1[0] / m1[2]) * (m2[0] / m2[-1]) ** (1.0 / K)))
        s = min(max(s, 1e-3), 1e3)
    P1s = P1 * s ** np.arange(P1.shape[1])
    P2s = P2 * s ** np.arange(P2.shape[1])

    q = np.zeros((P1s.shape[0], 3))
    q[:, : P1s.shape[1]] = P1s
    c, b, a = q[:, 0], q[:, 1], q[:, 2]
    u = [np.zeros(1), np.ones(1)]
    v = [np.ones(1), np.zeros(1)]
    for k in range(1, K):
        u.append(_poly_add(_conv(a, v[k]), -_conv(b, u[k])))
        v.append(-_conv(c, u[k]))
    apow = [np.ones(1)]
    for _ in range(max(K - 1, 0)):
        apow.append(_conv(apow[-1], a))
    B = np.zeros(1)
    A = _conv(P2s[:, 0], apow[K - 1]) if K >= 1 else P2s[:, 0]
    for k in range(1, K + 1):
        w = _conv(np.ascontiguousarray(P2s[:, k]), apow[K - k])
        B = _poly_add(B, _conv(w, u[k]))
        A = _poly_add(A, _conv(w, v[k]))
    D = _poly_add(_conv(b, b), -4.0 * _conv(a, c))
    S = _poly_add(2.0 * _conv(a, A), -_conv(b, B))
    R = _poly_add(_conv(S, S), -_conv(_conv(B, B), D))

    try:
        R = poly.trim(R)
    except DegenerateInput:
        return np.empty((0, 2))
    if R.size < 2:
        return np.empty((0, 2))
    raw = np.polynomial.polynomial.polyroots(R)
    # Cancellation while building R can push a genuine root slightly off the
    # real axis, so near-real candidates are kept; the Newton polish and the
    # residual acceptance below weed out the impostors.
    near = np.abs(raw.imag) <= 1e-2 * (1.0 + np.abs(raw.real))
    f_roots = raw.real[near]
    f_roots = f_roots[(f_roots > f_min) & (f_roots <= f_max)]
    if f_roots.size == 0:
        return np.empty((0, 2))

    cv, bv, av = np.polynomial.polynomial.polyval(f_roots, q)
    Dv = bv * bv - 4.0 * av * cv
    scale = bv * bv + np.abs(4.0 * av * cv)
    usable = Dv >= -1e-6 * scale
    # Both quadratic-formula branches seed the polish; for a fold (D ~ 0)
    # they coincide.  A vanishing leading coefficient means the lambda
    # dependence degenerated to linear at this f.
    root = np.sqrt(np.maximum(Dv, 0.0))
    quad = usable & (np.abs(av) > 1e-12 * np.sqrt(np.maximum(scale, 1e-300)))
    lin = usable & ~quad & (np.abs(bv) > 1e-300)
    seeds = []
    safe_a = np.where(quad, av, 1.0)
    for sgn in (-1.0, 1.0):
        lam = s * (-bv + sgn * root) / (2.0 * safe_a)
        seeds.append(np.column_stack([f_roots[quad], lam[quad]]))
    seeds.append(np.column_stack(
        [f_roots[lin], s * (-cv[lin] / np.where(lin, bv, 1.0)[lin])]))
    seeds = np.vstack(seeds)
    if seeds.size == 0:
        return np.empty((0, 2))

    x = _polish_bivariate(P1, P2, seeds)

    # Accept roots by residual relative to an absolute-coefficient scale.
    x = x[np.all(np.isfinite(x), axis=1) & (x[:, 0] > 0)]
    if x.size == 0:
        return x
    v, w = _bval_stack_with_scale(_bstack([P1, P2]), x[:, 0], x[:, 1])
    r = np.max(np.abs(v) / np.maximum(w, 1e-300), axis=0)
    x = x[r <= 1e-8]

    # Deduplicate clustered roots.
    if len(x) <= 1:
        return x
    order = np.lexsort((x[:, 1], x[:, 0]))
    x = x[order]
    diff = np.abs(x[:, None, :] - x[None, :, :])
    tol = 1e-6 * (1.0 + np.abs(x))[None, :, :]
    dup = np.all(diff <= tol, axis=2)
    keep = np.ones(len(x), dtype=bool)
    for i in range(len(x)):
        if keep[i]:
            keep[i + 1:] &= ~dup[i, i + 1:]
    return x[keep]


def solve_frhfr(corrs: list[Correspondence]) -> list[SolverSolution]:
    """2.5-point solver for unknown equal focal length and distortion.

    Returns at most three solutions ranked by the absolute value of the
    held-out DLT equation (a first-row equation of the first correspondence,
    unused during solving).
    """
    system = build_frhfr_system(corrs)
    a1, g1 = system.alphas[0], system.gammas[0]
    a2, g2 = system.alphas[1], system.gammas[1]
    e4a, e4b, e4c = system.first_rows[0]
    e5a, e5b, e5c = system.first_rows[1]

    P1 = _badd(_bmul(a1, g2), -_bmul(a2, g1))
    # The degree-3 terms of P1 cancel identically (their coefficients,
    # f^3*(l2*p3 - l3*p2) and m3*q1 - m1*q3 in the Gauss-Jordan row entries,
    # vanish by construction), so the roundoff they leave behind is dropped
    # rather than trimmed by magnitude.
    P1 = _btrim(P1[:3, :3])
    # Eliminate t3_hat between the two first-row equations, then t1_hat
    # against the second t2-consistency constraint, whose t1-coefficient is
    # only linear in lambda: the resulting eliminant needs one lambda-
    # reduction step less and lands closer to the true resultant degree.
    A45 = _badd(_bmul(e5b, e4a), -_bmul(e4b, e5a))
    C45 = _badd(_bmul(e5b, e4c), -_bmul(e4b, e5c))
    P2 = _btrim(_badd(_bmul(a2, C45), -_bmul(g2, A45)))

    roots = _solve_bivariate(P1, P2, _F_SATURATION, 24.0)

    if roots.size:
        roots = roots[(roots[:, 0] > _F_SATURATION) & (roots[:, 0] <= 24.0)]
    if roots.size == 0:
        raise NoSolution("no admissible (f, lambda) root")

    # Back-substitute t1, t3 (least squares over the paired constraints)
    # and t2 for all roots at once.
    stack = _bstack([a1, a2, g1, g2, e4a, e4b, e4c, e5a, e5b, e5c,
                     system.alphas[2], system.gammas[2]])
    V, W = _bval_stack_with_scale(stack, roots[:, 0], roots[:, 1])
    av1, av2, gv1, gv2, a4, b4, c4, a5, b5, c5, av3, gv3 = V
    den = av1 * av1 + av2 * av2
    den = np.where(den < 1e-300, np.nan, den)
    t1 = -(av1 * gv1 + av2 * gv2) / den
    r4 = a4 * t1 + c4
    r5 = a5 * t1 + c5
    den3 = b4 * b4 + b5 * b5
    den3 = np.where(den3 < 1e-300, np.nan, den3)
    t3 = -(b4 * r4 + b5 * r5) / den3

    # Elimination can manufacture (f, lam) pairs that satisfy the two
    # eliminated polynomials without any consistent (t1, t3); the full
    # five-equation residual at the back-substituted point exposes them.
    t1a, t3a = np.abs(t1), np.abs(t3)
    res = np.abs(np.stack([
        av1 * t1 + gv1, av2 * t1 + gv2, av3 * t1 + gv3,
        a4 * t1 + b4 * t3 + c4, a5 * t1 + b5 * t3 + c5,
    ]))
    sc = np.stack([
        W[0] * t1a + W[2], W[1] * t1a + W[3], W[10] * t1a + W[11],
        W[4] * t1a + W[5] * t3a + W[6], W[7] * t1a + W[8] * t3a + W[9],
    ])
    with np.errstate(invalid="ignore"):
        consistent = np.all(res <= 1e-6 * np.maximum(sc, 1e-300), axis=0)

    f0s, l0s = roots[:, 0], roots[:, 1]
    t2 = -(system.ghat[2] @ np.vstack([
        t1 * f0s * l0s, t1 * f0s, t1, f0s * l0s, f0s, np.ones_like(f0s)]))

    sols: list[SolverSolution] = []
    for k, (f0, lam0) in enumerate(roots):
        if not (np.isfinite(t1[k]) and np.isfinite(t3[k]) and consistent[k]):
            continue
        t_hat = np.array([t1[k], t2[k], t3[k]])
        # Near-vanishing t-coefficients make the back-substitution blow up;
        # the plane sits at distance 1, so such translations are meaningless.
        if np.max(np.abs(t_hat)) > 1e3:
            continue
        t = system.R2.T @ t_hat
        # The unused independent equation is a first-row component of the
        # first correspondence (its two first-row components are equivalent
        # modulo its third-row equation, which the solver does use).
        held_out = first_row_value(system.data[0], system.Rhat, system.nhat,
                                   t_hat, f0, lam0)
        sols.append(SolverSolution(
            hy=MotionHomography(t[0], t[1] + 1.0, t[2]),
            f=float(f0), lam=float(lam0), residual=held_out, tag="frhfr",
        ))
    if not sols:
        raise NoSolution("no admissible (f, lambda) root")
    sols.sort(key=lambda s: abs(s.residual))
    return sols[:3]


def filter_by_unused_equation(sols: list[SolverSolution], held_out=None,
                              tau: float = 1e-6) -> list[SolverSolution]:
    """Drop solutions whose held-out DLT equation residual exceeds tau.

    ``held_out`` maps a solution to the held-out equation value; by default
    the residual recorded by the solver is used.
    """
    if held_out is None:
        held_out = lambda s: s.residual
    return [s for s in sols if abs(held_out(s)) <= tau]


def solve(corrs: list[Correspondence], solver: str,
          intr: Intrinsics | None = None) -> list[SolverSolution]:
    """Dispatch helper used by RANSAC and the CLI."""
    if solver == "calibrated":
        if intr is None:
            raise ValueError("calibrated solver requires intrinsics")
        return [solve_calibrated(corrs, intr)]
    if solver == "fhf":
        return solve_fhf(corrs)
    if solver == "frhfr":
        return solve_frhfr(corrs)
    raise ValueError(f"unknown solver {solver!r}")
