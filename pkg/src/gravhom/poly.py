"""Small numerical building blocks: real roots of univariate polynomials,
minimal-norm nullspace vectors, and determinants of matrices with
polynomial entries.

Polynomials are coefficient arrays in ascending degree order.  Polynomial
matrices are 3-d arrays of shape (n, n, d+1): entry (i, j) is the
coefficient array ``M[i, j, :]``.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateInput

_TRIM_REL = 1e-14
_IMAG_REL = 1e-8
_CLUSTER_TOL = 1e-8


def trim(coeffs: np.ndarray) -> np.ndarray:
    """Drop trailing coefficients below 1e-14 relative to the largest one."""
    c = np.asarray(coeffs, dtype=float)
    m = np.max(np.abs(c)) if c.size else 0.0
    if m == 0.0:
        raise DegenerateInput("all coefficients are zero")
    keep = np.nonzero(np.abs(c) > _TRIM_REL * m)[0]
    if keep.size == 0:
        raise DegenerateInput("all coefficients below trim threshold")
    return c[: keep[-1] + 1]


def real_roots(coeffs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """All real roots of a polynomial given in ascending coefficient order.

    Roots come from the companion-matrix eigenvalues, are polished by damped
    Newton iterations, filtered on relative imaginary part, and clustered so
    a multiple root is reported once.
    """
    c = trim(coeffs)
    if c.size < 2:
        return np.array([])
    raw = np.polynomial.polynomial.polyroots(c)
    d = np.polynomial.polynomial.polyder(c)

    # Newton polish on the real axis for near-real eigenvalues.
    real_mask = np.abs(raw.imag) <= _IMAG_REL * (1.0 + np.abs(raw))
    roots = raw[real_mask].real
    for _ in range(3):
        if roots.size == 0:
            break
        fv = np.polynomial.polynomial.polyval(roots, c)
        dv = np.polynomial.polynomial.polyval(roots, d)
        step = np.where(np.abs(dv) > 0, fv / np.where(dv == 0, 1.0, dv), 0.0)
        # Damp huge steps near multiple roots.
        step = np.clip(step, -1.0, 1.0)
        new = roots - step
        improved = np.abs(np.polynomial.polynomial.polyval(new, c)) <= np.abs(fv)
        roots = np.where(improved, new, roots)
        if np.all(np.abs(step[improved]) < tol):
            break

    if roots.size == 0:
        return roots
    roots = np.sort(roots)
    # Collapse clusters of repeated roots.
    out = [roots[0]]
    for r in roots[1:]:
        if abs(r - out[-1]) > _CLUSTER_TOL * (1.0 + abs(r)):
            out.append(r)
    return np.array(out)


def nullspace_min(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Unit vector minimizing ||Av||, with the smallest singular value."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    _, s, vh = np.linalg.svd(A)
    v = vh[-1]
    # A wide matrix has exact null directions beyond the listed singular values.
    smin = s[-1] if s.size == vh.shape[0] else 0.0
    return v, float(smin)


def polymatrix(entries, max_deg: int) -> np.ndarray:
    """Stack nested lists of coefficient sequences into an (n, n, d+1) array."""
    n = len(entries)
    M = np.zeros((n, len(entries[0]), max_deg + 1))
    for i, row in enumerate(entries):
        for j, c in enumerate(row):
            c = np.atleast_1d(np.asarray(c, dtype=float))
            M[i, j, : c.size] = c
    return M


def eval_polymatrix(M: np.ndarray, w: float) -> np.ndarray:
    """Scalar matrix M(w)."""
    powers = w ** np.arange(M.shape[2])
    return M @ powers


def det_polymatrix(M: np.ndarray) -> np.ndarray:
    """Determinant of a small polynomial matrix by cofactor expansion.

    Returns ascending coefficients; exact coefficient arithmetic, no
    evaluation/interpolation shortcuts.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape[1] != n or n > 4:
        raise ValueError("square polynomial matrix of size <= 4 required")
    return _det_rec(M, list(range(n)), list(range(n)))


def _det_rec(M: np.ndarray, rows, cols) -> np.ndarray:
    if len(rows) == 1:
        return M[rows[0], cols[0]]
    acc = None
    r = rows[0]
    for k, c in enumerate(cols):
        minor = _det_rec(M, rows[1:], cols[:k] + cols[k + 1:])
        term = np.convolve(M[r, c], minor)
        if k % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc
