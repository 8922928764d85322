import numpy as np
import pytest

from gravhom import poly
from gravhom.exceptions import DegenerateInput


def test_real_roots_quadratic():
    roots = poly.real_roots([-1.0, 0.0, 1.0])  # w^2 - 1
    np.testing.assert_allclose(np.sort(roots), [-1, 1], atol=1e-12)


def test_real_roots_triple_root_collapsed():
    # (w - 2)^3 = -8 + 12w - 6w^2 + w^3
    roots = poly.real_roots([-8.0, 12.0, -6.0, 1.0])
    np.testing.assert_allclose(roots, [2.0], atol=1e-5)


def test_real_roots_planted_degree_six(rng):
    planted = np.array([-2.0, -0.5, 0.3, 1.7])
    c = np.array([1.0])
    for r in planted:
        c = np.convolve(c, [-r, 1.0])
    c = np.convolve(c, [1.0, 0.0, 1.0])  # complex pair w^2 + 1
    roots = poly.real_roots(c[::-1][::-1])
    np.testing.assert_allclose(np.sort(roots), np.sort(planted), atol=1e-10)


def test_real_roots_residual_bound(rng):
    for _ in range(20):
        c = rng.normal(size=7)
        try:
            roots = poly.real_roots(c)
        except DegenerateInput:
            continue
        for r in roots:
            val = np.polynomial.polynomial.polyval(r, c)
            assert abs(val) <= 1e-9 * np.max(np.abs(c)) * (1 + abs(r)) ** 6


def test_real_roots_degenerate_input():
    with pytest.raises(DegenerateInput):
        poly.real_roots([0.0, 0.0, 0.0])


def test_trim_relative_threshold():
    c = poly.trim([1.0, 2.0, 1e-20])
    assert c.size == 2


def test_det_polymatrix_diag_w():
    M = poly.polymatrix([[[0, 1] if i == j else [0] for j in range(4)]
                         for i in range(4)], max_deg=1)
    d = poly.det_polymatrix(M)
    np.testing.assert_allclose(d, [0, 0, 0, 0, 1])


def test_det_polymatrix_constant_matrix(rng):
    A = rng.normal(size=(3, 3))
    M = poly.polymatrix([[[A[i, j]] for j in range(3)] for i in range(3)],
                        max_deg=0)
    d = poly.det_polymatrix(M)
    assert d.size == 1
    np.testing.assert_allclose(d[0], np.linalg.det(A), rtol=1e-12)


def test_det_polymatrix_scalar_evaluation_oracle(rng):
    """det of the polynomial matrix evaluated at w equals det of M(w)."""
    for _ in range(5):
        M = rng.normal(size=(4, 4, 3))
        d = poly.det_polymatrix(M)
        for w in rng.uniform(-2, 2, size=10):
            lhs = np.polynomial.polynomial.polyval(w, d)
            rhs = np.linalg.det(poly.eval_polymatrix(M, w))
            assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1.0)


def test_nullspace_min_rank_one():
    v, smin = poly.nullspace_min(np.array([[1.0, 0.0], [0.0, 0.0]]))
    np.testing.assert_allclose(np.abs(v), [0, 1], atol=1e-12)
    assert smin == pytest.approx(0.0, abs=1e-15)


def test_nullspace_min_zero_matrix():
    v, smin = poly.nullspace_min(np.zeros((3, 3)))
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert smin == pytest.approx(0.0, abs=1e-15)


def test_nullspace_min_planted_kernel(rng):
    for _ in range(10):
        k = rng.normal(size=4)
        k /= np.linalg.norm(k)
        # rank-3 matrix whose rows are orthogonal to k
        rows = rng.normal(size=(4, 4))
        rows -= np.outer(rows @ k, k)
        v, smin = poly.nullspace_min(rows)
        assert abs(abs(v @ k) - 1.0) < 1e-9
        assert smin < 1e-12


def test_nullspace_min_reports_consistent_sigma(rng):
    A = rng.normal(size=(5, 4))
    v, smin = poly.nullspace_min(A)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(A @ v) == pytest.approx(smin, abs=1e-12)
