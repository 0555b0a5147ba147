from __future__ import annotations
import warnings
import numpy as np
import pytest
from numpy.testing import assert_allclose
from pyuzawa.exceptions import AsymmetryError, DimensionError, NotSPDError
from pyuzawa.linalg import chol, chol_solve, eigvalsh, generalized_eigvalsh, spectral_norm, svd_rect, sym_eig, sym_inv_sqrt, sym_sqrt
from pyuzawa.linalg.dense import jacobi_eigh


def test_sym_eig_diagonal():
    pairs = sym_eig(np.diag([3.0, 1.0, 2.0]))
    assert_allclose(pairs.eigenvalues, [1.0, 2.0, 3.0])
    assert pairs.min == 1.0
    assert pairs.max == 3.0


def test_sym_eig_two_by_two():
    pairs = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert_allclose(pairs.eigenvalues, [1.0, 3.0], atol=1e-14)
    Q = pairs.eigenvectors
    assert_allclose(Q.T @ Q, np.eye(2), atol=1e-14)


@pytest.mark.parametrize('n', [1, 7, 30])
def test_jacobi_matches_lapack(n):
    rng = np.random.default_rng(n)
    G = rng.standard_normal((n, n))
    M = G + G.T
    jacobi = sym_eig(M, method='jacobi')
    lapack = sym_eig(M, method='lapack')
    assert_allclose(jacobi.eigenvalues, lapack.eigenvalues, atol=1e-10)
    Q = jacobi.eigenvectors
    assert_allclose(Q @ np.diag(jacobi.eigenvalues) @ Q.T, M, atol=1e-10)


def test_jacobi_converges_on_wide_spectrum():
    # eigenvalues over eight decades, as in the dense theory checks
    rng = np.random.default_rng(42)
    Q, _ = np.linalg.qr(rng.standard_normal((40, 40)))
    w = np.logspace(-4, 4, 40)
    M = (Q * w) @ Q.T
    pairs = jacobi_eigh(M)
    assert_allclose(pairs.eigenvalues, w, rtol=1e-8, atol=1e-10)
    V = pairs.eigenvectors
    assert_allclose(V.T @ V, np.eye(40), atol=1e-12)


def test_jacobi_tiny_off_diagonal_is_dropped():
    M = np.array([[1.0, 1e-300, 0.0], [1e-300, 2.0, 0.0], [0.0, 0.0, 3.0]])
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        pairs = jacobi_eigh(M)
    assert_allclose(pairs.eigenvalues, [1.0, 2.0, 3.0])
    assert_allclose(pairs.eigenvectors, np.eye(3))


def test_zero_matrix():
    pairs = jacobi_eigh(np.zeros((3, 3)))
    assert_allclose(pairs.eigenvalues, np.zeros(3))
    assert_allclose(pairs.eigenvectors, np.eye(3))


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(AsymmetryError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sym_eig(np.eye(2), method='qr')


def test_square_roots():
    assert_allclose(sym_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    assert_allclose(sym_inv_sqrt(np.diag([4.0, 9.0])), np.diag([0.5, 1.0 / 3.0]))
    with pytest.raises(NotSPDError):
        sym_sqrt(np.diag([1.0, 0.0]))


def test_cholesky():
    M = np.array([[4.0, 2.0], [2.0, 5.0]])
    R = chol(M)
    assert_allclose(R, [[2.0, 0.0], [1.0, 2.0]])
    assert_allclose(chol_solve(R, M @ np.array([1.0, -1.0])), [1.0, -1.0])
    with pytest.raises(NotSPDError):
        chol(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_svd_rect_reconstructs():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((3, 5))
    U, Sigma0, V = svd_rect(M)
    assert U.shape == (3, 3)
    assert Sigma0.shape == (3, 3)
    assert V.shape == (5, 5)
    s = np.diag(Sigma0)
    assert np.all(s[:-1] >= s[1:])
    assert_allclose(U @ np.hstack([Sigma0, np.zeros((3, 2))]) @ V.T, M, atol=1e-12)
    assert_allclose(V.T @ V, np.eye(5), atol=1e-12)
    with pytest.raises(DimensionError):
        svd_rect(M.T)


def test_generalized_eigenvalues():
    A = np.diag([2.0, 6.0])
    B = np.diag([1.0, 2.0])
    assert_allclose(generalized_eigvalsh(A, B), [2.0, 3.0])


def test_spectral_norm_and_eigvalsh():
    assert spectral_norm(np.array([[0.0, 2.0], [-3.0, 0.0]])) == pytest.approx(3.0)
    assert_allclose(eigvalsh(np.diag([5.0, -1.0])), [-1.0, 5.0])
