r"""Dense linear algebra for desk sized matrices: symmetric eigendecomposition by cyclic Jacobi rotations, symmetric square roots, rectangular SVD and Cholesky. These routines back the exact preconditioner and everything in :mod:`pyuzawa.theory`; they are not meant for large matrices."""
from __future__ import annotations
from dataclasses import dataclass
import logging
import numpy as np
import scipy.linalg
import pyuzawa
from pyuzawa.exceptions import AsymmetryError, ConvergenceError, DimensionError, NonFiniteError, NotSPDError

logger = logging.getLogger(__name__)

MAX_DESK_SIZE = 4000
JACOBI_MAX_SIZE = 256
MAX_SWEEPS = 100

@dataclass(frozen=True)
class EigenPairs:
    r"""Eigendecomposition :math:`M = Q\Lambda Q^t` of a symmetric matrix.

    Args:
        eigenvalues (np.ndarray): Eigenvalues in ascending order.
        eigenvectors (np.ndarray): Orthonormal eigenvectors stored as columns.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])

    def spectral_function(self, fn) -> np.ndarray:
        r""":math:`Q\,\text{diag}(fn(\Lambda))\,Q^t`, symmetrized."""
        Q = self.eigenvectors
        X = (Q * fn(self.eigenvalues)) @ Q.T
        return 0.5 * (X + X.T)


def as_dense(M, name: str = 'matrix') -> np.ndarray:
    """Converts input to a two dimensional ``float64`` array, densifying sparse input."""
    if hasattr(M, 'to_dense'):
        M = M.to_dense()
    elif hasattr(M, 'toarray'):
        M = M.toarray()
    M = np.array(M, dtype=pyuzawa.dtype)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be two dimensional")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return M

def _check_symmetric(M: np.ndarray, rtol: float = 1e-12, name: str = 'matrix') -> None:
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale > 0 and np.max(np.abs(M - M.T)) > rtol * scale:
        raise AsymmetryError(f"{name} is not symmetric within relative tolerance {rtol}")

def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one cyclic sweep: every index pair meets exactly once and pairs within a round are disjoint."""
    N = n + (n % 2)
    players = list(range(N))
    rounds = []
    for _ in range(N - 1):
        p, q = [], []
        for k in range(N // 2):
            a, b = players[k], players[N - 1 - k]
            if a >= n or b >= n:
                continue
            p.append(min(a, b))
            q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds

def jacobi_eigh(M: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> EigenPairs:
    r"""Cyclic Jacobi eigendecomposition. Each sweep visits every off-diagonal pair once, grouped into rounds of disjoint rotations that are applied together. A pair is rotated only while :math:`|a_{pq}| > \epsilon\sqrt{|a_{pp}a_{qq}|}`; smaller entries are set to zero. Iteration stops after a sweep without rotations or when the off-diagonal Frobenius norm falls below :math:`n\epsilon\|M\|_F`.

    Args:
        M (np.ndarray): Symmetric matrix.
        max_sweeps (int, optional): Sweep cap. Defaults to 100.

    Returns:
        EigenPairs: Ascending eigenvalues and orthonormal eigenvectors.
    """
    A = np.array(M, dtype=pyuzawa.dtype)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return EigenPairs(np.diag(A).copy(), V)
    eps = np.finfo(A.dtype).eps
    threshold = n * eps * np.linalg.norm(A)
    rounds = _round_robin(n)
    for sweep in range(max_sweeps):
        if _off_norm(A) <= threshold:
            break
        rotated = False
        for p, q in rounds:
            apq = A[p, q]
            app = A[p, p]
            aqq = A[q, q]
            active = np.abs(apq) > eps * np.sqrt(np.abs(app * aqq))
            if not np.any(active):
                A[p, q] = 0.0
                A[q, p] = 0.0
                continue
            rotated = True
            safe = np.where(active, apq, 1.0)
            tau = (aqq - app) / (2.0 * safe)
            # hypot keeps tau**2 from overflowing
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :] = c[:, None] * Ap - s[:, None] * Aq
            A[q, :] = s[:, None] * Ap + c[:, None] * Aq
            A[p, q] = 0.0
            A[q, p] = 0.0
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
        if not rotated:
            break
    else:
        off = _off_norm(A)
        if off > threshold:
            raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (off-diagonal norm {off:.3e})")
    logger.debug("Jacobi eigensolver: n=%d, sweeps=%d", n, sweep)
    w = np.diag(A).copy()
    order = np.argsort(w, kind='stable')
    return EigenPairs(w[order], V[:, order])

def _off_norm(A: np.ndarray) -> float:
    # direct sum; ||A||^2 - ||diag A||^2 cancels down to sqrt(eps) ||A||
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))

def sym_eig(M, method: str = 'auto') -> EigenPairs:
    r"""Eigendecomposition of a symmetric matrix.

    Args:
        M (array_like): Symmetric matrix of order at most 4000.
        method (str, optional): ``'jacobi'`` for cyclic Jacobi rotations, ``'lapack'`` for ``scipy.linalg.eigh`` or ``'auto'`` (Jacobi up to order 256). Defaults to 'auto'.

    Returns:
        EigenPairs: Ascending eigenvalues, orthonormal eigenvectors.
    """
    M = as_dense(M)
    _check_symmetric(M)
    n = M.shape[0]
    if n > MAX_DESK_SIZE:
        raise DimensionError(f"sym_eig is limited to order {MAX_DESK_SIZE}, got {n}")
    if method == 'auto':
        method = 'jacobi' if n <= JACOBI_MAX_SIZE else 'lapack'
    if method == 'jacobi':
        return jacobi_eigh(M)
    elif method == 'lapack':
        w, Q = scipy.linalg.eigh(0.5 * (M + M.T))
        return EigenPairs(w, Q)
    raise ValueError(f"unknown eigensolver method '{method}'")

def eigvalsh(M) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    return sym_eig(M).eigenvalues

def _spd_pairs(M) -> EigenPairs:
    pairs = sym_eig(M)
    if pairs.max <= 0 or pairs.min <= 1e-13 * pairs.max:
        raise NotSPDError(f"matrix is singular or indefinite (eigenvalues in [{pairs.min:.3e}, {pairs.max:.3e}])")
    return pairs

def sym_sqrt(M) -> np.ndarray:
    r""":math:`M^{1/2}` of a symmetric positive definite matrix."""
    return _spd_pairs(M).spectral_function(np.sqrt)

def sym_inv_sqrt(M) -> np.ndarray:
    r""":math:`M^{-1/2}` of a symmetric positive definite matrix."""
    return _spd_pairs(M).spectral_function(lambda w: 1.0 / np.sqrt(w))

def svd_rect(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r"""Full singular value decomposition :math:`M = U[\Sigma_0\;0]V^t` of a wide matrix.

    Args:
        M (array_like): Matrix of shape ``(m, n)`` with ``m <= n``.

    Returns:
        tuple[np.ndarray, np.ndarray, np.ndarray]: ``U`` (m x m), ``Sigma0`` (m x m, diagonal, descending) and ``V`` (n x n).
    """
    M = as_dense(M)
    m, n = M.shape
    if m > n:
        raise DimensionError(f"svd_rect expects rows <= cols, got {M.shape}")
    if max(m, n) > MAX_DESK_SIZE:
        raise DimensionError(f"svd_rect is limited to order {MAX_DESK_SIZE}")
    try:
        U, s, Vt = scipy.linalg.svd(M, full_matrices=True, lapack_driver='gesvd')
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"SVD did not converge: {e}") from e
    return U, np.diag(s), Vt.T

def chol(M) -> np.ndarray:
    r"""Lower triangular :math:`R` with :math:`M = RR^t`."""
    M = as_dense(M)
    _check_symmetric(M)
    try:
        return scipy.linalg.cholesky(M, lower=True)
    except np.linalg.LinAlgError as e:
        raise NotSPDError(f"matrix is not SPD: {e}") from e

def chol_solve(R: np.ndarray, b) -> np.ndarray:
    r"""Solves :math:`RR^tz = b` given the lower Cholesky factor."""
    return scipy.linalg.cho_solve((R, True), np.asarray(b, dtype=pyuzawa.dtype))

def solve_lower(R: np.ndarray, b) -> np.ndarray:
    return scipy.linalg.solve_triangular(R, b, lower=True)

def solve_upper(U: np.ndarray, b) -> np.ndarray:
    return scipy.linalg.solve_triangular(U, b, lower=False)

def generalized_eigvalsh(A, B) -> np.ndarray:
    r"""Ascending eigenvalues of the pencil :math:`(A, B)` with :math:`B` SPD, computed as the eigenvalues of :math:`R^{-1}AR^{-t}` where :math:`B=RR^t`."""
    A = as_dense(A)
    R = chol(B)
    X = solve_lower(R, solve_lower(R, A).T).T
    return eigvalsh(0.5 * (X + X.T))

def spectral_norm(M) -> float:
    """Largest singular value."""
    M = as_dense(M)
    if M.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(M)[0])
