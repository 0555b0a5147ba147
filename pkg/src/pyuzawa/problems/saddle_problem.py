r"""The generalized saddle point system

.. math::

    \begin{pmatrix} A & B \\ B^t & -D \end{pmatrix}\begin{pmatrix} x \\ y \end{pmatrix} = \begin{pmatrix} f \\ g \end{pmatrix}

with :math:`A` positive definite (symmetric unless stated otherwise), :math:`D` symmetric positive semi-definite, and Schur complement :math:`S = B^tA^{-1}B + D`."""
from __future__ import annotations
import numpy as np
import scipy.sparse as sp
import pyuzawa
from pyuzawa.exceptions import AsymmetryError, DimensionError, NotSPDError
from pyuzawa.linalg import SparseMatrix, as_vector, matvec, matvec_transpose, eigvalsh, chol, chol_solve

DENSE_PSD_CHECK_LIMIT = 400

class SaddleProblem():
    r"""Block system :math:`(A, B, D, f, g)`. The blocks are validated on construction.

    Args:
        A (SparseMatrix): ``n x n`` matrix.
        B (SparseMatrix): ``n x m`` coupling matrix.
        D (SparseMatrix): ``m x m`` symmetric positive semi-definite matrix, possibly zero.
        f (array_like): Right hand side of length ``n``.
        g (array_like): Right hand side of length ``m``.
        symmetric_a (bool, optional): Whether ``A`` is symmetric; checked to relative tolerance 1e-12. Defaults to True.
        exact_solution (tuple[np.ndarray, np.ndarray] | None, optional): Known solution :math:`(x, y)`. Defaults to None.
        metadata (dict | None, optional): Free form description of the problem (generator name, parameters, conventions). Defaults to None.
    """
    def __init__(
        self,
        A: SparseMatrix,
        B: SparseMatrix,
        D: SparseMatrix,
        f,
        g,
        symmetric_a: bool = True,
        exact_solution: tuple[np.ndarray, np.ndarray] | None = None,
        metadata: dict | None = None,
    ) -> None:
        n, m = B.shape
        if A.shape != (n, n):
            raise DimensionError(f"A has shape {A.shape}, expected {(n, n)} from B {B.shape}")
        if D.shape != (m, m):
            raise DimensionError(f"D has shape {D.shape}, expected {(m, m)} from B {B.shape}")
        self.A = A
        self.B = B
        self.D = D
        self.f = as_vector(f, n, 'f')
        self.g = as_vector(g, m, 'g')
        self.symmetric_a = bool(symmetric_a)
        if self.symmetric_a and not A.is_symmetric(1e-12):
            raise AsymmetryError("A is flagged symmetric but max|A - A^t| exceeds 1e-12 max|A|")
        self._check_D()
        if exact_solution is not None:
            exact_solution = (as_vector(exact_solution[0], n, 'exact x'), as_vector(exact_solution[1], m, 'exact y'))
        self.exact_solution = exact_solution
        self.metadata = dict(metadata or {})

    @property
    def n(self) -> int:
        return self.B.rows

    @property
    def m(self) -> int:
        return self.B.cols

    def _check_D(self) -> None:
        D = self.D
        if not D.is_symmetric(1e-12):
            raise AsymmetryError("D must be symmetric")
        if D.nnz == 0:
            return
        if D.is_diagonal():
            if np.any(D.diagonal() < -1e-12 * D.max_abs()):
                raise NotSPDError("D has a negative diagonal entry")
        elif D.rows <= DENSE_PSD_CHECK_LIMIT:
            if eigvalsh(D.to_dense())[0] < -1e-12 * D.max_abs():
                raise NotSPDError("D is not positive semi-definite")
        else:
            rng = np.random.default_rng(0)
            for _ in range(5):
                z = rng.standard_normal(D.rows)
                z /= np.linalg.norm(z)
                if np.dot(matvec(D, z), z) < -1e-12:
                    raise NotSPDError("D is not positive semi-definite on a random probe")

    @property
    def is_d_zero(self) -> bool:
        return self.D.nnz == 0

    def residual_f(self, x, y) -> np.ndarray:
        """First block residual :math:`f - (Ax + By)`."""
        return self.f - (matvec(self.A, x) + matvec(self.B, y))

    def residual_g(self, x, y) -> np.ndarray:
        """Second block residual :math:`(B^tx - Dy) - g`."""
        return matvec_transpose(self.B, x) - matvec(self.D, y) - self.g

    def symmetric_part(self) -> SparseMatrix:
        r""":math:`A_0 = (A + A^t)/2`."""
        return self.A.symmetric_part()

    def to_dense_block(self) -> np.ndarray:
        r"""Dense block matrix :math:`\begin{pmatrix} A & B \\ B^t & -D\end{pmatrix}`."""
        B = self.B.to_dense()
        return np.block([[self.A.to_dense(), B], [B.T, -self.D.to_dense()]])

    def to_sparse_block(self) -> SparseMatrix:
        return SparseMatrix(sp.block_array([[self.A.csr, self.B.csr], [self.B.csr.T, -self.D.csr]], format='csr')
                            if hasattr(sp, 'block_array') else
                            sp.bmat([[self.A.csr, self.B.csr], [self.B.csr.T, -self.D.csr]], format='csr'))

    def schur_dense(self, A: np.ndarray | None = None) -> np.ndarray:
        r"""Dense Schur complement :math:`S = B^tA^{-1}B + D` (or :math:`B^tA_0^{-1}B + D` when the symmetric part is passed as ``A``). Only for small problems.

        Args:
            A (np.ndarray | None, optional): SPD matrix used in place of :math:`A`. Defaults to None.

        Returns:
            np.ndarray: ``m x m`` matrix.
        """
        if A is None:
            if not self.symmetric_a:
                raise AsymmetryError("schur_dense without an explicit SPD block needs a symmetric A")
            A = self.A.to_dense()
        R = chol(A)
        B = self.B.to_dense()
        S = B.T @ chol_solve(R, B) + self.D.to_dense()
        return 0.5 * (S + S.T)

    def __repr__(self) -> str:
        name = self.metadata.get('problem', 'custom')
        return f"SaddleProblem({name}, n={self.n}, m={self.m}, symmetric_a={self.symmetric_a})"


def problem_from_solution(
    A: SparseMatrix,
    B: SparseMatrix,
    D: SparseMatrix,
    x,
    y,
    symmetric_a: bool = True,
    metadata: dict | None = None,
) -> SaddleProblem:
    r"""Builds the problem whose exact solution is :math:`(x, y)`: :math:`f = Ax + By`, :math:`g = B^tx - Dy`."""
    x = as_vector(x, A.cols, 'x')
    y = as_vector(y, D.cols, 'y')
    f = matvec(A, x) + matvec(B, y)
    g = matvec_transpose(B, x) - matvec(D, y)
    return SaddleProblem(A, B, D, f, g, symmetric_a, exact_solution=(x, y), metadata=metadata)
