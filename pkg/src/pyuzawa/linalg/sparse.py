r"""Sparse matrix and vector primitives used by every other part of pyuzawa. Vectors are one dimensional ``numpy`` arrays of ``float64``; matrices are :class:`SparseMatrix`, an immutable wrapper around a canonical ``scipy.sparse`` CSR array (sorted column indices, no duplicates, no stored zeros). A fixed storage order makes :math:`Mv` accumulate in the same row order on every call, so iteration counts are reproducible bit for bit."""
from __future__ import annotations
from collections.abc import Sequence
import numpy as np
import scipy.sparse as sp
import pyuzawa
from pyuzawa.exceptions import DimensionError, NonFiniteError

Vector = np.ndarray

def as_vector(v, length: int | None = None, name: str = 'vector') -> Vector:
    """Converts input into a contiguous one dimensional ``float64`` array and checks it.

    Args:
        v (array_like): Input entries.
        length (int | None, optional): Required length. Defaults to None (any length).
        name (str, optional): Name used in error messages. Defaults to 'vector'.

    Returns:
        np.ndarray: The vector.
    """
    v = np.ascontiguousarray(v, dtype=pyuzawa.dtype)
    if v.ndim != 1:
        v = v.reshape(-1)
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return v

def _check_finite(v: Vector, what: str) -> Vector:
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{what} produced NaN or Inf")
    return v


class SparseMatrix:
    r"""Row compressed real matrix. Construction canonicalizes the storage: duplicate :math:`(i,j)` pairs are summed, explicit zeros dropped and column indices sorted within every row.

    Args:
        matrix (scipy.sparse matrix | np.ndarray | SparseMatrix): Entries of the matrix.
        shape (tuple[int, int] | None, optional): Shape, needed only when ``matrix`` does not define one. Defaults to None.
    """
    __slots__ = ('_csr',)

    def __init__(self, matrix, shape: tuple[int, int] | None = None) -> None:
        if isinstance(matrix, SparseMatrix):
            csr = matrix._csr.copy()
        elif sp.issparse(matrix):
            csr = sp.csr_array(matrix, dtype=pyuzawa.dtype)
        else:
            dense = np.asarray(matrix, dtype=pyuzawa.dtype)
            if dense.ndim != 2:
                raise DimensionError(f"expected a two dimensional array, got {dense.ndim} dimensions")
            csr = sp.csr_array(dense)
        if shape is not None and tuple(csr.shape) != tuple(shape):
            csr = sp.csr_array(csr, shape=shape)
        csr = csr.copy()
        csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise NonFiniteError("matrix entries contain NaN or Inf")
        self._csr = csr

    @classmethod
    def from_triplets(
        cls,
        rows: Sequence[int],
        cols: Sequence[int],
        values: Sequence[float],
        shape: tuple[int, int],
    ) -> SparseMatrix:
        """Builds a matrix from coordinate triplets; repeated positions are summed.

        Args:
            rows (Sequence[int]): Row indices (0-based).
            cols (Sequence[int]): Column indices (0-based).
            values (Sequence[float]): Entry values.
            shape (tuple[int, int]): Matrix shape.

        Returns:
            SparseMatrix: The assembled matrix.
        """
        coo = sp.coo_array((np.asarray(values, dtype=pyuzawa.dtype), (np.asarray(rows), np.asarray(cols))), shape=shape)
        return cls(coo.tocsr())

    @classmethod
    def identity(cls, n: int, scale: float = 1.0) -> SparseMatrix:
        return cls(sp.identity(n, dtype=pyuzawa.dtype, format='csr') * scale)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> SparseMatrix:
        return cls(sp.csr_array((rows, cols), dtype=pyuzawa.dtype))

    @classmethod
    def diagonal_matrix(cls, values: Sequence[float]) -> SparseMatrix:
        values = np.asarray(values, dtype=pyuzawa.dtype)
        return cls(sp.diags_array(values, offsets=0, format='csr') if hasattr(sp, 'diags_array') else sp.diags(values, 0, format='csr'))

    @classmethod
    def tridiag(cls, n: int, lower: float, diag: float, upper: float) -> SparseMatrix:
        """Constant coefficient tridiagonal matrix ``tridiag(lower, diag, upper)`` of order ``n``."""
        return cls(sp.diags([lower, diag, upper], [-1, 0, 1], shape=(n, n), format='csr', dtype=pyuzawa.dtype))

    @property
    def csr(self) -> sp.csr_array:
        """Underlying canonical CSR array. Callers must not modify it in place."""
        return self._csr

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self._csr.shape)

    @property
    def rows(self) -> int:
        return self._csr.shape[0]

    @property
    def cols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def diagonal(self) -> Vector:
        return np.asarray(self._csr.diagonal(), dtype=pyuzawa.dtype)

    def transpose(self) -> SparseMatrix:
        return SparseMatrix(self._csr.T.tocsr())

    @property
    def T(self) -> SparseMatrix:
        return self.transpose()

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Returns ``(rows, cols, values)`` in row-major order."""
        coo = self._csr.tocoo()
        return coo.row, coo.col, coo.data

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._csr.data))) if self.nnz else 0.0

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        r"""Whether :math:`\max|M-M^t| \le \text{rtol}\cdot\max|M|` entrywise."""
        if self.rows != self.cols:
            return False
        scale = self.max_abs()
        if scale == 0.0:
            return True
        diff = (self._csr - self._csr.T).tocsr()
        worst = float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
        return worst <= rtol * scale

    def is_diagonal(self) -> bool:
        rows, cols, _ = self.triplets()
        return bool(np.all(rows == cols))

    def symmetric_part(self) -> SparseMatrix:
        r""":math:`(M+M^t)/2`."""
        return SparseMatrix((self._csr + self._csr.T) * 0.5)

    def scaled(self, c: float) -> SparseMatrix:
        return SparseMatrix(self._csr * c)

    def __add__(self, other: SparseMatrix) -> SparseMatrix:
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return SparseMatrix(self._csr + other._csr)

    def __sub__(self, other: SparseMatrix) -> SparseMatrix:
        if self.shape != other.shape:
            raise DimensionError(f"cannot subtract {other.shape} from {self.shape}")
        return SparseMatrix(self._csr - other._csr)

    def __mul__(self, c: float) -> SparseMatrix:
        return self.scaled(float(c))

    __rmul__ = __mul__

    def __matmul__(self, v):
        if isinstance(v, SparseMatrix):
            if self.cols != v.rows:
                raise DimensionError(f"cannot multiply {self.shape} by {v.shape}")
            return SparseMatrix(self._csr @ v._csr)
        return matvec(self, v)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix) or self.shape != other.shape:
            return False
        a, b = self._csr, other._csr
        return (np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.data, b.data))

    __hash__ = None

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def matvec(M: SparseMatrix, v) -> Vector:
    r"""Computes :math:`Mv`.

    Args:
        M (SparseMatrix): Matrix with ``cols(M) == len(v)``.
        v (array_like): Vector.

    Returns:
        np.ndarray: :math:`Mv`
    """
    v = np.asarray(v, dtype=pyuzawa.dtype)
    if v.ndim != 1 or v.shape[0] != M.cols:
        raise DimensionError(f"matvec: matrix has {M.cols} columns, vector has length {v.shape}")
    return _check_finite(M.csr @ v, 'matvec')

def matvec_transpose(M: SparseMatrix, v) -> Vector:
    r"""Computes :math:`M^tv` without forming :math:`M^t` explicitly."""
    v = np.asarray(v, dtype=pyuzawa.dtype)
    if v.ndim != 1 or v.shape[0] != M.rows:
        raise DimensionError(f"matvec_transpose: matrix has {M.rows} rows, vector has length {v.shape}")
    return _check_finite(M.csr.T @ v, 'matvec_transpose')

def _check_same_length(u: Vector, v: Vector, what: str) -> None:
    if u.shape != v.shape:
        raise DimensionError(f"{what}: lengths {u.shape} and {v.shape} differ")

def dot(u, v) -> float:
    r"""Euclidean inner product :math:`\langle u,v\rangle` accumulated sequentially."""
    u = np.asarray(u, dtype=pyuzawa.dtype)
    v = np.asarray(v, dtype=pyuzawa.dtype)
    _check_same_length(u, v, 'dot')
    # np.dot uses blocked BLAS reductions; a cumulative sum keeps the summation order fixed
    if u.size == 0:
        return 0.0
    return float(np.cumsum(u * v)[-1])

def axpy(a: float, u, v) -> Vector:
    r""":math:`au+v` as a new vector."""
    u = np.asarray(u, dtype=pyuzawa.dtype)
    v = np.asarray(v, dtype=pyuzawa.dtype)
    _check_same_length(u, v, 'axpy')
    return _check_finite(a * u + v, 'axpy')

def norm2(v) -> float:
    r""":math:`\sqrt{\langle v,v\rangle}`."""
    return float(np.sqrt(dot(v, v)))

def kron(M: SparseMatrix, N: SparseMatrix) -> SparseMatrix:
    r"""Kronecker product :math:`M\otimes N` whose entry :math:`(i r_N + k, j c_N + l)` is :math:`M_{ij}N_{kl}`.

    Args:
        M (SparseMatrix): Left factor.
        N (SparseMatrix): Right factor.

    Returns:
        SparseMatrix: Product of shape ``(rows(M) rows(N), cols(M) cols(N))``.
    """
    if 0 in M.shape or 0 in N.shape:
        raise DimensionError("kron: operands must be nonempty")
    limit = np.iinfo(np.int64).max
    if M.rows * N.rows > limit or M.cols * N.cols > limit or M.nnz * N.nnz > limit:
        raise DimensionError("kron: result exceeds the index range")
    return SparseMatrix(sp.kron(M.csr, N.csr, format='csr'))

def block_diag(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    return SparseMatrix(sp.block_diag([b.csr for b in blocks], format='csr'))

def vstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    cols = {b.cols for b in blocks}
    if len(cols) != 1:
        raise DimensionError(f"vstack: column counts differ {sorted(cols)}")
    return SparseMatrix(sp.vstack([b.csr for b in blocks], format='csr'))
