r"""Incomplete Cholesky preconditioners. Both variants compute a sparse lower triangular :math:`L` with :math:`LL^t \approx M` by a left-looking column factorization and apply :math:`(LL^t)^{-1}` with two sparse triangular solves.

* ``ic0``: no fill-in, :math:`L` keeps the sparsity pattern of the lower triangle of :math:`M`.
* ``ict``: fill-in is allowed and computed entries with :math:`|L_{ij}| < \text{droptol}\,\|M_{:,j}\|_2` are dropped.

On a nonpositive pivot the factorization is retried on :math:`M + sI` with :math:`s = 10^{-3}\max_i M_{ii}`, doubling :math:`s` at most three times before giving up."""
from __future__ import annotations
from bisect import bisect_left
import logging
import math
import warnings
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular
import pyuzawa
from pyuzawa.exceptions import DimensionError, FactorizationBreakdown, NumericalWarning
from pyuzawa.linalg import SparseMatrix
from .preconditioner import Preconditioner

logger = logging.getLogger(__name__)

SHIFT_FRACTION = 1e-3
MAX_SHIFT_DOUBLINGS = 3

def _lower_columns(M: SparseMatrix) -> tuple[list[list[int]], list[list[float]]]:
    """Rows and values of every column of the lower triangle of ``M`` (diagonal first)."""
    csc = sp.csc_array(sp.tril(M.csr, format='csc'))
    csc.sort_indices()
    rows, vals = [], []
    for j in range(M.rows):
        start, end = csc.indptr[j], csc.indptr[j + 1]
        rows.append(csc.indices[start:end].tolist())
        vals.append(csc.data[start:end].tolist())
    return rows, vals

def incomplete_cholesky_factor(
    M: SparseMatrix,
    droptol: float | None = None,
    shift: float = 0.0,
) -> SparseMatrix:
    r"""Single attempt at an incomplete Cholesky factorization of :math:`M + \text{shift}\,I`.

    Args:
        M (SparseMatrix): Symmetric matrix with a symmetric sparsity pattern.
        droptol (float | None, optional): Drop tolerance. If None, no fill-in is allowed (IC(0)). Defaults to None.
        shift (float, optional): Diagonal shift. Defaults to 0.

    Raises:
        FactorizationBreakdown: A pivot was not positive.

    Returns:
        SparseMatrix: Lower triangular factor :math:`L`.
    """
    if M.rows != M.cols:
        raise DimensionError(f"incomplete Cholesky needs a square matrix, got {M.shape}")
    n = M.rows
    m_rows, m_vals = _lower_columns(M)
    if droptol is not None:
        col_norms = np.sqrt(np.asarray(M.csr.multiply(M.csr).sum(axis=0)).ravel())
    # finished columns of L (row indices ascending, diagonal first) and, per row, the columns with a nonzero
    l_rows: list[list[int]] = []
    l_vals: list[list[float]] = []
    row_links: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for j in range(n):
        col = dict(zip(m_rows[j], m_vals[j]))
        col[j] = col.get(j, 0.0) + shift
        for k, ljk in row_links[j]:
            rows_k, vals_k = l_rows[k], l_vals[k]
            start = bisect_left(rows_k, j)
            for idx in range(start, len(rows_k)):
                i = rows_k[idx]
                if droptol is None and i not in col:
                    continue
                col[i] = col.get(i, 0.0) - vals_k[idx] * ljk
        pivot = col.pop(j)
        if not pivot > 0:
            raise FactorizationBreakdown(j, pivot)
        d = math.sqrt(pivot)
        rows_j, vals_j = [j], [d]
        for i in sorted(col):
            lij = col[i] / d
            if lij == 0.0:
                continue
            if droptol is not None and abs(lij) < droptol * col_norms[j]:
                continue
            rows_j.append(i)
            vals_j.append(lij)
            row_links[i].append((j, lij))
        l_rows.append(rows_j)
        l_vals.append(vals_j)
    indptr = np.zeros(n + 1, dtype=np.intc)
    indptr[1:] = np.cumsum([len(r) for r in l_rows])
    indices = np.fromiter((i for r in l_rows for i in r), dtype=np.intc, count=indptr[-1])
    data = np.fromiter((v for c in l_vals for v in c), dtype=pyuzawa.dtype, count=indptr[-1])
    return SparseMatrix(sp.csc_array((data, indices, indptr), shape=(n, n)))


class IncompleteCholeskyPreconditioner(Preconditioner):
    r"""Preconditioner :math:`\hat{M} = LL^t` from an incomplete Cholesky factor.

    Args:
        M (SparseMatrix): Symmetric positive definite matrix.
        droptol (float | None, optional): Drop tolerance; None gives IC(0). Defaults to None.
        allow_shift (bool, optional): Retry with diagonal shifts after a breakdown. Defaults to True.
    """
    def __init__(self, M: SparseMatrix, droptol: float | None = None, allow_shift: bool = True) -> None:
        if droptol is not None and droptol < 0:
            raise ValueError(f"droptol must be nonnegative, got {droptol}")
        super().__init__(M.rows)
        self.droptol = droptol
        self.kind = 'ic0' if droptol is None else f'ict({droptol:g})'
        self.shift = 0.0
        base_shift = SHIFT_FRACTION * float(np.max(M.diagonal())) if M.rows else 0.0
        shifts = [0.0] + [base_shift * 2**k for k in range(MAX_SHIFT_DOUBLINGS + 1)] if allow_shift else [0.0]
        for shift in shifts:
            try:
                self.L = incomplete_cholesky_factor(M, droptol, shift)
                break
            except FactorizationBreakdown as e:
                breakdown = e
                logger.info("%s: breakdown at row %d (pivot %.3e) with shift %.3e", self.kind, e.row, e.pivot, shift)
        else:
            raise breakdown
        if shift > 0:
            self.shift = shift
            warnings.warn(f"{self.kind} factorization needed a diagonal shift of {shift:.3e}", NumericalWarning)
        self._lower = _cint_csr(self.L.csr)
        self._upper = _cint_csr(self.L.csr.T)

    def _apply(self, v):
        w = spsolve_triangular(self._lower, v, lower=True)
        return spsolve_triangular(self._upper, w, lower=False)


def _cint_csr(M) -> sp.csr_array:
    # the SuperLU path of spsolve_triangular accepts C int index arrays only
    M = sp.csr_array(M)
    M.indices = M.indices.astype(np.intc, copy=False)
    M.indptr = M.indptr.astype(np.intc, copy=False)
    return M


def ic0(M: SparseMatrix) -> IncompleteCholeskyPreconditioner:
    return IncompleteCholeskyPreconditioner(M)

def ict(M: SparseMatrix, droptol: float = 1e-3) -> IncompleteCholeskyPreconditioner:
    return IncompleteCholeskyPreconditioner(M, droptol=droptol)
