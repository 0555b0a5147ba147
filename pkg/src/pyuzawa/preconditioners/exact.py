from __future__ import annotations
import logging
import numpy as np
import pyuzawa
from pyuzawa.exceptions import IndefiniteOperatorError, NotSPDError
from pyuzawa.linalg import SparseMatrix, chol, chol_solve
from pyuzawa.linalg.dense import MAX_DESK_SIZE
from .preconditioner import Preconditioner
from .incomplete_cholesky import IncompleteCholeskyPreconditioner
from .pcg import pcg

logger = logging.getLogger(__name__)

EXACT_PCG_TOL = 1e-14

class ExactPreconditioner(Preconditioner):
    r"""Preconditioner :math:`\hat{M} = M` whose ``apply`` solves :math:`Mz=v`. Matrices of order at most 4000 are factored with a dense Cholesky decomposition; larger ones are solved by IC(0) preconditioned CG to a relative residual of :math:`10^{-14}`.

    Args:
        M (SparseMatrix | np.ndarray): Symmetric positive definite matrix.
        method (str, optional): ``'dense'``, ``'pcg'`` or ``'auto'``. Defaults to 'auto'.
    """
    kind = 'exact'

    def __init__(self, M: SparseMatrix | np.ndarray, method: str = 'auto') -> None:
        if not isinstance(M, SparseMatrix):
            M = SparseMatrix(np.asarray(M, dtype=pyuzawa.dtype))
        super().__init__(M.rows)
        if not M.is_symmetric():
            raise NotSPDError("exact preconditioner needs a symmetric matrix")
        if method == 'auto':
            method = 'dense' if M.rows <= MAX_DESK_SIZE else 'pcg'
        if method not in ('dense', 'pcg'):
            raise ValueError(f"unknown method '{method}'")
        self.method = method
        self.matrix = M
        if method == 'dense':
            self._factor = chol(M.to_dense())
        else:
            logger.info("exact preconditioner of order %d uses IC(0)-PCG to %.0e", M.rows, EXACT_PCG_TOL)
            self._inner = IncompleteCholeskyPreconditioner(M)

    def _apply(self, v):
        if self.method == 'dense':
            return chol_solve(self._factor, v)
        try:
            result = pcg(self.matrix, v, self._inner.apply, EXACT_PCG_TOL, max_iters=10 * self.size)
        except IndefiniteOperatorError as e:
            raise NotSPDError(f"exact preconditioner: {e}") from e
        return result.x

def exact(M: SparseMatrix | np.ndarray, method: str = 'auto') -> ExactPreconditioner:
    return ExactPreconditioner(M, method)
