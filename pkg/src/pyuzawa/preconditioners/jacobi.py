from __future__ import annotations
from pyuzawa.linalg import SparseMatrix
from .preconditioner import DiagonalPreconditioner

class JacobiPreconditioner(DiagonalPreconditioner):
    r"""Diagonal (Jacobi) preconditioner :math:`\hat{M} = \text{diag}(M)`.

    Args:
        M (SparseMatrix): Square matrix with a positive diagonal.
    """
    def __init__(self, M: SparseMatrix) -> None:
        super().__init__(M.diagonal(), kind='jacobi')

def jacobi(M: SparseMatrix) -> JacobiPreconditioner:
    return JacobiPreconditioner(M)
