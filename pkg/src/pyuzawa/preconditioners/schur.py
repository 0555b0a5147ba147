r"""Schur complement side of the preconditioning: the matrix free approximate Schur complement :math:`H = B^t\hat{A}^{-1}B + D` and the diagonal preconditioners :math:`\hat{S}` used in the experiments."""
from __future__ import annotations
import numpy as np
from scipy.sparse.linalg import LinearOperator
import pyuzawa
from pyuzawa.exceptions import DimensionError
from pyuzawa.linalg import matvec, matvec_transpose
from .preconditioner import Preconditioner, DiagonalPreconditioner, ScaledIdentityPreconditioner

class HOperator(LinearOperator):
    r"""Matrix free :math:`H = B^t\hat{A}^{-1}B + D`. Every product costs one application of :math:`\hat{A}^{-1}`.

    Args:
        problem (SaddleProblem): Source of the blocks :math:`B` and :math:`D`.
        a_precond (Preconditioner): Preconditioner :math:`\hat{A}` (linear or not).
    """
    def __init__(self, problem, a_precond: Preconditioner) -> None:
        if a_precond.size != problem.n:
            raise DimensionError(f"preconditioner of size {a_precond.size} does not match n = {problem.n}")
        self.problem = problem
        self.a_precond = a_precond
        super().__init__(dtype=np.dtype(pyuzawa.dtype), shape=(problem.m, problem.m))

    def _matvec(self, v):
        v = np.asarray(v, dtype=pyuzawa.dtype).ravel()
        Bv = matvec(self.problem.B, v)
        return matvec_transpose(self.problem.B, self.a_precond.apply(Bv)) + matvec(self.problem.D, v)

    def _rmatvec(self, v):
        return self._matvec(v)

    def to_dense(self) -> np.ndarray:
        """Dense :math:`H`, assembled through ``a_precond.to_dense()``."""
        B = self.problem.B.to_dense()
        H = B.T @ self.a_precond.to_dense() @ B + self.problem.D.to_dense()
        return 0.5 * (H + H.T)


def schur_diag(problem, kind: str = 'identity-plus-d', h: float | None = None) -> Preconditioner:
    r"""Diagonal Schur complement preconditioners.

    Args:
        problem (SaddleProblem): Problem whose ``m`` and ``D`` are used.
        kind (str, optional): ``'identity-plus-d'`` for :math:`\hat{S} = I + D` (``D`` must be diagonal) or ``'pressure-mass'`` for :math:`\hat{S} = h^2 I`. Defaults to 'identity-plus-d'.
        h (float | None, optional): Mesh width, required by ``'pressure-mass'``. Falls back to ``problem.metadata['h']``. Defaults to None.

    Returns:
        Preconditioner: The preconditioner.
    """
    if kind == 'identity-plus-d':
        if not problem.D.is_diagonal():
            raise ValueError("identity-plus-d needs a diagonal D")
        return DiagonalPreconditioner(1.0 + problem.D.diagonal(), kind='identity-plus-d')
    elif kind == 'pressure-mass':
        if h is None:
            h = problem.metadata.get('h')
        if h is None:
            raise ValueError("pressure-mass needs the mesh width h")
        precond = ScaledIdentityPreconditioner(problem.m, float(h) ** 2)
        precond.kind = 'mass-diagonal'
        return precond
    raise ValueError(f"unknown Schur preconditioner kind '{kind}'")
