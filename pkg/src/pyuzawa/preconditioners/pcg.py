r"""Preconditioned conjugate gradients and the nonlinear preconditioner built on it. An inner PCG solve started from zero and stopped on a relative residual is an input dependent approximation of :math:`M^{-1}`; the accuracy contracts of the nonlinear Uzawa variants are stated in the :math:`M`-norm, which PCG cannot measure, so the relative residual is used as the stopping proxy."""
from __future__ import annotations
from collections.abc import Callable
from dataclasses import dataclass
import logging
import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator
import pyuzawa
from pyuzawa.exceptions import DimensionError, IndefiniteOperatorError
from pyuzawa.linalg import SparseMatrix, as_vector, dot, norm2
from .preconditioner import Preconditioner

logger = logging.getLogger(__name__)

def as_operator(M) -> LinearOperator:
    """Wraps a ``SparseMatrix``, dense array, sparse array or ``LinearOperator`` as a ``LinearOperator``."""
    if isinstance(M, SparseMatrix):
        return aslinearoperator(M.csr)
    if isinstance(M, LinearOperator):
        return M
    return aslinearoperator(M)

@dataclass
class PCGResult:
    """Outcome of one PCG solve.

    Args:
        x (np.ndarray): Final iterate.
        iterations (int): Number of iterations performed.
        residual_norm (float): Recursively updated residual norm at exit.
        converged (bool): Whether the relative residual reached the tolerance.
    """
    x: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool

def pcg(
    M,
    b,
    precond: Callable[[np.ndarray], np.ndarray] | None = None,
    rel_res_tol: float = 1e-10,
    max_iters: int | None = None,
) -> PCGResult:
    r"""Solves :math:`Mx=b` for symmetric positive definite :math:`M` by preconditioned conjugate gradients started from :math:`x_0 = 0`.

    Args:
        M (SparseMatrix | LinearOperator | array_like): System operator.
        b (array_like): Right hand side.
        precond (Callable, optional): Linear SPD preconditioner :math:`v \mapsto P^{-1}v`. Defaults to the identity.
        rel_res_tol (float, optional): Stops once :math:`\|b - Mx\| \le \text{rel\_res\_tol}\,\|b\|`. Defaults to 1e-10.
        max_iters (int | None, optional): Iteration cap. Defaults to ``10*len(b)``.

    Raises:
        IndefiniteOperatorError: A search direction with :math:`\langle Mp,p\rangle \le 0` was met.

    Returns:
        PCGResult: Solution and convergence information.
    """
    op = as_operator(M)
    b = as_vector(b, op.shape[1], 'pcg right hand side')
    if op.shape[0] != op.shape[1]:
        raise DimensionError(f"pcg needs a square operator, got {op.shape}")
    if max_iters is None:
        max_iters = 10 * b.shape[0]
    x = np.zeros_like(b)
    bnorm = norm2(b)
    if bnorm == 0.0:
        return PCGResult(x, 0, 0.0, True)
    r = b.copy()
    z = r if precond is None else precond(r)
    p = z.copy()
    rz = dot(r, z)
    rnorm = bnorm
    for k in range(1, max_iters + 1):
        q = op.matvec(p).ravel()
        curvature = dot(p, q)
        if not curvature > 0:
            raise IndefiniteOperatorError(f"pcg: nonpositive curvature {curvature:.3e} at iteration {k}")
        a = rz / curvature
        x += a * p
        r -= a * q
        rnorm = norm2(r)
        if rnorm <= rel_res_tol * bnorm:
            return PCGResult(x, k, rnorm, True)
        z = r if precond is None else precond(r)
        rz_next = dot(r, z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    logger.debug("pcg: no convergence in %d iterations (relative residual %.3e)", max_iters, rnorm / bnorm)
    return PCGResult(x, max_iters, rnorm, False)


class PCGPreconditioner(Preconditioner):
    r"""Nonlinear preconditioner :math:`\Psi(\xi)` given by an inner PCG solve of :math:`Mz=\xi` from a zero initial guess.

    Args:
        M (SparseMatrix | LinearOperator): SPD operator, possibly matrix free.
        inner (Preconditioner | None, optional): Linear preconditioner of the inner iteration. Defaults to None (identity).
        rel_res_tol (float, optional): Relative residual tolerance of every inner solve. Defaults to 1e-6.
        max_inner (int | None, optional): Inner iteration cap. Defaults to ``10*size``.
    """
    kind = 'pcg'
    is_linear = False

    def __init__(
        self,
        M,
        inner: Preconditioner | None = None,
        rel_res_tol: float = 1e-6,
        max_inner: int | None = None,
    ) -> None:
        self.operator = as_operator(M)
        super().__init__(self.operator.shape[0])
        if inner is not None and not inner.is_linear:
            raise TypeError("the inner preconditioner of PCG must be linear")
        if not rel_res_tol > 0:
            raise ValueError(f"rel_res_tol must be positive, got {rel_res_tol}")
        self.inner = inner
        self.rel_res_tol = float(rel_res_tol)
        self.max_inner = max_inner
        inner_kind = 'none' if inner is None else inner.kind
        self.kind = f'pcg({inner_kind}, {self.rel_res_tol:g})'

    def solve(self, xi) -> PCGResult:
        """Runs the inner solve and returns the full :class:`PCGResult`."""
        precond = None if self.inner is None else self.inner.apply
        return pcg(self.operator, xi, precond, self.rel_res_tol, self.max_inner)

    def _apply(self, v):
        return self.solve(v).x


def pcg_nonlinear(
    M,
    inner_precond: Preconditioner | None = None,
    rel_res_tol: float = 1e-6,
    max_inner: int | None = None,
) -> PCGPreconditioner:
    return PCGPreconditioner(M, inner_precond, rel_res_tol, max_inner)
