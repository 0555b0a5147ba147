from __future__ import annotations
from typing import NamedTuple
import numpy as np
import scipy.linalg
from pyuzawa.exceptions import NotSPDError
from pyuzawa.linalg import sym_eig, spectral_norm
from .constants import check_dense_path

class NonsymDiagnostics(NamedTuple):
    r""":math:`\|J-I\|`, :math:`\|J^{-1}-I\|` and :math:`\|S-S_0\|` with :math:`J = A_0^{1/2}A^{-1}A_0^{1/2}` and :math:`S_0 = B^tA_0^{-1}B + D`."""
    j_minus_identity: float
    j_inverse_minus_identity: float
    schur_difference: float

def nonsym_diagnostics(problem) -> NonsymDiagnostics:
    r"""How far a nonsymmetric :math:`A` is from its symmetric part :math:`A_0` as seen by the Uzawa iteration. The iteration converges when all three norms are small.

    Args:
        problem (SaddleProblem): Desk sized problem whose :math:`A_0` is positive definite.

    Returns:
        NonsymDiagnostics: The three spectral norms.
    """
    check_dense_path(problem)
    A = problem.A.to_dense()
    A0 = 0.5 * (A + A.T)
    # a symmetric A is only checked to rounding, its skew part is taken as zero
    K = np.zeros_like(A) if problem.symmetric_a else 0.5 * (A - A.T)
    pairs = sym_eig(A0)
    if pairs.min <= 0:
        raise NotSPDError(f"symmetric part of A is not positive definite (smallest eigenvalue {pairs.min:.3e})")
    A0_sqrt = pairs.spectral_function(np.sqrt)
    A0_inv_sqrt = pairs.spectral_function(lambda w: 1.0 / np.sqrt(w))
    A0_inv = pairs.spectral_function(lambda w: 1.0 / w)
    lu = scipy.linalg.lu_factor(A)
    B = problem.B.to_dense()
    # through K, so all three vanish exactly when K = 0
    J_minus_I = -A0_sqrt @ scipy.linalg.lu_solve(lu, K @ A0_inv_sqrt)
    J_inv_minus_I = A0_inv_sqrt @ K @ A0_inv_sqrt
    S_minus_S0 = -B.T @ scipy.linalg.lu_solve(lu, K @ (A0_inv @ B))
    return NonsymDiagnostics(spectral_norm(J_minus_I), spectral_norm(J_inv_minus_I), spectral_norm(S_minus_S0))
