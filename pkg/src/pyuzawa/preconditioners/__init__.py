"""Preconditioners for the two blocks of a saddle point system. Every preconditioner exposes ``apply(v)``, which evaluates the inverse of the matrix it stands for, a ``kind`` tag and an ``is_linear`` flag. Linear ones (Jacobi, incomplete Cholesky, exact, diagonal Schur approximations) are fixed SPD operators; :class:`PCGPreconditioner` wraps an inner conjugate gradient solve and is nonlinear.
"""
from .preconditioner import Preconditioner, ScaledPreconditioner, ScaledIdentityPreconditioner, DiagonalPreconditioner, ExplicitInversePreconditioner, probe_contract
from .jacobi import JacobiPreconditioner, jacobi
from .incomplete_cholesky import IncompleteCholeskyPreconditioner, incomplete_cholesky_factor, ic0, ict
from .pcg import PCGResult, PCGPreconditioner, pcg, pcg_nonlinear, as_operator
from .exact import ExactPreconditioner, exact
from .schur import HOperator, schur_diag
