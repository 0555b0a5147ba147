from __future__ import annotations
import warnings
import numpy as np
import pytest
from numpy.testing import assert_allclose
from pyuzawa.exceptions import IndefiniteOperatorError, NonFiniteError, NotSPDError, NumericalWarning
from pyuzawa.linalg import SparseMatrix, matvec
from pyuzawa.preconditioners import (
    DiagonalPreconditioner,
    ExactPreconditioner,
    ExplicitInversePreconditioner,
    HOperator,
    PCGPreconditioner,
    Preconditioner,
    ScaledIdentityPreconditioner,
    ScaledPreconditioner,
    ic0,
    ict,
    incomplete_cholesky_factor,
    jacobi,
    pcg,
    probe_contract,
    schur_diag,
)


def laplacian_2d(n: int) -> SparseMatrix:
    from pyuzawa.linalg import kron
    T = SparseMatrix.tridiag(n, -1.0, 2.0, -1.0)
    I = SparseMatrix.identity(n)
    return kron(I, T) + kron(T, I)


@pytest.mark.parametrize('build', [jacobi, ic0, ict, ExactPreconditioner], ids=['jacobi', 'ic0', 'ict', 'exact'])
def test_linear_preconditioners_satisfy_contract(build):
    precond = build(laplacian_2d(5))
    assert precond.is_linear
    verdict = probe_contract(precond, rtol=1e-9)
    assert verdict == {'linear': True, 'symmetric': True, 'positive': True}


def test_jacobi_divides_by_diagonal():
    M = SparseMatrix.diagonal_matrix([2.0, 4.0, 8.0])
    assert_allclose(jacobi(M).apply([2.0, 2.0, 2.0]), [1.0, 0.5, 0.25])
    assert jacobi(M).kind == 'jacobi'


def test_diagonal_requires_positive_entries():
    with pytest.raises(NotSPDError):
        DiagonalPreconditioner([1.0, 0.0])
    with pytest.raises(NotSPDError):
        jacobi(SparseMatrix.diagonal_matrix([1.0, -2.0]))


def test_ic0_is_exact_on_tridiagonal():
    # no fill-in appears in the Cholesky factor of a tridiagonal matrix
    T = SparseMatrix.tridiag(6, -1.0, 2.0, -1.0)
    precond = ic0(T)
    b = np.arange(1.0, 7.0)
    assert_allclose(matvec(T, precond.apply(b)), b, rtol=1e-12)
    L = precond.L.to_dense()
    assert_allclose(L @ L.T, T.to_dense(), atol=1e-12)
    assert precond.shift == 0.0


@pytest.mark.parametrize('build', [ic0, lambda M: ict(M, 1e-3)])
def test_incomplete_cholesky_solves_use_c_int_indices(build, elasticity_small):
    precond = build(elasticity_small.A)
    for factor in (precond._lower, precond._upper):
        assert factor.indices.dtype == np.intc
        assert factor.indptr.dtype == np.intc
    v = np.linspace(-1.0, 1.0, elasticity_small.n)
    L = precond.L.to_dense()
    assert_allclose(L @ (L.T @ precond.apply(v)), v, rtol=1e-10, atol=1e-12)


def test_ic0_keeps_pattern_and_ict_fills_in():
    M = laplacian_2d(6)
    L0 = ic0(M).L.to_dense()
    lower = np.tril(M.to_dense())
    assert np.all((L0 != 0) <= (lower != 0))
    Lt = ict(M, 1e-6).L.to_dense()
    assert np.count_nonzero(Lt) > np.count_nonzero(L0)


def test_ict_with_tiny_droptol_is_nearly_exact():
    M = laplacian_2d(4)
    precond = ict(M, 1e-12)
    b = np.ones(M.rows)
    assert_allclose(matvec(M, precond.apply(b)), b, rtol=1e-8)


def test_incomplete_cholesky_shift_retry():
    # indefinite: every shifted attempt breaks down as well
    M = SparseMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotSPDError):
        incomplete_cholesky_factor(M)
    with pytest.raises(NotSPDError):
        ic0(M)


def test_ic0_warns_when_shift_rescues_factorization():
    M = SparseMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.warns(NumericalWarning):
        precond = ic0(M)
    assert precond.shift > 0


def test_pcg_solves_laplacian():
    M = laplacian_2d(8)
    b = np.linspace(-1.0, 1.0, M.rows)
    result = pcg(M, b, ic0(M).apply, rel_res_tol=1e-12)
    assert result.converged
    assert np.linalg.norm(b - matvec(M, result.x)) <= 1e-10 * np.linalg.norm(b)
    plain = pcg(M, b, rel_res_tol=1e-12)
    assert plain.iterations >= result.iterations


def test_pcg_zero_right_hand_side():
    result = pcg(laplacian_2d(3), np.zeros(9))
    assert result.iterations == 0
    assert result.converged
    assert not np.any(result.x)


def test_pcg_detects_indefinite_operator():
    with pytest.raises(IndefiniteOperatorError):
        pcg(np.diag([1.0, -1.0]), np.array([1.0, 1.0]))


def test_pcg_preconditioner_is_nonlinear():
    M = laplacian_2d(4)
    precond = PCGPreconditioner(M, jacobi(M), rel_res_tol=1e-3)
    assert not precond.is_linear
    assert precond.kind == 'pcg(jacobi, 0.001)'
    b = np.ones(M.rows)
    assert np.linalg.norm(b - matvec(M, precond.apply(b))) <= 1e-3 * np.linalg.norm(b)
    with pytest.raises(TypeError):
        precond.to_dense()
    with pytest.raises(TypeError):
        PCGPreconditioner(M, precond)
    with pytest.raises(ValueError):
        PCGPreconditioner(M, rel_res_tol=0.0)


def test_exact_preconditioner_methods_agree():
    M = laplacian_2d(4)
    b = np.arange(M.rows, dtype=float)
    dense = ExactPreconditioner(M, method='dense').apply(b)
    iterative = ExactPreconditioner(M, method='pcg').apply(b)
    assert_allclose(dense, iterative, rtol=1e-10, atol=1e-12)
    assert_allclose(matvec(M, dense), b, atol=1e-10)
    with pytest.raises(NotSPDError):
        ExactPreconditioner(SparseMatrix.tridiag(3, -1.0, 2.0, 0.0))
    with pytest.raises(ValueError):
        ExactPreconditioner(M, method='lu')


def test_scaled_preconditioners():
    base = jacobi(SparseMatrix.diagonal_matrix([2.0, 2.0]))
    assert_allclose(ScaledPreconditioner(base, 4.0).apply([8.0, 4.0]), [1.0, 0.5])
    assert_allclose(ScaledIdentityPreconditioner(2, 2.0).apply([2.0, 4.0]), [1.0, 2.0])
    with pytest.raises(NotSPDError):
        ScaledIdentityPreconditioner(2, 0.0)


def test_explicit_inverse_and_to_dense():
    P = np.array([[2.0, 1.0], [1.0, 3.0]])
    precond = ExplicitInversePreconditioner(P)
    assert_allclose(precond.to_dense(), P)


def test_apply_validates_output():
    class Broken(Preconditioner):
        kind = 'broken'

        def _apply(self, v):
            return v * np.nan

    with pytest.raises(NonFiniteError):
        Broken(2).apply([1.0, 1.0])


def test_h_operator_matches_dense(qp_problem):
    a_precond = ExactPreconditioner(qp_problem.A)
    H = HOperator(qp_problem, a_precond)
    assert H.shape == (qp_problem.m, qp_problem.m)
    assert_allclose(H.to_dense(), qp_problem.schur_dense(), rtol=1e-10, atol=1e-12)
    v = np.ones(qp_problem.m)
    assert_allclose(H.matvec(v), H.to_dense() @ v, rtol=1e-10)


def test_schur_diag_kinds(elasticity_small, stokes_small):
    identity_plus_d = schur_diag(elasticity_small)
    assert identity_plus_d.kind == 'identity-plus-d'
    v = np.ones(elasticity_small.m)
    assert_allclose(identity_plus_d.apply(v), 1.0 / (1.0 + elasticity_small.D.diagonal()))
    mass = schur_diag(stokes_small, 'pressure-mass')
    assert mass.kind == 'mass-diagonal'
    assert_allclose(mass.apply(np.ones(stokes_small.m)), np.full(stokes_small.m, 16.0))
    with pytest.raises(ValueError):
        schur_diag(stokes_small, 'identity-plus-d')
    with pytest.raises(ValueError):
        schur_diag(elasticity_small, 'lumped')


def test_ict_droptol_must_be_nonnegative():
    with pytest.raises(ValueError):
        ict(laplacian_2d(3), -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter('error', NumericalWarning)
        ict(laplacian_2d(3), 0.0)
