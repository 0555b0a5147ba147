from __future__ import annotations
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pyuzawa.exceptions import AsymmetryError, DimensionError, NotSPDError
from pyuzawa.linalg import SparseMatrix
from pyuzawa.metadata import AlgebraicParams, ConvectionParams, ElasticityParams, RandomQPParams, StokesParams, inclusion_lambda
from pyuzawa.problems import SaddleProblem, gen_algebraic, gen_convection, gen_elasticity, gen_random_qp, gen_stokes_q1p0


def test_elasticity_dimensions():
    problem = gen_elasticity(ElasticityParams(5))
    assert (problem.n, problem.m) == (2 * 5 * 4, 25)
    assert problem.symmetric_a
    assert problem.D.is_diagonal()
    assert_array_equal(problem.f, np.zeros(problem.n))
    assert_array_equal(problem.g, np.ones(problem.m))


def test_elasticity_inclusion_values():
    problem = gen_elasticity(ElasticityParams(4, mu=2.0, lambda_field=inclusion_lambda(100.0)))
    d = problem.D.diagonal()
    # cell centers 0.375 and 0.625 lie inside (0.25, 0.75)
    inside = np.zeros((4, 4), dtype=bool)
    inside[1:3, 1:3] = True
    assert_allclose(d[inside.ravel()], 1.0 / 102.0)
    assert_allclose(d[~inside.ravel()], 0.5)


def test_elasticity_a_is_positive_definite(elasticity_small):
    assert np.linalg.eigvalsh(elasticity_small.A.to_dense())[0] > 0


def test_convection_symmetric_part_is_elasticity():
    elasticity = gen_elasticity(ElasticityParams(4))
    convection = gen_convection(ConvectionParams(4, b=10.0))
    assert not convection.symmetric_a
    assert not convection.A.is_symmetric()
    difference = (convection.symmetric_part() - elasticity.A).to_dense()
    assert np.max(np.abs(difference)) <= 1e-13 * elasticity.A.max_abs()
    assert convection.B == elasticity.B
    assert convection.D == elasticity.D


def test_convection_without_b_is_elasticity():
    elasticity = gen_elasticity(ElasticityParams(4))
    convection = gen_convection(ConvectionParams(4, b=0.0))
    assert convection.symmetric_a
    assert convection.A == elasticity.A


def test_stokes_dimensions(stokes_small):
    assert (stokes_small.n, stokes_small.m) == (2 * 3 * 3, 16)
    assert stokes_small.metadata['h'] == 0.25
    assert not stokes_small.D.is_diagonal()
    assert stokes_small.symmetric_a
    assert_array_equal(stokes_small.g, np.zeros(16))


def test_stokes_pressure_nullspace(stokes_small):
    # constants lie in the kernel of both B and D
    ones = np.ones(stokes_small.m)
    assert np.max(np.abs(stokes_small.B @ ones)) <= 1e-14
    assert np.max(np.abs(stokes_small.D @ ones)) <= 1e-14


def test_algebraic_solution_is_ones():
    problem = gen_algebraic(AlgebraicParams(10, 4))
    assert (problem.n, problem.m) == (10, 4)
    x, y = problem.exact_solution
    assert_array_equal(x, np.ones(10))
    assert_allclose(problem.residual_f(x, y), 0.0, atol=1e-14)
    assert_allclose(problem.residual_g(x, y), 0.0, atol=1e-14)
    assert problem.D == SparseMatrix.identity(4)


def test_random_qp_is_seeded():
    a = gen_random_qp(RandomQPParams(8, 3, 0.1, seed=11))
    b = gen_random_qp(RandomQPParams(8, 3, 0.1, seed=11))
    assert a.A == b.A
    assert_array_equal(a.f, b.f)
    x, y = a.exact_solution
    assert_allclose(a.residual_f(x, y), 0.0, atol=1e-12)
    assert_allclose(a.residual_g(x, y), 0.0, atol=1e-12)
    assert gen_random_qp(RandomQPParams(8, 3, 0.0, seed=11)).is_d_zero


@pytest.mark.parametrize('build', [
    lambda: ElasticityParams(1),
    lambda: ElasticityParams(4, mu=0.0),
    lambda: StokesParams(4, nu=-1.0),
    lambda: AlgebraicParams(4, 4),
    lambda: RandomQPParams(3, 4),
    lambda: RandomQPParams(4, 2, epsilon=-1.0),
])
def test_invalid_parameters(build):
    with pytest.raises(ValueError):
        build()


def test_saddle_problem_validation():
    A = SparseMatrix.identity(3)
    B = SparseMatrix(np.ones((3, 1)))
    D = SparseMatrix.zeros(1, 1)
    with pytest.raises(DimensionError):
        SaddleProblem(SparseMatrix.identity(2), B, D, np.zeros(3), np.zeros(1))
    with pytest.raises(DimensionError):
        SaddleProblem(A, B, D, np.zeros(2), np.zeros(1))
    with pytest.raises(AsymmetryError):
        SaddleProblem(SparseMatrix.tridiag(3, 0.0, 1.0, 1.0), B, D, np.zeros(3), np.zeros(1))
    with pytest.raises(NotSPDError):
        SaddleProblem(A, B, SparseMatrix.identity(1, -1.0), np.zeros(3), np.zeros(1))
    problem = SaddleProblem(SparseMatrix.tridiag(3, 0.0, 1.0, 1.0), B, D, np.zeros(3), np.zeros(1), symmetric_a=False)
    assert repr(problem) == 'SaddleProblem(custom, n=3, m=1, symmetric_a=False)'


def test_block_views(qp_problem):
    K = qp_problem.to_dense_block()
    assert K.shape == (16, 16)
    assert_allclose(K, qp_problem.to_sparse_block().to_dense())
    x, y = qp_problem.exact_solution
    assert_allclose(K @ np.concatenate([x, y]), np.concatenate([qp_problem.f, qp_problem.g]), atol=1e-12)
