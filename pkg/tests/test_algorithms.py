from __future__ import annotations
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from pyuzawa.algorithms import (
    AdaptiveTheta,
    ConstantTheta,
    KappaTheta,
    UzawaConfig,
    read_history_csv,
    residuals,
    solve,
    solve_alg1,
    solve_alg2,
    solve_alg3,
    solve_nonsymmetric,
    step_omega,
    step_tau,
)
from pyuzawa.algorithms.inexact_uzawa import NonsymmetricUzawaAlgorithm
from pyuzawa.exceptions import DivergenceError, IndefiniteOperatorError, RelaxationBreakdown
from pyuzawa.linalg import SparseMatrix
from pyuzawa.metadata import ConvectionParams
from pyuzawa.preconditioners import DiagonalPreconditioner, ExactPreconditioner, HOperator, PCGPreconditioner, ic0, jacobi, schur_diag
from pyuzawa.problems import SaddleProblem, gen_convection


def exact_pair(problem):
    a_precond = ExactPreconditioner(problem.A)
    return a_precond, ExactPreconditioner(HOperator(problem, a_precond).to_dense())


def test_exact_preconditioners_converge_immediately(qp_problem):
    a_precond, s_precond = exact_pair(qp_problem)
    report = solve_alg1(qp_problem, a_precond, s_precond, UzawaConfig(tol=1e-8))
    assert report.converged
    assert report.iterations <= 3
    x, y = qp_problem.exact_solution
    assert_allclose(report.x, x, atol=1e-6)
    assert_allclose(report.y, y, atol=1e-6)
    assert report.history[0].omega == pytest.approx(1.0)
    assert report.history[0].tauhat == pytest.approx(1.0)


def test_zero_initial_residual_stops_at_once(qp_problem):
    a_precond, s_precond = exact_pair(qp_problem)
    x, y = qp_problem.exact_solution
    report = solve_alg1(qp_problem, a_precond, s_precond, x_initial=x, y_initial=y)
    assert report.converged
    assert report.iterations == 0
    assert report.history == []


def test_relaxation_conventions():
    assert step_omega(np.zeros(3), np.ones(3), lambda r: r) == 1.0
    assert step_omega(np.ones(2), np.ones(2), lambda r: 2.0 * r) == 0.5
    with pytest.raises(RelaxationBreakdown) as info:
        step_omega(np.ones(2), np.ones(2), lambda r: -r)
    assert (info.value.block, info.value.denominator) == ('A', -2.0)
    assert step_tau(np.zeros(2), np.zeros(2), lambda s: s, 0.5) == (1.0, 1.0)
    assert step_tau(np.ones(2), np.ones(2), lambda s: 4.0 * s, 0.5) == (0.25, 0.125)
    with pytest.raises(IndefiniteOperatorError):
        step_tau(np.ones(2), -np.ones(2), lambda s: s, 1.0)
    with pytest.raises(RelaxationBreakdown) as info:
        step_tau(np.ones(2), np.ones(2), lambda s: -s, 1.0)
    assert info.value.block == 'H'


def test_theta_policies():
    assert ConstantTheta(0.3)(1.0, 1) == 0.3
    assert KappaTheta(4.0, 2.0)(0.7, 3) == 0.5
    assert AdaptiveTheta(1.0)(1.0, 1) == 0.5
    assert AdaptiveTheta(0.75)(1.0, 1) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        ConstantTheta(0.0)
    with pytest.raises(ValueError):
        KappaTheta(0.5)
    with pytest.raises(ValueError):
        AdaptiveTheta(-1.0)


@pytest.mark.parametrize('changes', [
    {'variant': 'alg4'},
    {'theta': 0.0},
    {'theta': 'golden'},
    {'stop_rule': 'min'},
    {'tol': 0.0},
    {'max_iters': 0},
    {'power_iters': 5},
])
def test_config_validation(changes):
    with pytest.raises(ValueError):
        UzawaConfig(**changes)


def test_variant_mismatch_and_admissibility(qp_problem, elasticity_small):
    a_precond, s_precond = exact_pair(qp_problem)
    with pytest.raises(ValueError):
        solve_alg1(qp_problem, a_precond, s_precond, UzawaConfig(variant='alg2'))
    psi_a = PCGPreconditioner(qp_problem.A, jacobi(qp_problem.A), 1e-8)
    with pytest.raises(ValueError):
        solve_alg1(qp_problem, psi_a, s_precond)
    with pytest.raises(ValueError):
        solve_alg1(qp_problem, a_precond, schur_diag(elasticity_small))
    convection = gen_convection(ConvectionParams(4, b=2.0))
    A0 = convection.symmetric_part()
    with pytest.raises(ValueError):
        solve_alg1(convection, ic0(A0), schur_diag(convection))


def test_max_iters_status(elasticity_small):
    config = UzawaConfig(max_iters=2, tol=1e-14)
    report = solve_alg1(elasticity_small, jacobi(elasticity_small.A), schur_diag(elasticity_small), config)
    assert report.status == 'max_iters'
    assert report.iterations == 2
    assert len(report.history) == 2
    f_i, g_i = residuals(elasticity_small, report.x, report.y)
    assert report.fnorm == pytest.approx(np.linalg.norm(f_i))
    assert report.gnorm == pytest.approx(np.linalg.norm(g_i))


def test_stop_rules_measure(elasticity_small):
    a_precond, s_precond = ic0(elasticity_small.A), schur_diag(elasticity_small)
    stacked = solve_alg1(elasticity_small, a_precond, s_precond, UzawaConfig(max_iters=3, tol=1e-14))
    maximum = solve_alg1(elasticity_small, a_precond, s_precond, UzawaConfig(max_iters=3, tol=1e-14, stop_rule='max'))
    assert stacked.residual == pytest.approx(np.hypot(stacked.fnorm, stacked.gnorm))
    assert maximum.residual == pytest.approx(max(maximum.fnorm, maximum.gnorm))


def test_overdamped_iteration_diverges(qp_problem):
    a_precond, s_precond = exact_pair(qp_problem)
    config = UzawaConfig(theta=50.0, max_iters=50)
    report = solve_alg1(qp_problem, a_precond, s_precond, config)
    assert report.status == 'diverged'
    assert report.iterations < 50
    with pytest.raises(DivergenceError):
        solve_alg1(qp_problem, a_precond, s_precond, UzawaConfig(theta=50.0, max_iters=50, raise_on_divergence=True))


def test_nonlinear_variants_track_linear_one(qp_problem):
    a_precond, s_precond = exact_pair(qp_problem)
    config = UzawaConfig(tol=1e-8)
    linear = solve_alg1(qp_problem, a_precond, s_precond, config)
    psi_a = PCGPreconditioner(qp_problem.A, jacobi(qp_problem.A), 1e-12)
    alg2 = solve_alg2(qp_problem, psi_a, s_precond, UzawaConfig(variant='alg2', tol=1e-8))
    psi_h = PCGPreconditioner(HOperator(qp_problem, a_precond), None, 1e-12)
    alg3 = solve_alg3(qp_problem, a_precond, psi_h, UzawaConfig(variant='alg3', tol=1e-8))
    for report in (alg2, alg3):
        assert report.converged
        assert abs(report.iterations - linear.iterations) <= 1
        assert_allclose(report.x, qp_problem.exact_solution[0], atol=1e-6)


def test_nonsymmetric_variant_reduces_to_linear_one(elasticity_small):
    a_precond, s_precond = ic0(elasticity_small.A), schur_diag(elasticity_small)
    linear = solve_alg1(elasticity_small, a_precond, s_precond, UzawaConfig(max_iters=40))
    nonsym = solve_nonsymmetric(elasticity_small, a_precond, s_precond, UzawaConfig(variant='nonsymmetric', max_iters=40))
    assert nonsym.iterations == linear.iterations
    assert_array_equal(nonsym.x, linear.x)
    assert_array_equal(nonsym.y, linear.y)


def test_nonsymmetric_variant_converges():
    problem = gen_convection(ConvectionParams(6, b=2.0))
    A0 = problem.symmetric_part()
    config = UzawaConfig(variant='nonsymmetric', theta=1.0, tol=1e-6, max_iters=200)
    report = solve(problem, ExactPreconditioner(A0), schur_diag(problem), config)
    assert report.converged
    assert report.variant == 'nonsymmetric'


def test_nonsymmetric_variant_names_indefinite_symmetric_part(monkeypatch):
    # symmetric part -I; the positivity checks are switched off so the iteration meets it
    A = SparseMatrix(np.array([[-1.0, 2.0], [-2.0, -1.0]]))
    B = SparseMatrix(np.array([[1.0], [0.0]]))
    problem = SaddleProblem(A, B, SparseMatrix.zeros(1, 1), np.ones(2), np.zeros(1), symmetric_a=False)
    monkeypatch.setattr(NonsymmetricUzawaAlgorithm, 'n_probes', 0)
    config = UzawaConfig(variant='nonsymmetric', theta=1.0)
    with pytest.raises(RelaxationBreakdown, match='symmetric part of A not positive on iterate') as info:
        solve_nonsymmetric(problem, DiagonalPreconditioner(np.ones(2)), DiagonalPreconditioner(np.ones(1)), config)
    assert info.value.block == 'A'


def test_adaptive_theta_stays_in_range(elasticity_small):
    config = UzawaConfig(theta='adaptive', max_iters=10, tol=1e-14)
    report = solve_alg1(elasticity_small, jacobi(elasticity_small.A), schur_diag(elasticity_small), config)
    thetas = report.history_array()[:, 6]
    assert np.all(thetas > 0)
    assert np.all(thetas <= 0.5)


def test_kappa_theta_with_known_condition_number(elasticity_small):
    config = UzawaConfig(theta='kappa', kappa1=10.0, kappa_multiplier=2.0, max_iters=3, tol=1e-14)
    report = solve_alg1(elasticity_small, ic0(elasticity_small.A), schur_diag(elasticity_small), config)
    assert all(record.theta == pytest.approx(0.2) for record in report.history)


def test_runs_are_deterministic(elasticity_small):
    a_precond, s_precond = ic0(elasticity_small.A), schur_diag(elasticity_small)
    first = solve_alg1(elasticity_small, a_precond, s_precond, UzawaConfig(theta=0.5, max_iters=25))
    second = solve_alg1(elasticity_small, a_precond, s_precond, UzawaConfig(theta=0.5, max_iters=25))
    assert first.iterations == second.iterations
    assert_array_equal(first.x, second.x)
    assert_array_equal(first.history_array(), second.history_array())


def test_history_csv(tmp_path, elasticity_small):
    report = solve_alg1(elasticity_small, ic0(elasticity_small.A), schur_diag(elasticity_small), UzawaConfig(max_iters=4, tol=1e-14))
    path = tmp_path / 'history.csv'
    report.to_csv(path)
    assert path.read_text().splitlines()[0] == 'iter,fnorm,gnorm,omega,tauhat,tau,theta'
    assert read_history_csv(path) == report.history
