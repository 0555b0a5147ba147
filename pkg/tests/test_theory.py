from __future__ import annotations
import numpy as np
import pytest
import scipy.linalg
from numpy.testing import assert_allclose
import pyuzawa
from pyuzawa.algorithms import UzawaConfig, solve_alg1
from pyuzawa.callbacks import IterateStorageCallback
from pyuzawa.exceptions import DimensionError, NumericalWarning
from pyuzawa.io import parse_key_value
from pyuzawa.linalg import SparseMatrix
from pyuzawa.metadata import ConvectionParams
from pyuzawa.preconditioners import DiagonalPreconditioner, ExactPreconditioner, ExplicitInversePreconditioner, ScaledPreconditioner, jacobi
from pyuzawa.problems import SaddleProblem, gen_convection
from pyuzawa.theory import (
    DenseSystem,
    alpha_i,
    asymptotic_rate,
    beta_i_and_Gi_spectrum,
    clustered_d0_instance,
    constants,
    contraction_check,
    convergence_check,
    corpus_instance,
    corollary_check,
    corollary_rate,
    d0_lemma_check,
    d0_scalar_roots,
    delta_bounds,
    gamma_rate,
    lambda_hat_estimate,
    nonsym_diagnostics,
    verify_corpus,
)
from pyuzawa.theory.error_propagation import rounding_level


def exact_pair(problem, scale=1.0):
    A_inv = scipy.linalg.inv(problem.A.to_dense())
    a_precond = ExplicitInversePreconditioner(A_inv / scale)
    H = DenseSystem(problem, a_precond).H
    return a_precond, ExplicitInversePreconditioner(scipy.linalg.inv(H))


def test_delta_bounds():
    assert delta_bounds(0.5, 2.0, float('inf'), 'infinite') == (0.5, 2.0)
    assert delta_bounds(0.5, 2.0, 1.0, 'finite') == pytest.approx((0.75, 1.5))
    assert delta_bounds(0.5, 2.0, 3.0, 'partial') == (0.5, 2.0)
    # lambda above one is clipped
    assert delta_bounds(1.5, 1.2, 1.0, 'finite') == pytest.approx((2.2 / 2.4, 1.0))


def test_constants_of_exact_preconditioners(qp_problem):
    report = constants(qp_problem, *exact_pair(qp_problem))
    assert report.dense
    assert report.lambda_ == pytest.approx(1.0, rel=1e-8)
    assert report.lambda0 == pytest.approx(1.0, rel=1e-8)
    assert report.alpha < 1e-8
    assert report.beta < 1e-8
    assert report.c0_flag == 'finite'
    assert report.delta1 == pytest.approx(1.0, rel=1e-8)
    assert report.delta2 == pytest.approx(1.0, rel=1e-8)
    assert report.lambda_hat == pytest.approx(1.0, rel=1e-6)


def test_constants_report_raw_lambda(qp_problem):
    # A_hat = A / 2, so A_hat^{-1} A = 2 I
    report = constants(qp_problem, *exact_pair(qp_problem, scale=0.5))
    assert report.lambda_ == pytest.approx(2.0, rel=1e-8)
    assert report.lambda0 == pytest.approx(2.0, rel=1e-8)
    assert report.kappa1 == pytest.approx(1.0, rel=1e-8)


def test_constants_with_zero_d(qp_problem_d0):
    report = constants(qp_problem_d0, jacobi(qp_problem_d0.A), *exact_pair(qp_problem_d0)[1:])
    assert report.c0_flag == 'infinite'
    assert report.c0 == float('inf')
    assert (report.delta1, report.delta2) == pytest.approx((1.0 / report.lambda0, 1.0 / report.lambda_))
    assert 0.0 < report.alpha < 1.0


def test_theory_report_serializes(qp_problem):
    report = constants(qp_problem, *exact_pair(qp_problem))
    report.verdicts['theorem'] = 'passed'
    values = parse_key_value(report.serialize().splitlines())
    assert values['c0_flag'] == 'finite'
    assert float(values['lambda']) == report.lambda_
    assert values['verdict.theorem'] == 'passed'


def test_constants_fall_back_to_power_method(monkeypatch, elasticity_small):
    monkeypatch.setattr(pyuzawa, 'dense_path_limit', 10)
    with pytest.warns(NumericalWarning):
        report = constants(elasticity_small, ExactPreconditioner(elasticity_small.A), jacobi(elasticity_small.A))
    assert not report.dense
    assert report.lambda0 == pytest.approx(1.0, rel=1e-6)
    assert np.isnan(report.beta)
    with pytest.raises(DimensionError):
        DenseSystem(elasticity_small, jacobi(elasticity_small.A))


def test_lambda_hat_estimate(elasticity_small):
    A = elasticity_small.A
    exact = ExactPreconditioner(A)
    assert lambda_hat_estimate(exact, A) == pytest.approx(1.0, rel=1e-6)
    # scaling A_hat by one half doubles every eigenvalue of A_hat^{-1} A
    assert lambda_hat_estimate(ScaledPreconditioner(exact, 0.5), A) == pytest.approx(2.0, rel=1e-6)
    assert lambda_hat_estimate(exact, A, kappa_hat=4.0) == pytest.approx(0.25, rel=1e-6)
    with pytest.raises(ValueError):
        lambda_hat_estimate(exact, A, power_iters=5)


def test_alpha_i_and_beta_i_vanish_for_exact_pair(qp_problem):
    a_precond, s_precond = exact_pair(qp_problem)
    assert alpha_i(qp_problem, a_precond, qp_problem.f, 1.0) < 1e-8
    spectrum = beta_i_and_Gi_spectrum(qp_problem, a_precond, s_precond, qp_problem.g, 1.0)
    assert spectrum.beta_i < 1e-8
    assert spectrum.deviation < 1e-8
    assert spectrum.contained()
    with pytest.raises(ValueError):
        alpha_i(qp_problem, a_precond, np.zeros(qp_problem.n), 1.0)


def test_convergence_check_exact_pair(qp_problem):
    verdict = convergence_check(qp_problem, *exact_pair(qp_problem), theta_i=1.0, tauhat_i=1.0)
    assert verdict.hypothesis_met
    assert verdict.holds
    assert verdict.rho < 1e-3


def test_d0_only_checks_reject_nonzero_d(qp_problem):
    a_precond, s_precond = exact_pair(qp_problem)
    with pytest.raises(ValueError):
        corollary_check(qp_problem, a_precond, s_precond, 1.0)
    with pytest.raises(ValueError):
        d0_lemma_check(qp_problem, a_precond, s_precond, storage=None)


def test_corollary_with_jacobi(qp_problem_d0):
    a_precond = jacobi(qp_problem_d0.A)
    H = DenseSystem(qp_problem_d0, a_precond).H
    verdict = corollary_check(qp_problem_d0, a_precond, ExplicitInversePreconditioner(scipy.linalg.inv(H)), 1.0)
    assert verdict.deviation < 1e-8
    assert verdict.converges
    assert verdict.holds


def test_rate_functions():
    with pytest.raises(ValueError):
        gamma_rate(0.3, 0.5, 1.0)
    assert gamma_rate(0.5, 0.0, 1.0) == pytest.approx(1.5)
    for alpha, z in [(0.2, 0.5), (0.7, 1.3), (0.01, 0.0)]:
        low, high = d0_scalar_roots(alpha, z)
        assert low <= high
        assert low * high == pytest.approx(-alpha)


def test_nonsym_diagnostics():
    t = 0.5
    A = SparseMatrix(np.array([[1.0, t], [-t, 1.0]]))
    B = SparseMatrix(np.array([[1.0], [0.0]]))
    problem = SaddleProblem(A, B, SparseMatrix.zeros(1, 1), np.zeros(2), np.zeros(1), symmetric_a=False)
    diagnostics = nonsym_diagnostics(problem)
    assert diagnostics.j_minus_identity == pytest.approx(np.sqrt(0.2))
    assert diagnostics.j_inverse_minus_identity == pytest.approx(0.5)
    assert diagnostics.schur_difference == pytest.approx(0.2)


def test_corpus_checks_pass():
    summary = verify_corpus(seed=42, count=3)
    assert summary.ok, '\n'.join(summary.lines())
    assert summary.checks['theorem'] > 0
    assert summary.lines()[0] == 'corpus seed=42 count=3 violations=0'


def test_overdamped_corpus_misses_hypothesis():
    summary = verify_corpus(seed=7, count=3, theta=10.0)
    assert summary.hypothesis_not_met['theorem'] > 0


@pytest.mark.slow
def test_full_corpus():
    summary = verify_corpus(seed=42, count=50)
    assert summary.ok, '\n'.join(summary.lines())


def test_nonsym_diagnostics_vanish_for_symmetric_a(elasticity_small):
    assert nonsym_diagnostics(elasticity_small) == (0.0, 0.0, 0.0)


def test_nonsym_diagnostics_grow_with_convection():
    weak = nonsym_diagnostics(gen_convection(ConvectionParams(8, b=2.0)))
    strong = nonsym_diagnostics(gen_convection(ConvectionParams(8, b=20.0)))
    assert all(s > w for s, w in zip(strong, weak))


def recorded_run(instance):
    problem = instance.problem
    storage = IterateStorageCallback(np.zeros(problem.n), np.zeros(problem.m))
    config = UzawaConfig(variant='alg1', theta=instance.theta, max_iters=12, tol=1e-10, record_history=False)
    solve_alg1(problem, instance.a_precond, instance.s_precond, config, callback=storage)
    return storage


def test_contraction_check_reports_violating_iterations():
    instance = corpus_instance(42, theta=0.3)
    args = (instance.problem, instance.a_precond, instance.s_precond)
    storage = recorded_run(instance)
    clean = contraction_check(*args, storage)
    assert clean.status == 'passed'
    assert clean.checked > 0
    # each step now multiplies the error by ten, which no contraction allows
    x_star, y_star = instance.problem.exact_solution
    for k in range(1, len(storage.xs)):
        storage.xs[k] = x_star + 10.0 ** k * (storage.xs[0] - x_star)
        storage.ys[k] = y_star + 10.0 ** k * (storage.ys[0] - y_star)
    tampered = contraction_check(*args, storage)
    assert tampered.status == 'failed'
    assert len(tampered.violations) == tampered.checked == clean.checked


def test_rounding_level_is_far_below_initial_error():
    instance = corpus_instance(42, theta=0.3)
    system = DenseSystem(instance.problem, instance.a_precond, instance.s_precond)
    report = constants(instance.problem, instance.a_precond, instance.s_precond)
    eta = rounding_level(instance.problem, system, report.alpha)
    assert 0.0 < eta < 1e-6 * np.linalg.norm(instance.problem.f)


def test_asymptotic_rate_averages_the_tail():
    norms = np.concatenate([[1.0, 1e-3], 1e-3 * 0.5 ** np.arange(1, 9)])
    assert asymptotic_rate(norms) == pytest.approx(0.5)
    assert asymptotic_rate([1.0, 0.5, 0.0]) == 0.0
    with pytest.raises(ValueError):
        asymptotic_rate([1.0, 0.5])
    with pytest.raises(ValueError):
        asymptotic_rate(norms, tail=0.0)


def test_clustered_d0_instance_fixes_kappa_and_clusters_schur_part():
    instance = clustered_d0_instance(16.0)
    problem = instance.problem
    assert problem.is_d_zero
    report = constants(problem, instance.a_precond, instance.s_precond)
    assert report.kappa1 == pytest.approx(16.0, rel=1e-8)
    storage = IterateStorageCallback(np.zeros(problem.n), np.zeros(problem.m))
    solve_alg1(problem, instance.a_precond, instance.s_precond, UzawaConfig(theta=instance.theta, max_iters=5, tol=1e-14), callback=storage)
    system = DenseSystem(problem, instance.a_precond, instance.s_precond)
    for record in storage.records:
        # residuals stay in the eigenvalue 1 subspace, where the first block step is exact
        assert record.omega == pytest.approx(1.0, rel=1e-8)
        M = system.R.T @ (record.tau * system.S_hat_inv) @ system.R
        eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
        assert_allclose(eigs, 1.0 / 16.0, rtol=3e-3)


@pytest.mark.parametrize('kappa1', [4.0, 16.0, 64.0])
def test_measured_rate_is_near_optimal_on_clustered_d0_problem(kappa1):
    rate = corollary_rate(kappa1)
    alpha = (kappa1 - 1.0) / (kappa1 + 1.0)
    assert rate.alpha == pytest.approx(alpha, rel=1e-8)
    assert rate.near_optimal, f"measured {rate.measured:.6f}, sqrt(alpha) = {rate.optimal_rate:.6f}"
    # the clustered Schur part contracts by 1 - 1/kappa1 once the first block step is exact
    assert rate.measured == pytest.approx(1.0 - 1.0 / kappa1, rel=5e-3)


def test_deviation_bounds_beta_i_for_inexact_schur_preconditioner(qp_problem):
    a_precond = jacobi(qp_problem.A)
    s_precond = DiagonalPreconditioner(np.ones(qp_problem.m))
    report = constants(qp_problem, a_precond, s_precond)
    spectrum = beta_i_and_Gi_spectrum(qp_problem, a_precond, s_precond, qp_problem.g, 0.5, report)
    assert spectrum.deviation >= spectrum.beta_i - 1e-12
    assert spectrum.deviation >= report.beta - 1e-12
    assert spectrum.contained()
