r"""Seeded corpus of small random saddle point problems on which every bound of the analysis is checked against dense eigen computations.

Instance ``k`` of a corpus with seed ``s`` is generated from seed ``s + k``: a random quadratic program with ``8 <= n <= 30`` and ``2 <= m <= 12`` (``D = 0`` on roughly a third of the instances), an approximation :math:`\hat{A}` of :math:`A` from a random SPD perturbation and a random scaling, and an approximation :math:`\hat{S}` of :math:`H` built the same way. The linear algorithm runs a few iterations and the checks are evaluated on the recorded iterates."""
from __future__ import annotations
from collections import Counter
from dataclasses import dataclass, field
import logging
import numpy as np
import scipy.linalg
from pyuzawa.algorithms import UzawaConfig, solve_alg1
from pyuzawa.callbacks import IterateStorageCallback
from pyuzawa.linalg import SparseMatrix, chol, eigvalsh, sym_inv_sqrt
from pyuzawa.metadata import RandomQPParams
from pyuzawa.preconditioners import ExplicitInversePreconditioner
from pyuzawa.problems import gen_random_qp, problem_from_solution
from .constants import DenseSystem, constants, alpha_i, beta_i_and_Gi_spectrum
from .error_propagation import convergence_check, rates_check, contraction_check, corollary_check, d0_lemma_check, stacked_error_norms, asymptotic_rate

logger = logging.getLogger(__name__)

SLACK = 1e-10
CORPUS_MAX_ITERS = 12
THETAS = (0.1, 0.3, 0.5, 0.8)
COROLLARY_KAPPAS = (4.0, 16.0, 64.0)
COROLLARY_ITERS = 40

@dataclass
class CorpusInstance:
    seed: int
    problem: object
    a_precond: ExplicitInversePreconditioner
    s_precond: ExplicitInversePreconditioner
    theta: float


def _spd_perturbation(rng, M: np.ndarray, size: float) -> np.ndarray:
    G = rng.standard_normal(M.shape)
    E = G @ G.T / M.shape[0]
    return M + size * np.mean(np.diag(M)) * E

def corpus_instance(seed: int, theta: float | None = None, exact: bool = False) -> CorpusInstance:
    r"""Builds one seeded instance.

    Args:
        seed (int): Instance seed.
        theta (float | None, optional): Damping factor; drawn from ``THETAS`` when None. Defaults to None.
        exact (bool, optional): Use :math:`\hat{A} = A` and :math:`\hat{S} = H`. Defaults to False.

    Returns:
        CorpusInstance: Problem, preconditioners and damping factor.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 31))
    m = int(rng.integers(2, min(12, n) + 1))
    epsilon = 0.0 if rng.random() < 0.3 else float(10 ** rng.uniform(-2, 1))
    problem = gen_random_qp(RandomQPParams(n, m, epsilon, seed))
    A = problem.A.to_dense()
    B = problem.B.to_dense()
    if exact:
        A_hat = A
    else:
        A_hat = rng.uniform(0.5, 2.0) * _spd_perturbation(rng, A, rng.uniform(0.05, 1.0))
    A_hat_inv = scipy.linalg.inv(A_hat)
    H = B.T @ A_hat_inv @ B + problem.D.to_dense()
    S_hat = H if exact else rng.uniform(0.5, 2.0) * _spd_perturbation(rng, H, rng.uniform(0.05, 1.0))
    if theta is None:
        theta = 1.0 if exact else float(rng.choice(THETAS))
    return CorpusInstance(seed, problem, ExplicitInversePreconditioner(A_hat_inv), ExplicitInversePreconditioner(scipy.linalg.inv(S_hat)), float(theta))


def clustered_d0_instance(kappa1: float, epsilon: float = 1e-3, n: int = 12, m: int = 4, seed: int = 0) -> CorpusInstance:
    r"""Builds a ``D = 0`` instance with a prescribed :math:`\kappa_1` on which :math:`R^tQ_i^{-1}R` clusters at :math:`1/\kappa_1 = (1-\alpha)/(1+\alpha)`.

    :math:`\hat{A}^{-1}A` has eigenvalue 1 on the range of :math:`A^{-1}B` and :math:`1/\kappa_1` on its :math:`A`-orthogonal complement, and the exact solution lies in that range, so every residual :math:`A^{-1/2}f_i` stays in the eigenvalue 1 subspace. :math:`\hat{S}^{-1} = R^{-t}CR^{-1}` with :math:`C` spread evenly over :math:`[1-\epsilon, 1+\epsilon]` and :math:`\theta = 1/\kappa_1` then keep the eigenvalues of :math:`R^tQ_i^{-1}R` within a factor :math:`(1\pm\epsilon)^2` of :math:`1/\kappa_1` on every iteration.

    Args:
        kappa1 (float): Condition number of :math:`\hat{A}^{-1}A`, at least 1.
        epsilon (float, optional): Relative width of the cluster. Defaults to 1e-3.
        n (int, optional): First block size. Defaults to 12.
        m (int, optional): Second block size, smaller than ``n``. Defaults to 4.
        seed (int, optional): Seed of the random blocks. Defaults to 0.

    Returns:
        CorpusInstance: Problem, preconditioners and damping factor.
    """
    if kappa1 < 1.0:
        raise ValueError(f"kappa1 must be at least 1, got {kappa1}")
    if not 0 < m < n:
        raise ValueError(f"need 0 < m < n, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    A = G @ G.T / n + np.eye(n)
    A = 0.5 * (A + A.T)
    B = rng.standard_normal((n, m))
    A_inv_sqrt = sym_inv_sqrt(A)
    W, _ = np.linalg.qr(A_inv_sqrt @ B)
    P = W @ W.T
    A_hat_inv = A_inv_sqrt @ (P + (np.eye(n) - P) / kappa1) @ A_inv_sqrt
    A_inv_B = scipy.linalg.solve(A, B, assume_a='pos')
    x = A_inv_B @ rng.standard_normal(m)
    y = rng.standard_normal(m)
    metadata = {'problem': 'clustered-d0', 'kappa1': kappa1, 'epsilon': epsilon, 'seed': seed}
    problem = problem_from_solution(SparseMatrix(A), SparseMatrix(B), SparseMatrix.zeros(m, m), x, y, metadata=metadata)
    S = B.T @ A_inv_B
    R_inv = scipy.linalg.solve_triangular(chol(0.5 * (S + S.T)), np.eye(m), lower=True)
    c = 1.0 + epsilon * np.linspace(-1.0, 1.0, m)
    S_hat_inv = R_inv.T @ (c[:, None] * R_inv)
    return CorpusInstance(seed, problem, ExplicitInversePreconditioner(A_hat_inv), ExplicitInversePreconditioner(S_hat_inv), 1.0 / kappa1)


@dataclass
class CorollaryRate:
    r"""Measured contraction of the stacked error on a :func:`clustered_d0_instance`.

    Args:
        kappa1 (float): :math:`\kappa_1` of the instance.
        alpha (float): :math:`\alpha = (\kappa_1 - 1)/(\kappa_1 + 1)`.
        measured (float): Asymptotic contraction factor of :math:`|E_i|`.
        tolerance (float): Relative distance to :math:`\sqrt{\alpha}` still counted as optimal.
    """
    kappa1: float
    alpha: float
    measured: float
    tolerance: float = 0.1

    @property
    def optimal_rate(self) -> float:
        return float(np.sqrt(self.alpha))

    @property
    def near_optimal(self) -> bool:
        return abs(self.measured - self.optimal_rate) <= self.tolerance * self.optimal_rate


def corollary_rate(kappa1: float, epsilon: float = 1e-3, iterations: int = COROLLARY_ITERS, seed: int = 0) -> CorollaryRate:
    """Runs the linear algorithm on :func:`clustered_d0_instance` and measures the contraction of the stacked error over the second half of the run."""
    instance = clustered_d0_instance(kappa1, epsilon, seed=seed)
    problem, a_precond, s_precond = instance.problem, instance.a_precond, instance.s_precond
    system = DenseSystem(problem, a_precond, s_precond)
    report = constants(problem, a_precond, s_precond)
    storage = IterateStorageCallback(np.zeros(problem.n), np.zeros(problem.m))
    config = UzawaConfig(variant='alg1', theta=instance.theta, max_iters=iterations, tol=1e-14, record_history=False)
    solve_alg1(problem, a_precond, s_precond, config, callback=storage)
    measured = asymptotic_rate(stacked_error_norms(problem, system, report.alpha, storage))
    logger.debug("kappa1 %g: measured rate %.6f, sqrt(alpha) %.6f", kappa1, measured, np.sqrt(report.alpha))
    return CorollaryRate(report.kappa1, report.alpha, measured)


@dataclass
class Violation:
    seed: int
    check: str
    iteration: int | None
    detail: str

    def __str__(self) -> str:
        where = '' if self.iteration is None else f' iteration {self.iteration}'
        return f"seed {self.seed}{where}: {self.check}: {self.detail}"


@dataclass
class CorpusSummary:
    """Outcome of :func:`verify_corpus`.

    Args:
        seed (int): Corpus seed.
        count (int): Number of instances.
        violations (list[Violation]): Every failed check.
        checks (Counter): Number of evaluations per check.
        hypothesis_not_met (Counter): Conditional checks whose hypothesis did not hold, per check.
    """
    seed: int
    count: int
    violations: list[Violation] = field(default_factory=list)
    checks: Counter = field(default_factory=Counter)
    hypothesis_not_met: Counter = field(default_factory=Counter)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        lines = [f"corpus seed={self.seed} count={self.count} violations={len(self.violations)}"]
        for name in sorted(self.checks):
            lines.append(f"  {name}: checked={self.checks[name]} hypothesis-not-met={self.hypothesis_not_met[name]}")
        lines.extend(f"  VIOLATION {v}" for v in self.violations)
        return lines


def check_instance(instance: CorpusInstance, summary: CorpusSummary) -> None:
    """Runs the linear algorithm on one instance and evaluates every check, adding counts and violations to ``summary``."""
    problem, a_precond, s_precond = instance.problem, instance.a_precond, instance.s_precond
    seed = instance.seed

    def fail(check, iteration, detail):
        summary.violations.append(Violation(seed, check, iteration, detail))
        logger.info("violation: seed %d %s: %s", seed, check, detail)

    system = DenseSystem(problem, a_precond, s_precond)
    report = constants(problem, a_precond, s_precond)
    storage = IterateStorageCallback(np.zeros(problem.n), np.zeros(problem.m))
    config = UzawaConfig(variant='alg1', theta=instance.theta, max_iters=CORPUS_MAX_ITERS, tol=1e-10, record_history=False)
    solve_alg1(problem, a_precond, s_precond, config, callback=storage)
    h_eigs = eigvalsh(system.preconditioned_h)
    f_start = np.linalg.norm(problem.residual_f(storage.xs[0], storage.ys[0]))
    for i, record in enumerate(storage.records):
        x, y, x_next = storage.xs[i], storage.ys[i], storage.xs[i + 1]
        f_i = problem.residual_f(x, y)
        if np.linalg.norm(f_i) > 1e-6 * f_start:
            a_i = alpha_i(problem, a_precond, f_i, record.omega, system)
            omega_tilde = report.lambda_ * record.omega
            summary.checks['omega-bounds'] += 1
            if not (1.0 / report.kappa1 - SLACK <= omega_tilde <= 1.0 - a_i ** 2 + SLACK):
                fail('omega-bounds', record.iter, f"lambda*omega = {omega_tilde:.6e}, 1/kappa1 = {1 / report.kappa1:.6e}, 1-alpha_i^2 = {1 - a_i ** 2:.6e}")
            summary.checks['alpha_i'] += 1
            if a_i > report.alpha + SLACK:
                fail('alpha_i', record.iter, f"alpha_i = {a_i:.6e} > alpha = {report.alpha:.6e}")
        g_i = problem.residual_g(x_next, y)
        if not np.any(g_i):
            continue
        summary.checks['tauhat-range'] += 1
        if not (1.0 / h_eigs[-1] * (1 - SLACK) <= record.tauhat <= 1.0 / h_eigs[0] * (1 + SLACK)):
            fail('tauhat-range', record.iter, f"tauhat = {record.tauhat:.6e} outside [{1 / h_eigs[-1]:.6e}, {1 / h_eigs[0]:.6e}]")
        spectrum = beta_i_and_Gi_spectrum(problem, a_precond, s_precond, g_i, record.tauhat, report, system)
        summary.checks['beta_i'] += 1
        if spectrum.beta_i > report.beta + SLACK:
            fail('beta_i', record.iter, f"beta_i = {spectrum.beta_i:.6e} > beta = {report.beta:.6e}")
        summary.checks['schur-interval'] += 1
        if not spectrum.contained(SLACK):
            fail('schur-interval', record.iter, f"[{spectrum.eig_min:.6e}, {spectrum.eig_max:.6e}] not in [{spectrum.lower:.6e}, {spectrum.upper:.6e}]")
        verdict = convergence_check(problem, a_precond, s_precond, record.theta, record.tauhat, report, system)
        summary.checks['theorem'] += 1
        if verdict.holds is None:
            summary.hypothesis_not_met['theorem'] += 1
        elif not verdict.holds:
            fail('theorem', record.iter, f"hypothesis met but rho = {verdict.rho:.6e}")
    contraction = contraction_check(problem, a_precond, s_precond, storage, report, system)
    summary.checks['contraction'] += 1
    if contraction.status == 'skipped':
        summary.hypothesis_not_met['contraction'] += 1
    elif contraction.status == 'failed':
        fail('contraction', contraction.violations[0], f"violated on iterations {contraction.violations}")
    if not storage.records:
        return
    tauhat = storage.records[0].tauhat
    if report.alpha < 1.0 - 1e-8:
        rates = rates_check(problem, a_precond, s_precond, tauhat, 0.5 * (1.0 + report.alpha), report, system)
        summary.checks['rates'] += 1
        if rates.lower_holds is None:
            summary.hypothesis_not_met['rates'] += 1
        if not rates.holds:
            fail('rates', None, f"spectrum [{rates.eig_min:.6e}, {rates.eig_max:.6e}] against mu = {rates.mu:.6e}, mu_tilde = {rates.mu_tilde}")
    if problem.is_d_zero:
        corollary = corollary_check(problem, a_precond, s_precond, tauhat, report, system)
        summary.checks['corollary'] += 1
        if corollary.converges is None:
            summary.hypothesis_not_met['corollary'] += 1
        if not corollary.holds:
            fail('corollary', None, f"rho = {corollary.rho:.6e}, clustered rho = {corollary.clustered_rho:.6e}, sqrt(alpha) = {corollary.optimal_rate:.6e}")
        lemma = d0_lemma_check(problem, a_precond, s_precond, storage, report, system)
        summary.checks['d0-lemma'] += 1
        if not lemma.all_met:
            summary.hypothesis_not_met['d0-lemma'] += 1

def verify_corpus(seed: int = 42, count: int = 50, theta: float | None = None, exact: bool = False) -> CorpusSummary:
    """Checks the whole seeded corpus.

    Args:
        seed (int, optional): Corpus seed. Defaults to 42.
        count (int, optional): Number of instances. Defaults to 50.
        theta (float | None, optional): Damping factor forced on every instance. Defaults to None.
        exact (bool, optional): Use exact preconditioners on every instance. Defaults to False.

    Returns:
        CorpusSummary: Counts and violations.
    """
    summary = CorpusSummary(seed, count)
    for k in range(count):
        check_instance(corpus_instance(seed + k, theta, exact), summary)
    for kappa1 in COROLLARY_KAPPAS:
        rate = corollary_rate(kappa1, seed=seed)
        summary.checks['corollary-rate'] += 1
        if not rate.near_optimal:
            summary.violations.append(Violation(seed, 'corollary-rate', None, f"kappa1 = {kappa1:g}: measured {rate.measured:.6f}, sqrt(alpha) = {rate.optimal_rate:.6f}"))
    logger.info("corpus seed %d: %d instances, %d violations", seed, count, len(summary.violations))
    return summary
