r"""Error propagation of the linear inexact Uzawa iteration. With :math:`B^tA^{-1/2} = U[\Sigma_0\;0]V^t`, :math:`S = RR^t` and :math:`Q_i^{-1} = \tau_i\hat{S}^{-1}`, the scaled errors :math:`E^{(1)}_i = \sqrt{\alpha}V^tA^{-1/2}f_i` and :math:`E^{(2)}_i = R^te^y_i` evolve through

.. math::

    F_i = \begin{pmatrix} \alpha(I + \Sigma_0^tU^tQ_i^{-1}U\Sigma_0) & \sqrt{\alpha}\Sigma_0^tU^tQ_i^{-1}R \\ \sqrt{\alpha}R^tQ_i^{-1}U\Sigma_0 & -(I - R^tQ_i^{-1}R)\end{pmatrix}

and :math:`|E^{(1)}_{i+1}|^2 + |E^{(2)}_{i+1}|^2 \le \rho^2((\alpha_i^2/\alpha^2)|E^{(1)}_i|^2 + |E^{(2)}_i|^2)` with :math:`\rho = \|F_i\|`.

The concrete :math:`G_i^{-1} = \hat{\tau}_i\hat{S}^{-1}` deviates from :math:`H^{-1}` by :math:`\bar{\beta}_i \ge \beta`; the hypotheses below use :math:`\bar{\beta}_i` where the bounds are stated with :math:`\beta`, which makes every checked implication hold for the matrix actually built."""
from __future__ import annotations
from dataclasses import dataclass, field
import logging
import numpy as np
from pyuzawa.linalg import eigvalsh
from pyuzawa.linalg.dense import solve_upper
from pyuzawa.preconditioners import Preconditioner
from .constants import DenseSystem, TheoryReport, constants, alpha_i, weighted_c1

logger = logging.getLogger(__name__)

# multiple of (n + m) eps kappa(A) taken as the rounding error of a computed iterate
ROUNDING_SAFETY = 10.0

def gamma_rate(mu: float, alpha: float, c1: float) -> float:
    r""":math:`\gamma(\mu, \alpha, c_1) = (\mu+1)(\mu-\alpha)/(\alpha c_1(\mu+1) + \mu - \alpha)`, the largest upper spectral bound of :math:`W = Q_i^{-1/2}R` that still gives :math:`F_i \le \mu I`. Requires :math:`\alpha < \mu < 1`."""
    if not alpha < mu < 1:
        raise ValueError(f"mu must lie in (alpha, 1) = ({alpha:.6g}, 1), got {mu}")
    return (mu + 1.0) * (mu - alpha) / (alpha * c1 * (mu + 1.0) + mu - alpha)

def omega_rate(mu_tilde: float, alpha: float, c1: float, gamma: float) -> float:
    r""":math:`(1-\tilde{\mu})(1 + c_1\alpha\gamma/(\tilde{\mu}+\alpha))`, the smallest lower spectral bound of :math:`W` that still gives :math:`F_i \ge -\tilde{\mu}I`."""
    if mu_tilde + alpha <= 0:
        return 1.0 - mu_tilde
    return (1.0 - mu_tilde) * (1.0 + c1 * alpha * gamma / (mu_tilde + alpha))

def d0_scalar_roots(alpha: float, z: float) -> tuple[float, float]:
    r"""Roots of :math:`\mu^2 + (1 - \alpha - (1+\alpha)z)\mu - \alpha = 0`, the eigenvalues of :math:`F_i` for ``D = 0`` on an eigenvector of :math:`R^tQ_i^{-1}R` with eigenvalue :math:`z`."""
    b = 1.0 - alpha - (1.0 + alpha) * z
    disc = np.sqrt(b * b + 4.0 * alpha)
    return (-b - disc) / 2.0, (-b + disc) / 2.0

def propagation_matrix(system: DenseSystem, alpha: float, q_inverse: np.ndarray, full: bool = False) -> np.ndarray:
    r"""Assembles :math:`F_i` (order :math:`2m`), or with ``full=True`` the order :math:`n+m` matrix acting on :math:`(E^{(1)}, E^{(2)})` whose extra diagonal block is :math:`\alpha I`.

    Args:
        system (DenseSystem): Dense problem data.
        alpha (float): :math:`\alpha \ge 0`.
        q_inverse (np.ndarray): :math:`Q_i^{-1}`.
        full (bool, optional): Keep the :math:`V` columns outside the range of :math:`\Sigma_0`. Defaults to False.

    Returns:
        np.ndarray: Symmetric :math:`F_i`.
    """
    U, Sigma0, _ = system.svd
    m = Sigma0.shape[0]
    Sigma = Sigma0
    if full:
        Sigma = np.hstack([Sigma0, np.zeros((m, system.A.shape[0] - m))])
    k = Sigma.shape[1]
    US = U @ Sigma
    R = system.R
    top_left = alpha * (np.eye(k) + US.T @ q_inverse @ US)
    top_right = np.sqrt(alpha) * (US.T @ q_inverse @ R)
    bottom_right = -(np.eye(m) - R.T @ q_inverse @ R)
    F = np.block([[top_left, top_right], [top_right.T, bottom_right]])
    return 0.5 * (F + F.T)


@dataclass
class FiAnalysis:
    r"""Spectral data of one :math:`F_i`.

    Args:
        F (np.ndarray): The matrix.
        rho (float): :math:`\|F_i\| = \max(\mu, \tilde{\mu})`.
        mu (float): Largest eigenvalue.
        mu_tilde (float): Minus the smallest eigenvalue.
        c1 (float): Weight constant of :math:`Q_i`.
        w_min (float): Smallest eigenvalue of :math:`R^tQ_i^{-1}R`.
        w_max (float): Largest eigenvalue of :math:`R^tQ_i^{-1}R`.
    """
    F: np.ndarray
    rho: float
    mu: float
    mu_tilde: float
    c1: float
    w_min: float
    w_max: float

    @property
    def interval(self) -> tuple[float, float]:
        return -self.mu_tilde, self.mu

    def __iter__(self):
        return iter((self.F, self.rho, self.interval))

def _analyse(system: DenseSystem, alpha: float, c1: float, q_inverse: np.ndarray) -> FiAnalysis:
    F = propagation_matrix(system, alpha, q_inverse)
    w = eigvalsh(F)
    W = system.R.T @ q_inverse @ system.R
    ww = eigvalsh(0.5 * (W + W.T))
    return FiAnalysis(F, float(max(w[-1], -w[0])), float(w[-1]), float(-w[0]), c1, float(ww[0]), float(ww[-1]))

def build_Fi(
    problem,
    a_precond: Preconditioner,
    s_precond: Preconditioner,
    theta_i: float,
    tauhat_i: float,
    report: TheoryReport | None = None,
    system: DenseSystem | None = None,
    q_inverse: np.ndarray | None = None,
) -> FiAnalysis:
    r"""Error propagation matrix for :math:`Q_i^{-1} = \theta_i\hat{\tau}_i\hat{S}^{-1}`.

    Unpacks as ``F, rho, (lower, upper)``.

    Args:
        problem (SaddleProblem): The system.
        a_precond (Preconditioner): Linear :math:`\hat{A}`.
        s_precond (Preconditioner): Linear :math:`\hat{S}`.
        theta_i (float): Damping factor.
        tauhat_i (float): :math:`\hat{\tau}_i`.
        report (TheoryReport | None, optional): Constants, computed when None. Defaults to None.
        system (DenseSystem | None, optional): Cached dense data. Defaults to None.
        q_inverse (np.ndarray | None, optional): Explicit :math:`Q_i^{-1}` overriding ``theta_i * tauhat_i * S_hat_inv``. Defaults to None.

    Returns:
        FiAnalysis: The matrix, :math:`\rho`, the interval :math:`[-\tilde{\mu}, \mu]`, :math:`c_1` and the spectral bounds of :math:`W`.
    """
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    if q_inverse is None:
        return _analyse(system, report.alpha, report.c1, theta_i * tauhat_i * system.S_hat_inv)
    return _analyse(system, report.alpha, weighted_c1(system, q_inverse), q_inverse)

def schur_deviation(system: DenseSystem, tauhat_i: float) -> float:
    r""":math:`\bar{\beta}_i = \|I - \hat{\tau}_iH^{1/2}\hat{S}^{-1}H^{1/2}\|`."""
    return float(np.max(np.abs(1.0 - tauhat_i * eigvalsh(system.preconditioned_h))))

def theorem_condition(report: TheoryReport, theta_i: float, deviation: float) -> tuple[float, float]:
    r"""Both sides of :math:`\theta_i(1+\bar{\beta}_i)\delta_2 < 2(1-\alpha)/(1-\alpha+2c_1\alpha)`."""
    alpha = report.alpha
    return theta_i * (1.0 + deviation) * report.delta2, 2.0 * (1.0 - alpha) / (1.0 - alpha + 2.0 * report.c1 * alpha)


@dataclass
class ConvergenceVerdict:
    r"""Outcome of the theorem check for one :math:`(\theta_i, \hat{\tau}_i)`.

    Args:
        hypothesis_met (bool): Whether the damping condition holds with :math:`\bar{\beta}_i`.
        hypothesis_met_global (bool): Whether it holds with the global :math:`\beta` (reported only).
        rho (float): :math:`\|F_i\|`.
        holds (bool | None): :math:`\rho < 1` when the hypothesis is met, None otherwise.
    """
    hypothesis_met: bool
    hypothesis_met_global: bool
    rho: float
    holds: bool | None

def convergence_check(problem, a_precond, s_precond, theta_i, tauhat_i, report=None, system=None, slack: float = 1e-10) -> ConvergenceVerdict:
    r"""Checks that the damping condition of the convergence theorem implies :math:`\rho = \|F_i\| < 1`."""
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    analysis = build_Fi(problem, a_precond, s_precond, theta_i, tauhat_i, report, system)
    lhs, rhs = theorem_condition(report, theta_i, schur_deviation(system, tauhat_i))
    lhs_global, _ = theorem_condition(report, theta_i, report.beta)
    met = lhs < rhs
    return ConvergenceVerdict(met, lhs_global < rhs, analysis.rho, (analysis.rho < 1.0 + slack) if met else None)


@dataclass
class RatesVerdict:
    r"""Outcome of :func:`rates_check`.

    Args:
        theta (float): Damping factor chosen from the first hypothesis.
        mu (float): Target upper bound.
        mu_tilde (float | None): Lower bound from the second hypothesis, None when :math:`\bar{\beta}_i \ge 1`.
        eig_min (float): Smallest eigenvalue of :math:`F_i`.
        eig_max (float): Largest eigenvalue of :math:`F_i`.
        upper_holds (bool): :math:`F_i \le \mu I`.
        lower_holds (bool | None): :math:`F_i \ge -\tilde{\mu}I`, None when not applicable.
    """
    theta: float
    mu: float
    mu_tilde: float | None
    eig_min: float
    eig_max: float
    upper_holds: bool
    lower_holds: bool | None

    @property
    def holds(self) -> bool:
        return self.upper_holds and self.lower_holds is not False

def rates_check(problem, a_precond, s_precond, tauhat_i: float, mu: float, report=None, system=None, slack: float = 1e-10) -> RatesVerdict:
    r"""Rate theorem: for :math:`\mu \in (\alpha, 1)` take :math:`\theta_i = \gamma(\mu,\alpha,c_1)/(\delta_2(1+\bar{\beta}_i))` and the smallest :math:`\tilde{\mu} \ge \bar{\beta}_i` with

    .. math::

        1 - \tilde{\mu} \le \frac{\delta_1(1-\bar{\beta}_i)}{1 + c_1\frac{\alpha}{\alpha+\bar{\beta}_i}\gamma(\mu,\alpha,c_1)}\theta_i,

    then assert :math:`-\tilde{\mu}I \le F_i \le \mu I`.
    """
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    alpha, c1 = report.alpha, report.c1
    deviation = schur_deviation(system, tauhat_i)
    gamma = gamma_rate(mu, alpha, c1)
    theta = gamma / (report.delta2 * (1.0 + deviation))
    analysis = build_Fi(problem, a_precond, s_precond, theta, tauhat_i, report, system)
    mu_tilde, lower_holds = None, None
    if deviation < 1.0:
        weight = alpha / (alpha + deviation) if alpha + deviation > 0 else 0.0
        mu_tilde = max(deviation, 1.0 - report.delta1 * (1.0 - deviation) * theta / (1.0 + c1 * weight * gamma))
        if mu_tilde < 1.0:
            lower_holds = -analysis.mu_tilde >= -mu_tilde - slack
        else:
            mu_tilde = None
    return RatesVerdict(theta, mu, mu_tilde, -analysis.mu_tilde, analysis.mu, analysis.mu <= mu + slack, lower_holds)


@dataclass
class ContractionResult:
    r"""Outcome of :func:`contraction_check`.

    Args:
        status (str): ``'passed'``, ``'failed'`` or ``'skipped'``.
        checked (int): Iterations on which the inequality was tested.
        skipped (int): Iterations with :math:`\rho \ge 1`.
        violations (list[int]): Iteration numbers violating the inequality.
        message (str): Reason for a skip.
    """
    status: str
    checked: int = 0
    skipped: int = 0
    violations: list[int] = field(default_factory=list)
    message: str = ''

def contraction_check(problem, a_precond, s_precond, storage, report=None, system=None, slack: float = 1e-9) -> ContractionResult:
    r"""Checks :math:`|E^{(1)}_{i+1}|^2 + |E^{(2)}_{i+1}|^2 \le \rho^2((\alpha_i^2/\alpha^2)|E^{(1)}_i|^2 + |E^{(2)}_i|^2)` on every recorded iteration of a linear run, with :math:`\rho` the norm of the full propagation matrix for :math:`Q_i^{-1} = \tau_i\hat{S}^{-1}`. Iterations with :math:`\rho \ge 1` are skipped.

    Both sides are compared with a relative ``slack`` plus a rounding allowance :math:`2\eta(|E_i| + |E_{i+1}|) + \eta^2`, where :math:`\eta` (see :func:`rounding_level`) bounds the floating point error of the scaled error vectors. Far from convergence the allowance is negligible; once the error reaches the rounding level it keeps the check from reporting noise.

    Args:
        problem (SaddleProblem): System with a known exact solution.
        a_precond (Preconditioner): Linear :math:`\hat{A}` used in the run.
        s_precond (Preconditioner): Linear :math:`\hat{S}` used in the run.
        storage (IterateStorageCallback): Iterates and records of the run.
        report (TheoryReport | None, optional): Constants, computed when None. Defaults to None.
        system (DenseSystem | None, optional): Cached dense data. Defaults to None.
        slack (float, optional): Relative slack. Defaults to 1e-9.

    Returns:
        ContractionResult: Verdict.
    """
    if problem.exact_solution is None:
        raise ValueError("contraction_check needs a problem with a known exact solution")
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    alpha = report.alpha
    if not alpha > 1e-14:
        return ContractionResult('skipped', message='exact-A degenerate: alpha = 0')
    _, y_star = problem.exact_solution
    _, _, V = system.svd
    sqrt_alpha = np.sqrt(alpha)
    eta = rounding_level(problem, system, alpha)

    def scaled_errors(x, y):
        f = problem.residual_f(x, y)
        return f, sqrt_alpha * (V.T @ (system.A_inv_sqrt @ f)), system.R.T @ (y_star - y)

    result = ContractionResult('passed')
    for i, record in enumerate(storage.records):
        F = propagation_matrix(system, alpha, record.tau * system.S_hat_inv, full=True)
        w = eigvalsh(F)
        rho = max(w[-1], -w[0])
        if rho >= 1.0:
            result.skipped += 1
            continue
        f, e1, e2 = scaled_errors(storage.xs[i], storage.ys[i])
        _, e1_next, e2_next = scaled_errors(storage.xs[i + 1], storage.ys[i + 1])
        size = np.dot(e1, e1) + np.dot(e2, e2)
        a_i = alpha_i(problem, a_precond, f, record.omega, system) if np.any(f) else 0.0
        lhs = np.dot(e1_next, e1_next) + np.dot(e2_next, e2_next)
        rhs = rho ** 2 * ((a_i / alpha) ** 2 * np.dot(e1, e1) + np.dot(e2, e2))
        allowance = slack * size + 2.0 * eta * (np.sqrt(size) + np.sqrt(lhs)) + eta ** 2
        result.checked += 1
        if lhs > rhs + allowance:
            result.violations.append(record.iter)
            logger.info("contraction violated at iteration %d: %.6e > %.6e", record.iter, lhs, rhs)
    if result.violations:
        result.status = 'failed'
    return result

def rounding_level(problem, system: DenseSystem, alpha: float) -> float:
    r"""Bound :math:`\eta` on the floating point error of the scaled errors :math:`(E^{(1)}, E^{(2)})` of an iterate near the solution: a backward error of :math:`\text{ROUNDING\_SAFETY}\,(n+m)\,\epsilon\,\kappa(A)` on the residual and on :math:`y`, mapped through :math:`\sqrt{\alpha}A^{-1/2}` and :math:`R^t`."""
    x_star, y_star = problem.exact_solution
    eigenvalues = system.a_pairs.eigenvalues
    a_min, a_max = float(eigenvalues[0]), float(eigenvalues[-1])
    residual_scale = a_max * np.linalg.norm(x_star) + np.linalg.norm(system.B, 2) * np.linalg.norm(y_star) + np.linalg.norm(problem.f)
    scale = np.sqrt(alpha / a_min) * residual_scale + np.linalg.norm(system.R, 2) * np.linalg.norm(y_star)
    eps = np.finfo(float).eps
    return float(ROUNDING_SAFETY * (problem.n + problem.m) * eps * (a_max / a_min) * scale)


@dataclass
class D0LemmaResult:
    r"""Per iteration verdicts of :math:`\theta_i(1+\beta) \le 1 - \alpha_i` for ``D = 0``.

    Args:
        hypothesis (list[bool]): One entry per recorded iteration with a nonzero :math:`f_i`.
        alpha_i (list[float]): The :math:`\alpha_i` used.
    """
    hypothesis: list[bool]
    alpha_i: list[float]

    @property
    def all_met(self) -> bool:
        return all(self.hypothesis)

def d0_lemma_check(problem, a_precond, s_precond, storage, report=None, system=None) -> D0LemmaResult:
    r"""Evaluates the sufficient damping condition :math:`\theta_i(1+\beta) \le 1 - \alpha_i` of the ``D = 0`` convergence lemma on a recorded run."""
    if not problem.is_d_zero:
        raise ValueError("d0_lemma_check applies to problems with D = 0")
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    hypothesis, alphas = [], []
    for i, record in enumerate(storage.records):
        f = problem.residual_f(storage.xs[i], storage.ys[i])
        if not np.any(f):
            continue
        a_i = alpha_i(problem, a_precond, f, record.omega, system)
        alphas.append(a_i)
        hypothesis.append(record.theta * (1.0 + report.beta) <= 1.0 - a_i)
    return D0LemmaResult(hypothesis, alphas)


@dataclass
class CorollaryVerdict:
    r"""Outcome of :func:`corollary_check`.

    Args:
        theta (float): :math:`\lambda/\kappa_1`.
        deviation (float): :math:`\bar{\beta}_i`.
        rho (float): :math:`\|F_i\|` at that damping.
        converges (bool | None): :math:`\rho < 1`, None when :math:`\bar{\beta}_i \ge 1`.
        clustered_rho (float): :math:`\|F_i\|` with :math:`R^tQ_i^{-1}R` clustered around :math:`1/\kappa_1`.
        optimal_rate (float): :math:`\sqrt{\alpha}`.
        epsilon (float): Relative width of the cluster.
    """
    theta: float
    deviation: float
    rho: float
    converges: bool | None
    clustered_rho: float
    optimal_rate: float
    epsilon: float = 1e-3

    @property
    def near_optimal(self) -> bool:
        # the cluster width moves every root by at most epsilon/2
        return abs(self.clustered_rho - self.optimal_rate) <= max(0.1 * self.optimal_rate, 0.5 * self.epsilon) + 1e-12

    @property
    def holds(self) -> bool:
        return self.converges is not False and self.near_optimal

def corollary_check(problem, a_precond, s_precond, tauhat_i: float, report=None, system=None, epsilon: float = 1e-3, slack: float = 1e-10) -> CorollaryVerdict:
    r"""``D = 0`` corollary: :math:`\theta_i \le \lambda/\kappa_1` gives :math:`\rho < 1`, and eigenvalues of :math:`R^tQ_i^{-1}R` within :math:`[(1-\epsilon), (1+\epsilon)]/\kappa_1` give :math:`\rho \approx \sqrt{\alpha}`."""
    if not problem.is_d_zero:
        raise ValueError("corollary_check applies to problems with D = 0")
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    theta = report.lambda_ / report.kappa1
    deviation = schur_deviation(system, tauhat_i)
    analysis = build_Fi(problem, a_precond, s_precond, theta, tauhat_i, report, system)
    m = system.R.shape[0]
    z = (1.0 - report.alpha) / (1.0 + report.alpha)
    M = np.diag(z * (1.0 + epsilon * np.linspace(-1.0, 1.0, m)))
    Y = solve_upper(system.R.T, M)
    q_inverse = solve_upper(system.R.T, Y.T).T
    q_inverse = 0.5 * (q_inverse + q_inverse.T)
    clustered = _analyse(system, report.alpha, weighted_c1(system, q_inverse), q_inverse)
    converges = (analysis.rho < 1.0 + slack) if deviation < 1.0 else None
    return CorollaryVerdict(theta, deviation, analysis.rho, converges, clustered.rho, float(np.sqrt(report.alpha)), epsilon)


def stacked_error_norms(problem, system: DenseSystem, alpha: float, storage) -> np.ndarray:
    r"""Norm of the stacked error :math:`E_i = (E^{(1)}_i, E^{(2)}_i)` for every stored iterate. :math:`V` is orthogonal, so :math:`|E^{(1)}_i| = \sqrt{\alpha}\,|A^{-1/2}f_i|`."""
    if problem.exact_solution is None:
        raise ValueError("stacked error norms need a problem with a known exact solution")
    _, y_star = problem.exact_solution
    norms = []
    for x, y in zip(storage.xs, storage.ys):
        e1 = np.sqrt(alpha) * np.linalg.norm(system.A_inv_sqrt @ problem.residual_f(x, y))
        e2 = np.linalg.norm(system.R.T @ (y_star - y))
        norms.append(np.hypot(e1, e2))
    return np.array(norms)


def asymptotic_rate(norms, tail: float = 0.5) -> float:
    """Geometric mean of the per iteration contraction of ``norms`` over the last ``tail`` fraction of the run.

    Args:
        norms (Sequence[float]): Error norms, initial guess first.
        tail (float, optional): Fraction of the iterations averaged over. Defaults to 0.5.

    Returns:
        float: Measured contraction factor, 0 when the error vanished.
    """
    norms = np.asarray(norms, dtype=float)
    if not 0.0 < tail <= 1.0:
        raise ValueError(f"tail must lie in (0, 1], got {tail}")
    if len(norms) < 3:
        raise ValueError(f"need at least two iterations, got {len(norms) - 1}")
    start = min(len(norms) - 2, int((1.0 - tail) * (len(norms) - 1)))
    if norms[start] == 0.0 or norms[-1] == 0.0:
        return 0.0
    return float((norms[-1] / norms[start]) ** (1.0 / (len(norms) - 1 - start)))
