r"""Constants of the convergence analysis, computed densely on desk sized problems.

With :math:`\lambda\hat{A} \le A \le \lambda_0\hat{A}`, :math:`\kappa_1 = \lambda_0/\lambda` and :math:`\kappa_2 = \text{cond}(\hat{S}^{-1}H)`:

.. math::

    \alpha = \frac{\kappa_1 - 1}{\kappa_1 + 1},\quad \beta = \frac{\kappa_2 - 1}{\kappa_2 + 1},\quad \delta_1 = \frac{\lambda_0 + c_0}{\lambda_0(1 + c_0)},\quad \delta_2 = \frac{\lambda + c_0}{\lambda(1 + c_0)}

where :math:`c_0` is the largest eigenvalue of :math:`D^{-1}B^t\hat{A}^{-1}B`. The symmetric part :math:`A_0` stands in for :math:`A` when :math:`A` is nonsymmetric."""
from __future__ import annotations
from dataclasses import dataclass, field
from functools import cached_property
import logging
import warnings
import numpy as np
import pyuzawa
from pyuzawa.exceptions import DimensionError, NumericalWarning
from pyuzawa.io.key_value import format_key_value
from pyuzawa.linalg import SparseMatrix, matvec, dot, norm2, sym_eig, eigvalsh, chol, chol_solve, svd_rect, generalized_eigvalsh
from pyuzawa.preconditioners import Preconditioner, ScaledPreconditioner

logger = logging.getLogger(__name__)

RANGE_RTOL = 1e-12

def check_dense_path(problem) -> None:
    """Raises :class:`DimensionError` when ``n + m`` exceeds ``pyuzawa.dense_path_limit``."""
    if problem.n + problem.m > pyuzawa.dense_path_limit:
        raise DimensionError(f"n + m = {problem.n + problem.m} exceeds the dense path limit {pyuzawa.dense_path_limit}")


class DenseSystem():
    r"""Dense view of a problem and its preconditioners with the factorizations the analysis needs, each computed once on first use.

    Args:
        problem (SaddleProblem): Problem of size ``n + m <= pyuzawa.dense_path_limit``.
        a_precond (Preconditioner): Linear :math:`\hat{A}`.
        s_precond (Preconditioner | None, optional): Linear :math:`\hat{S}`. Defaults to None.
    """
    def __init__(self, problem, a_precond: Preconditioner, s_precond: Preconditioner | None = None) -> None:
        check_dense_path(problem)
        self.problem = problem
        self.A = problem.symmetric_part().to_dense()
        self.B = problem.B.to_dense()
        self.D = problem.D.to_dense()
        self.A_hat_inv = a_precond.to_dense()
        self.S_hat_inv = None if s_precond is None else s_precond.to_dense()

    @cached_property
    def a_pairs(self):
        return sym_eig(self.A)

    @cached_property
    def A_sqrt(self) -> np.ndarray:
        return self.a_pairs.spectral_function(np.sqrt)

    @cached_property
    def A_inv_sqrt(self) -> np.ndarray:
        return self.a_pairs.spectral_function(lambda w: 1.0 / np.sqrt(w))

    @cached_property
    def A_inv(self) -> np.ndarray:
        return self.a_pairs.spectral_function(lambda w: 1.0 / w)

    @cached_property
    def preconditioned_a(self) -> np.ndarray:
        r""":math:`A^{1/2}\hat{A}^{-1}A^{1/2}`, similar to :math:`\hat{A}^{-1}A`."""
        M = self.A_sqrt @ self.A_hat_inv @ self.A_sqrt
        return 0.5 * (M + M.T)

    @cached_property
    def K(self) -> np.ndarray:
        r""":math:`B^t\hat{A}^{-1}B`."""
        K = self.B.T @ self.A_hat_inv @ self.B
        return 0.5 * (K + K.T)

    @cached_property
    def H(self) -> np.ndarray:
        return self.K + self.D

    @cached_property
    def h_pairs(self):
        return sym_eig(self.H)

    @cached_property
    def H_sqrt(self) -> np.ndarray:
        return self.h_pairs.spectral_function(np.sqrt)

    @cached_property
    def H_inv_sqrt(self) -> np.ndarray:
        return self.h_pairs.spectral_function(lambda w: 1.0 / np.sqrt(w))

    @cached_property
    def S(self) -> np.ndarray:
        S = self.B.T @ chol_solve(chol(self.A), self.B) + self.D
        return 0.5 * (S + S.T)

    @cached_property
    def R(self) -> np.ndarray:
        """Lower Cholesky factor of the Schur complement."""
        return chol(self.S)

    @cached_property
    def svd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r""":math:`B^tA^{-1/2} = U[\Sigma_0\;0]V^t`."""
        return svd_rect(self.B.T @ self.A_inv_sqrt)

    @cached_property
    def preconditioned_h(self) -> np.ndarray:
        r""":math:`H^{1/2}\hat{S}^{-1}H^{1/2}`, similar to :math:`\hat{S}^{-1}H`."""
        if self.S_hat_inv is None:
            raise ValueError("no Schur preconditioner was given")
        M = self.H_sqrt @ self.S_hat_inv @ self.H_sqrt
        return 0.5 * (M + M.T)


def _range_restricted_max(K: np.ndarray, D: np.ndarray) -> float:
    """Largest eigenvalue of the pencil (K, D) on the range of a singular positive semi-definite D."""
    pairs = sym_eig(D)
    keep = pairs.eigenvalues > RANGE_RTOL * max(pairs.max, pyuzawa.delta)
    V = pairs.eigenvectors[:, keep]
    scale = 1.0 / np.sqrt(pairs.eigenvalues[keep])
    M = (V * scale).T @ K @ (V * scale)
    return float(eigvalsh(0.5 * (M + M.T))[-1])

def _rate(kappa: float) -> float:
    return (kappa - 1.0) / (kappa + 1.0)

def delta_bounds(lambda_: float, lambda0: float, c0: float, c0_flag: str) -> tuple[float, float]:
    r""":math:`(\delta_1, \delta_2)` with :math:`\delta_1 H \le S \le \delta_2 H`.

    For ``D = 0`` (``c0_flag == 'infinite'``) the raw extremal eigenvalues give :math:`(1/\lambda_0, 1/\lambda)`. Otherwise :math:`\lambda` and :math:`\lambda_0` are first clipped to :math:`\lambda \le 1 \le \lambda_0`, and a ``partial`` :math:`c_0` uses the limit :math:`c_0 \to \infty`.
    """
    if c0_flag == 'infinite':
        return 1.0 / lambda0, 1.0 / lambda_
    lo, hi = min(lambda_, 1.0), max(lambda0, 1.0)
    if c0_flag == 'partial':
        return 1.0 / hi, 1.0 / lo
    return (hi + c0) / (hi * (1.0 + c0)), (lo + c0) / (lo * (1.0 + c0))


@dataclass
class TheoryReport:
    r"""Constants of one problem/preconditioner pair plus whatever verdicts the checks add.

    Args:
        lambda_ (float): Smallest eigenvalue of :math:`\hat{A}^{-1}A`.
        lambda0 (float): Largest eigenvalue of :math:`\hat{A}^{-1}A`.
        kappa1 (float): :math:`\lambda_0/\lambda`.
        kappa2 (float): Condition number of :math:`\hat{S}^{-1}H`.
        alpha (float): :math:`(\kappa_1-1)/(\kappa_1+1)`.
        beta (float): :math:`(\kappa_2-1)/(\kappa_2+1)`.
        c0 (float): Largest eigenvalue of :math:`D^{-1}B^t\hat{A}^{-1}B`, ``inf`` when :math:`D = 0`.
        c0_flag (str): ``'finite'``, ``'infinite'`` (``D = 0``) or ``'partial'`` (singular nonzero ``D``, range of ``D`` only).
        c1 (float): Smallest :math:`c_1` with :math:`c_1R^t\hat{S}^{-1}R \ge \Sigma_0^tU^t\hat{S}^{-1}U\Sigma_0`.
        delta1 (float): Lower Schur bound :math:`\delta_1`.
        delta2 (float): Upper Schur bound :math:`\delta_2`.
        gamma1 (float): Smallest eigenvalue of :math:`(B^tA^{-1}B, B^t\hat{A}^{-1}B)` on the range of :math:`B`.
        gamma2 (float): Largest eigenvalue of the same pencil.
        lambda_hat (float): Power method estimate of :math:`\lambda`.
        dense (bool): False when only power method estimates were computed.
    """
    lambda_: float
    lambda0: float
    kappa1: float
    kappa2: float = float('nan')
    alpha: float = float('nan')
    beta: float = float('nan')
    c0: float = float('nan')
    c0_flag: str = 'finite'
    c1: float = float('nan')
    delta1: float = float('nan')
    delta2: float = float('nan')
    gamma1: float = float('nan')
    gamma2: float = float('nan')
    lambda_hat: float = float('nan')
    dense: bool = True
    alpha_i: list[float] = field(default_factory=list)
    beta_i: list[float] = field(default_factory=list)
    rho: float = float('nan')
    mu: float = float('nan')
    mu_tilde: float = float('nan')
    verdicts: dict[str, str] = field(default_factory=dict)

    def serialize(self) -> str:
        """Flat ``key = value`` block; sequences are comma separated and verdicts are prefixed with ``verdict.``."""
        values = {}
        for key in ('lambda_', 'lambda0', 'kappa1', 'kappa2', 'alpha', 'beta', 'c0', 'c0_flag', 'c1', 'delta1', 'delta2',
                    'gamma1', 'gamma2', 'lambda_hat', 'dense', 'rho', 'mu', 'mu_tilde'):
            values[key.rstrip('_')] = getattr(self, key)
        values['alpha_i'] = ','.join(repr(float(v)) for v in self.alpha_i)
        values['beta_i'] = ','.join(repr(float(v)) for v in self.beta_i)
        for key, verdict in self.verdicts.items():
            values[f'verdict.{key}'] = verdict
        return format_key_value(values)

    def __repr__(self):
        attributes = [f"{attr} = {getattr(self, attr)}\n" for attr in ('lambda_', 'lambda0', 'kappa1', 'kappa2', 'alpha', 'beta', 'c0', 'c1', 'delta1', 'delta2')]
        return "".join(attributes)


def lambda_max_estimate(a_precond: Preconditioner, A: SparseMatrix, power_iters: int = 50, seed: int = 0) -> float:
    r"""Power method on :math:`\hat{A}^{-1}A`; the final Rayleigh quotient in the :math:`A` inner product is a lower bound of :math:`\lambda_0`."""
    v = np.random.default_rng(seed).standard_normal(A.rows)
    for _ in range(power_iters):
        w = a_precond.apply(matvec(A, v))
        nrm = norm2(w)
        if nrm == 0:
            return 0.0
        v = w / nrm
    Av = matvec(A, v)
    return dot(a_precond.apply(Av), Av) / dot(Av, v)

def lambda_min_estimate(a_precond: Preconditioner, A: SparseMatrix, lambda0_hat: float, power_iters: int = 50, seed: int = 1) -> float:
    r"""Power method on the shifted operator :math:`\hat{\lambda}_0I - \hat{A}^{-1}A`, whose dominant eigenvalue is :math:`\hat{\lambda}_0 - \lambda`. Needs no solves with :math:`A`."""
    v = np.random.default_rng(seed).standard_normal(A.rows)
    for _ in range(power_iters):
        w = lambda0_hat * v - a_precond.apply(matvec(A, v))
        nrm = norm2(w)
        if nrm <= 1e-14 * lambda0_hat * norm2(v):
            break
        v = w / nrm
    Av = matvec(A, v)
    return dot(a_precond.apply(Av), Av) / dot(Av, v)

def kappa_estimate(a_precond: Preconditioner, A: SparseMatrix, power_iters: int = 50) -> float:
    r"""Estimate :math:`\hat{\kappa}_1 = \hat{\lambda}_0/\hat{\lambda}_{\min}` of :math:`\text{cond}(\hat{A}^{-1}A)`, at least 1."""
    lambda0_hat = lambda_max_estimate(a_precond, A, power_iters)
    lambda_min = lambda_min_estimate(a_precond, A, lambda0_hat, power_iters)
    if not lambda_min > 0:
        raise ValueError(f"power method produced a non-positive lower estimate {lambda_min:.3e}")
    return max(1.0, lambda0_hat / lambda_min)

def lambda_hat_estimate(a_precond: Preconditioner, A: SparseMatrix, power_iters: int = 50, kappa_hat: float | None = None) -> float:
    r"""Lower spectral estimate :math:`\hat{\lambda} = \hat{\lambda}_0/\hat{\kappa}_1` for the adaptive damping rule. :math:`\hat{\lambda}_0` comes from the power method on :math:`\hat{A}^{-1}A`; when no :math:`\hat{\kappa}_1` is supplied it is bounded with a shifted power method.

    Args:
        a_precond (Preconditioner): :math:`\hat{A}`.
        A (SparseMatrix): SPD matrix (the symmetric part for nonsymmetric problems).
        power_iters (int, optional): Iterations of each power method, at least 10. Defaults to 50.
        kappa_hat (float | None, optional): Known upper bound of :math:`\kappa_1`. Defaults to None.

    Returns:
        float: :math:`\hat{\lambda}`.
    """
    if power_iters < 10:
        raise ValueError(f"power_iters must be at least 10, got {power_iters}")
    lambda0_hat = lambda_max_estimate(a_precond, A, power_iters)
    if kappa_hat is None:
        lambda_min = lambda_min_estimate(a_precond, A, lambda0_hat, power_iters)
        kappa_hat = max(1.0, lambda0_hat / lambda_min)
    lambda_hat = lambda0_hat / kappa_hat
    logger.debug("lambda_hat = %.6e (lambda0_hat = %.6e, kappa_hat = %.6e)", lambda_hat, lambda0_hat, kappa_hat)
    return lambda_hat


def _c0(system: DenseSystem) -> tuple[float, str]:
    D = system.D
    if not np.any(D):
        return float('inf'), 'infinite'
    d_pairs = sym_eig(D)
    if d_pairs.min > RANGE_RTOL * d_pairs.max:
        return float(generalized_eigvalsh(system.K, D)[-1]), 'finite'
    c0 = _range_restricted_max(system.K, D)
    warnings.warn(f"D is singular; c0 = {c0:.6e} is computed on the range of D only", NumericalWarning)
    return c0, 'partial'

def _gammas(system: DenseSystem) -> tuple[float, float]:
    k_pairs = sym_eig(system.K)
    keep = k_pairs.eigenvalues > RANGE_RTOL * max(k_pairs.max, pyuzawa.delta)
    if not np.any(keep):
        return float('nan'), float('nan')
    V = k_pairs.eigenvectors[:, keep] / np.sqrt(k_pairs.eigenvalues[keep])
    M = V.T @ (system.B.T @ system.A_inv @ system.B) @ V
    w = eigvalsh(0.5 * (M + M.T))
    return float(w[0]), float(w[-1])

def weighted_c1(system: DenseSystem, q_inverse: np.ndarray) -> float:
    r"""Smallest :math:`c_1` with :math:`c_1R^tQ^{-1}R \ge \Sigma_0^tU^tQ^{-1}U\Sigma_0`. Invariant under scaling of :math:`Q^{-1}`."""
    U, Sigma0, _ = system.svd
    T = Sigma0.T @ U.T @ q_inverse @ U @ Sigma0
    W = system.R.T @ q_inverse @ system.R
    return float(generalized_eigvalsh(0.5 * (T + T.T), 0.5 * (W + W.T))[-1])

def constants(problem, a_precond: Preconditioner, s_precond: Preconditioner, power_iters: int = 50) -> TheoryReport:
    r"""All scalar constants of the analysis for one problem and preconditioner pair.

    Problems larger than ``pyuzawa.dense_path_limit`` get power method estimates of :math:`\lambda`, :math:`\lambda_0`, :math:`\kappa_1` and :math:`\alpha` only, with a :class:`NumericalWarning`.

    Args:
        problem (SaddleProblem): The system.
        a_precond (Preconditioner): Linear :math:`\hat{A}`.
        s_precond (Preconditioner): Linear :math:`\hat{S}`.
        power_iters (int, optional): Power method iterations for :math:`\hat{\lambda}`. Defaults to 50.

    Returns:
        TheoryReport: The constants.
    """
    A_sym = problem.symmetric_part()
    if problem.n + problem.m > pyuzawa.dense_path_limit:
        warnings.warn(f"n + m = {problem.n + problem.m} exceeds the dense path limit; only power method estimates are computed", NumericalWarning)
        lambda0 = lambda_max_estimate(a_precond, A_sym, power_iters)
        lambda_ = lambda_min_estimate(a_precond, A_sym, lambda0, power_iters)
        kappa1 = max(1.0, lambda0 / lambda_)
        return TheoryReport(lambda_=lambda_, lambda0=lambda0, kappa1=kappa1, alpha=_rate(kappa1), lambda_hat=lambda_, dense=False)
    system = DenseSystem(problem, a_precond, s_precond)
    P_sqrt = sym_eig(system.A_hat_inv).spectral_function(np.sqrt)
    M = P_sqrt @ system.A @ P_sqrt
    w = eigvalsh(0.5 * (M + M.T))
    lambda_, lambda0 = float(w[0]), float(w[-1])
    kappa1 = lambda0 / lambda_
    w2 = eigvalsh(system.preconditioned_h)
    kappa2 = float(w2[-1] / w2[0])
    c0, c0_flag = _c0(system)
    delta1, delta2 = delta_bounds(lambda_, lambda0, c0, c0_flag)
    gamma1, gamma2 = _gammas(system)
    report = TheoryReport(
        lambda_=lambda_,
        lambda0=lambda0,
        kappa1=kappa1,
        kappa2=kappa2,
        alpha=_rate(kappa1),
        beta=_rate(kappa2),
        c0=c0,
        c0_flag=c0_flag,
        c1=weighted_c1(system, system.S_hat_inv),
        delta1=delta1,
        delta2=delta2,
        gamma1=gamma1,
        gamma2=gamma2,
        lambda_hat=lambda_hat_estimate(a_precond, A_sym, power_iters),
    )
    logger.info("theory constants: kappa1=%.4g kappa2=%.4g alpha=%.4g beta=%.4g c0=%.4g (%s)", kappa1, kappa2, report.alpha, report.beta, c0, c0_flag)
    return report

def scaled_for_lower_bound(a_precond: Preconditioner, report: TheoryReport) -> ScaledPreconditioner:
    r""":math:`\tilde{A} = \lambda\hat{A}`, which satisfies :math:`\tilde{A} \le A \le \kappa_1\tilde{A}`."""
    return ScaledPreconditioner(a_precond, report.lambda_)

def alpha_i(problem, a_precond: Preconditioner, f_i, omega_i: float, system: DenseSystem | None = None) -> float:
    r""":math:`\alpha_i = |(I - \omega_iA^{1/2}\hat{A}^{-1}A^{1/2})A^{-1/2}f_i| / |A^{-1/2}f_i|`.

    Args:
        problem (SaddleProblem): The system.
        a_precond (Preconditioner): Linear :math:`\hat{A}`.
        f_i (array_like): Nonzero first block residual.
        omega_i (float): Relaxation parameter used with ``f_i``.
        system (DenseSystem | None, optional): Cached dense data. Defaults to None.

    Returns:
        float: :math:`\alpha_i`.
    """
    f_i = np.asarray(f_i, dtype=pyuzawa.dtype)
    if not np.any(f_i):
        raise ValueError("alpha_i is undefined for a zero residual")
    system = system or DenseSystem(problem, a_precond)
    e = system.A_inv_sqrt @ f_i
    return float(np.linalg.norm(e - omega_i * (system.preconditioned_a @ e)) / np.linalg.norm(e))


@dataclass
class GiSpectrum:
    r"""Result of :func:`beta_i_and_Gi_spectrum`.

    Args:
        beta_i (float): :math:`\beta_i` from its defining ratio.
        deviation (float): :math:`\bar{\beta}_i = \|I - \hat{\tau}_iH^{1/2}\hat{S}^{-1}H^{1/2}\|`, the deviation of the realized :math:`G_i^{-1} = \hat{\tau}_i\hat{S}^{-1}`; never below :math:`\beta`.
        eig_min (float): Smallest eigenvalue of :math:`R^tG_i^{-1}R`.
        eig_max (float): Largest eigenvalue of :math:`R^tG_i^{-1}R`.
        lower (float): :math:`(1-\bar{\beta}_i)\delta_1`.
        upper (float): :math:`(1+\bar{\beta}_i)\delta_2`.
    """
    beta_i: float
    deviation: float
    eig_min: float
    eig_max: float
    lower: float
    upper: float

    def contained(self, slack: float = 1e-10) -> bool:
        scale = max(1.0, abs(self.upper))
        return self.eig_min >= self.lower - slack * scale and self.eig_max <= self.upper + slack * scale

def beta_i_and_Gi_spectrum(
    problem,
    a_precond: Preconditioner,
    s_precond: Preconditioner,
    g_i,
    tauhat_i: float,
    report: TheoryReport | None = None,
    system: DenseSystem | None = None,
) -> GiSpectrum:
    r""":math:`\beta_i = |(I - \hat{\tau}_iH^{1/2}\hat{S}^{-1}H^{1/2})H^{-1/2}g_i| / |H^{-1/2}g_i|` and the eigenvalue interval of :math:`R^tG_i^{-1}R` with :math:`G_i^{-1} = \hat{\tau}_i\hat{S}^{-1}` and :math:`S = RR^t`, together with the bounds :math:`[(1-\bar{\beta}_i)\delta_1, (1+\bar{\beta}_i)\delta_2]`.

    The bounds use :math:`\bar{\beta}_i = \|I - \hat{\tau}_iH^{1/2}\hat{S}^{-1}H^{1/2}\|` in place of :math:`\beta_i`. :math:`\beta_i` measures the deviation along the single direction :math:`H^{-1/2}g_i` only, so :math:`[(1-\beta_i)\delta_1, (1+\beta_i)\delta_2]` need not contain the spectrum of :math:`R^tG_i^{-1}R`; :math:`\bar{\beta}_i \ge \beta_i` is the operator norm deviation of the realized :math:`G_i^{-1}` and does. Both values are returned.

    Args:
        problem (SaddleProblem): The system.
        a_precond (Preconditioner): Linear :math:`\hat{A}`.
        s_precond (Preconditioner): Linear :math:`\hat{S}`.
        g_i (array_like): Second block residual. A zero residual gives :math:`\beta_i = 0`.
        tauhat_i (float): :math:`\hat{\tau}_i`.
        report (TheoryReport | None, optional): Constants, computed when None. Defaults to None.
        system (DenseSystem | None, optional): Cached dense data. Defaults to None.

    Returns:
        GiSpectrum: :math:`\beta_i`, the realized deviation, the interval and its bounds.
    """
    system = system or DenseSystem(problem, a_precond, s_precond)
    report = report or constants(problem, a_precond, s_precond)
    g_i = np.asarray(g_i, dtype=pyuzawa.dtype)
    T = tauhat_i * system.preconditioned_h
    beta = 0.0
    if np.any(g_i):
        e = system.H_inv_sqrt @ g_i
        beta = float(np.linalg.norm(e - T @ e) / np.linalg.norm(e))
    deviation = float(np.max(np.abs(1.0 - eigvalsh(T))))
    W = system.R.T @ (tauhat_i * system.S_hat_inv) @ system.R
    w = eigvalsh(0.5 * (W + W.T))
    return GiSpectrum(beta, deviation, float(w[0]), float(w[-1]), (1.0 - deviation) * report.delta1, (1.0 + deviation) * report.delta2)
