r"""Inexact Uzawa algorithms with two variable relaxation parameters. Every variant performs, per iteration,

.. math::

    x_{i+1} = x_i + \omega_i\hat{A}^{-1}f_i,\qquad y_{i+1} = y_i + \tau_i\hat{S}^{-1}g_i

with :math:`f_i = f - (Ax_i + By_i)` and :math:`g_i = B^tx_{i+1} - Dy_i - g`. The variants differ in which of the two preconditioners may be a nonlinear inner solve:

* ``alg1``: both linear, :math:`A` symmetric.
* ``alg2``: :math:`\hat{A}^{-1}` replaced by a nonlinear :math:`\Psi_A`, :math:`\hat{S}` linear.
* ``alg3``: no good :math:`\hat{S}` available, :math:`s_i = \Psi_H(g_i)` approximately solves :math:`Hs = g_i`.
* ``nonsymmetric``: ``alg1`` for nonsymmetric :math:`A` with positive definite symmetric part."""
from __future__ import annotations
from dataclasses import dataclass
import logging
import time
import numpy as np
import pyuzawa
from pyuzawa.callbacks.callback import Callback
from pyuzawa.exceptions import DivergenceError, IndefiniteOperatorError, NonFiniteError, RelaxationBreakdown, UzawaError
from pyuzawa.linalg import matvec, norm2
from pyuzawa.preconditioners import Preconditioner, HOperator
from .relaxation import residuals, step_omega, step_tau, ThetaPolicy, ConstantTheta, AdaptiveTheta, KappaTheta
from .report import IterationRecord, UzawaState, SolveReport

logger = logging.getLogger(__name__)

VARIANTS = ('alg1', 'alg2', 'alg3', 'nonsymmetric')
STOP_RULES = ('stacked', 'max')

@dataclass
class UzawaConfig:
    r"""Solver configuration.

    Args:
        variant (str, optional): One of ``alg1``, ``alg2``, ``alg3``, ``nonsymmetric``. Defaults to 'alg1'.
        theta (float | str, optional): Constant damping factor, ``'adaptive'`` or ``'kappa'``. Defaults to 1.
        max_iters (int, optional): Iteration cap, at least 1. Defaults to 1000.
        stop_rule (str, optional): ``'stacked'`` stops on :math:`\|(f_i, g_i)\| < \text{tol}`, ``'max'`` on :math:`\max(\|f_i\|, \|g_i\|) < \text{tol}`. Defaults to 'stacked'.
        tol (float, optional): Absolute stopping tolerance. Defaults to 1e-6.
        record_history (bool, optional): Keep per iteration records in the report. Defaults to True.
        lambda_hat (float | None, optional): Lower spectral estimate for ``theta='adaptive'``; estimated by the power method when None. Defaults to None.
        kappa1 (float | None, optional): Condition number estimate for ``theta='kappa'``; estimated when None. Defaults to None.
        kappa_multiplier (float, optional): Numerator :math:`M` of ``theta='kappa'``. Defaults to 1.
        power_iters (int, optional): Power method iterations for the estimates. Defaults to 50.
        divergence_factor (float, optional): Stops as diverged once the stacked residual exceeds this multiple of the initial one. Defaults to 1e6.
        raise_on_divergence (bool, optional): Raise :class:`DivergenceError` instead of returning a diverged report. Defaults to False.
    """
    variant: str = 'alg1'
    theta: float | str = 1.0
    max_iters: int = 1000
    stop_rule: str = 'stacked'
    tol: float = 1e-6
    record_history: bool = True
    lambda_hat: float | None = None
    kappa1: float | None = None
    kappa_multiplier: float = 1.0
    power_iters: int = 50
    divergence_factor: float = 1e6
    raise_on_divergence: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got '{self.variant}'")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}, got '{self.stop_rule}'")
        if isinstance(self.theta, str):
            if self.theta not in ('adaptive', 'kappa'):
                raise ValueError(f"theta must be positive, 'adaptive' or 'kappa', got '{self.theta}'")
        elif not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.power_iters < 10:
            raise ValueError(f"power_iters must be at least 10, got {self.power_iters}")


class InexactUzawaAlgorithm:
    r"""Generic inexact Uzawa iteration with variable relaxation (Algorithm 1 when both preconditioners are linear). Subclasses only change the admissible preconditioners and the evaluation of :math:`\langle Ar, r\rangle`.

    Args:
        problem (SaddleProblem): System to solve.
        a_precond (Preconditioner): :math:`\hat{A}` or :math:`\Psi_A`.
        s_precond (Preconditioner): :math:`\hat{S}` or :math:`\Psi_H`.
        config (UzawaConfig | None, optional): Configuration. Defaults to ``UzawaConfig(variant=self.variant)``.
        x_initial (np.ndarray | None, optional): Initial :math:`x_0`. Defaults to zeros.
        y_initial (np.ndarray | None, optional): Initial :math:`y_0`. Defaults to zeros.
    """
    variant = 'alg1'
    nonlinear_a = False
    nonlinear_s = False
    requires_symmetric_a = True

    def __init__(
        self,
        problem,
        a_precond: Preconditioner,
        s_precond: Preconditioner,
        config: UzawaConfig | None = None,
        x_initial: np.ndarray | None = None,
        y_initial: np.ndarray | None = None,
    ) -> None:
        self.problem = problem
        self.a_precond = a_precond
        self.s_precond = s_precond
        self.config = UzawaConfig(variant=self.variant) if config is None else config
        self._validate()
        self.x_initial = np.zeros(problem.n) if x_initial is None else np.array(x_initial, dtype=pyuzawa.dtype)
        self.y_initial = np.zeros(problem.m) if y_initial is None else np.array(y_initial, dtype=pyuzawa.dtype)
        self.h_operator = HOperator(problem, a_precond)

    def _validate(self) -> None:
        if self.a_precond.size != self.problem.n or self.s_precond.size != self.problem.m:
            raise ValueError(f"preconditioner sizes ({self.a_precond.size}, {self.s_precond.size}) do not match (n, m) = ({self.problem.n}, {self.problem.m})")
        if self.requires_symmetric_a and not self.problem.symmetric_a:
            raise ValueError(f"{self.variant} needs a symmetric A; use the nonsymmetric variant")
        if not self.nonlinear_a and not self.a_precond.is_linear:
            raise ValueError(f"{self.variant} needs a linear preconditioner for A, got {self.a_precond.kind}")
        if not self.nonlinear_s and not self.s_precond.is_linear:
            raise ValueError(f"{self.variant} needs a linear Schur preconditioner, got {self.s_precond.kind}")

    def _a_product(self, r: np.ndarray) -> np.ndarray:
        return matvec(self.problem.A, r)

    def _spectral_operator(self):
        return self.problem.A

    def _theta_policy(self) -> ThetaPolicy:
        theta = self.config.theta
        if not isinstance(theta, str):
            return ConstantTheta(theta)
        from pyuzawa.theory.constants import lambda_hat_estimate, kappa_estimate
        if theta == 'adaptive':
            lambda_hat = self.config.lambda_hat
            if lambda_hat is None:
                lambda_hat = lambda_hat_estimate(self.a_precond, self._spectral_operator(), self.config.power_iters, kappa_hat=self.config.kappa1)
            return AdaptiveTheta(lambda_hat)
        kappa1 = self.config.kappa1
        if kappa1 is None:
            kappa1 = kappa_estimate(self.a_precond, self._spectral_operator(), self.config.power_iters)
        return KappaTheta(kappa1, self.config.kappa_multiplier)

    def _stop_measure(self, fnorm: float, gnorm: float) -> float:
        if self.config.stop_rule == 'max':
            return max(fnorm, gnorm)
        return float(np.hypot(fnorm, gnorm))

    def _step(self, state: UzawaState, f_i: np.ndarray, policy: ThetaPolicy) -> None:
        x, y = state.x, state.y
        r_i = self.a_precond.apply(f_i)
        omega = step_omega(f_i, r_i, self._a_product)
        x_next = x + omega * r_i
        g_i = self.problem.residual_g(x_next, y)
        s_i = self.s_precond.apply(g_i)
        theta = policy(omega, state.iteration + 1)
        tauhat, tau = step_tau(g_i, s_i, self.h_operator.matvec, theta)
        state.x = x_next
        state.y = y + tau * s_i
        state.iteration += 1
        state.last = IterationRecord(state.iteration, norm2(f_i), norm2(g_i), omega, tauhat, tau, theta)
        if self.config.record_history:
            state.history.append(state.last)

    def __call__(self, callback: Callback | None = None) -> SolveReport:
        """Runs the iteration.

        Args:
            callback (Callback, optional): Called after every iteration. Defaults to None.

        Returns:
            SolveReport: Status, final residuals, iterates and history.
        """
        config = self.config
        start = time.perf_counter()
        policy = self._theta_policy()
        state = UzawaState(self.x_initial.copy(), self.y_initial.copy())
        f_i, g_pair = residuals(self.problem, state.x, state.y)
        fnorm, gnorm = norm2(f_i), norm2(g_pair)
        initial = float(np.hypot(fnorm, gnorm))
        measure = self._stop_measure(fnorm, gnorm)
        status, message = None, ''
        if measure < config.tol:
            status, message = 'converged', 'initial guess satisfies the stopping rule'
        while status is None and state.iteration < config.max_iters:
            try:
                self._step(state, f_i, policy)
                f_i, g_pair = residuals(self.problem, state.x, state.y)
            except NonFiniteError as e:
                status, message = 'diverged', str(e)
                break
            fnorm, gnorm = norm2(f_i), norm2(g_pair)
            measure = self._stop_measure(fnorm, gnorm)
            logger.debug("%s iter %d: |f|=%.6e |g|=%.6e omega=%.6e tauhat=%.6e theta=%.3g",
                         self.variant, state.iteration, fnorm, gnorm, state.last.omega, state.last.tauhat, state.last.theta)
            if callback is not None:
                callback.run(state, state.iteration)
            if measure < config.tol:
                status = 'converged'
            elif np.hypot(fnorm, gnorm) > config.divergence_factor * initial:
                status, message = 'diverged', f'residual exceeded {config.divergence_factor:g} times the initial residual'
        if status is None:
            status, message = 'max_iters', f'stopping rule not met after {config.max_iters} iterations'
        if callback is not None:
            callback.finalize(state)
        report = SolveReport(
            status=status,
            iterations=state.iteration,
            fnorm=fnorm,
            gnorm=gnorm,
            residual=measure,
            wall_time=time.perf_counter() - start,
            x=state.x,
            y=state.y,
            variant=self.variant,
            stop_rule=config.stop_rule,
            tol=config.tol,
            history=state.history if config.record_history else None,
            message=message,
        )
        logger.info("%s: %s after %d iterations (|f|=%.3e, |g|=%.3e)", self.variant, status, state.iteration, fnorm, gnorm)
        if status == 'diverged' and config.raise_on_divergence:
            raise DivergenceError(f"{self.variant} diverged after {state.iteration} iterations: {message}")
        return report


class NonlinearAUzawaAlgorithm(InexactUzawaAlgorithm):
    r"""Algorithm 2: :math:`r_i = \Psi_A(f_i)` from a nonlinear inner solve, good linear :math:`\hat{S}`. The :math:`\tau_i` denominator :math:`\langle\Psi_A(Bs_i), Bs_i\rangle + \langle Ds_i, s_i\rangle` costs one more :math:`\Psi_A` application."""
    variant = 'alg2'
    nonlinear_a = True


class NonlinearSchurUzawaAlgorithm(InexactUzawaAlgorithm):
    r"""Algorithm 3: :math:`s_i = \Psi_H(g_i)` approximately solves :math:`Hs = g_i` with the matrix free :math:`H = B^t\hat{A}^{-1}B + D`."""
    variant = 'alg3'
    nonlinear_s = True


class NonsymmetricUzawaAlgorithm(InexactUzawaAlgorithm):
    r"""Algorithm 1 for nonsymmetric :math:`A` whose symmetric part :math:`A_0` is positive definite; :math:`\omega_i` uses :math:`\langle A_0r_i, r_i\rangle`, which equals :math:`\langle Ar_i, r_i\rangle`."""
    variant = 'nonsymmetric'
    requires_symmetric_a = False
    n_probes = 5

    def _validate(self) -> None:
        super()._validate()
        rng = np.random.default_rng(0)
        for _ in range(self.n_probes):
            r = rng.standard_normal(self.problem.n)
            if not np.dot(matvec(self.problem.A, r), r) > 0:
                raise IndefiniteOperatorError("symmetric part of A is not positive definite on a probe")

    def _spectral_operator(self):
        return self.problem.symmetric_part()

    def _step(self, state, f_i, policy):
        try:
            super()._step(state, f_i, policy)
        except RelaxationBreakdown as e:
            if e.block == 'A':
                raise RelaxationBreakdown('A', e.denominator, f"symmetric part of A not positive on iterate {state.iteration}: {e}") from e
            raise


ALGORITHMS = {cls.variant: cls for cls in (InexactUzawaAlgorithm, NonlinearAUzawaAlgorithm, NonlinearSchurUzawaAlgorithm, NonsymmetricUzawaAlgorithm)}

def _solve(cls, problem, a_precond, s_precond, config, x_initial, y_initial, callback) -> SolveReport:
    if config is None:
        config = UzawaConfig(variant=cls.variant)
    elif config.variant != cls.variant:
        raise ValueError(f"config requests variant '{config.variant}' but {cls.variant} was called")
    return cls(problem, a_precond, s_precond, config, x_initial, y_initial)(callback)

def solve_alg1(problem, a_precond, s_precond, config=None, x_initial=None, y_initial=None, callback=None) -> SolveReport:
    """Linear inexact Uzawa algorithm with variable relaxation."""
    return _solve(InexactUzawaAlgorithm, problem, a_precond, s_precond, config, x_initial, y_initial, callback)

def solve_alg2(problem, psi_a, s_precond, config=None, x_initial=None, y_initial=None, callback=None) -> SolveReport:
    """Nonlinear inexact Uzawa algorithm for a good Schur complement preconditioner."""
    return _solve(NonlinearAUzawaAlgorithm, problem, psi_a, s_precond, config, x_initial, y_initial, callback)

def solve_alg3(problem, a_precond, psi_h, config=None, x_initial=None, y_initial=None, callback=None) -> SolveReport:
    """Nonlinear inexact Uzawa algorithm without a good Schur complement preconditioner."""
    return _solve(NonlinearSchurUzawaAlgorithm, problem, a_precond, psi_h, config, x_initial, y_initial, callback)

def solve_nonsymmetric(problem, a_precond, s_precond, config=None, x_initial=None, y_initial=None, callback=None) -> SolveReport:
    """Inexact Uzawa algorithm for nonsymmetric A."""
    return _solve(NonsymmetricUzawaAlgorithm, problem, a_precond, s_precond, config, x_initial, y_initial, callback)

def solve(problem, a_precond, s_precond, config: UzawaConfig, x_initial=None, y_initial=None, callback=None) -> SolveReport:
    """Dispatches on ``config.variant``."""
    try:
        cls = ALGORITHMS[config.variant]
    except KeyError:
        raise UzawaError(f"unknown variant '{config.variant}'") from None
    return cls(problem, a_precond, s_precond, config, x_initial, y_initial)(callback)
