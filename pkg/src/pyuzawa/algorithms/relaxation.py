r"""Residuals and the two relaxation parameters of the inexact Uzawa iteration

.. math::

    \omega_i = \frac{\langle f_i, r_i\rangle}{\langle Ar_i, r_i\rangle},\qquad \hat{\tau}_i = \frac{\langle g_i, s_i\rangle}{\langle Hs_i, s_i\rangle},\qquad \tau_i = \theta_i\hat{\tau}_i

with :math:`r_i = \hat{A}^{-1}f_i`, :math:`s_i = \hat{S}^{-1}g_i` and :math:`H = B^t\hat{A}^{-1}B + D`. A zero residual gives :math:`\omega_i = 1` or :math:`\tau_i = 1`. Since :math:`\langle Ar, r\rangle = \langle A_0r, r\rangle` for the symmetric part :math:`A_0`, the same :math:`\omega_i` serves nonsymmetric :math:`A`."""
from __future__ import annotations
from collections.abc import Callable
import abc
import numpy as np
from pyuzawa.exceptions import IndefiniteOperatorError, RelaxationBreakdown
from pyuzawa.linalg import dot

def residuals(problem, x, y, x_next=None) -> tuple[np.ndarray, np.ndarray]:
    r"""Block residuals :math:`f_i = f - (Ax_i + By_i)` and :math:`g_i = B^tx_{i+1} - Dy_i - g`. The second residual is taken at the updated first block iterate ``x_next``; when it is omitted it is taken at ``x``, which gives the residual of the pair :math:`(x, y)`.

    Args:
        problem (SaddleProblem): The system.
        x (array_like): :math:`x_i`.
        y (array_like): :math:`y_i`.
        x_next (array_like, optional): :math:`x_{i+1}`. Defaults to None.

    Returns:
        tuple[np.ndarray, np.ndarray]: :math:`(f_i, g_i)`.
    """
    f_i = problem.residual_f(x, y)
    g_i = problem.residual_g(x if x_next is None else x_next, y)
    return f_i, g_i

def step_omega(f_i: np.ndarray, r_i: np.ndarray, a_product: Callable[[np.ndarray], np.ndarray]) -> float:
    r""":math:`\omega_i = \langle f_i, r_i\rangle / \langle Ar_i, r_i\rangle`, or 1 when :math:`f_i = 0`.

    Args:
        f_i (np.ndarray): First block residual.
        r_i (np.ndarray): Preconditioned residual.
        a_product (Callable): :math:`v \mapsto Av`.

    Raises:
        RelaxationBreakdown: :math:`\langle Ar_i, r_i\rangle \le 0`.

    Returns:
        float: :math:`\omega_i`.
    """
    if not np.any(f_i):
        return 1.0
    denominator = dot(a_product(r_i), r_i)
    if not denominator > 0:
        raise RelaxationBreakdown('A', denominator)
    return dot(f_i, r_i) / denominator

def step_tau(
    g_i: np.ndarray,
    s_i: np.ndarray,
    h_product: Callable[[np.ndarray], np.ndarray],
    theta_i: float,
) -> tuple[float, float]:
    r""":math:`\hat{\tau}_i = \langle g_i, s_i\rangle / \langle Hs_i, s_i\rangle` and :math:`\tau_i = \theta_i\hat{\tau}_i`, or :math:`(1, 1)` when :math:`s_i = 0`.

    Args:
        g_i (np.ndarray): Second block residual at :math:`(x_{i+1}, y_i)`.
        s_i (np.ndarray): Preconditioned residual.
        h_product (Callable): :math:`v \mapsto Hv`, evaluated matrix free.
        theta_i (float): Damping factor.

    Raises:
        IndefiniteOperatorError: The denominator is not positive or :math:`\hat{\tau}_i < 0`.

    Returns:
        tuple[float, float]: :math:`(\hat{\tau}_i, \tau_i)`.
    """
    if not np.any(s_i) or not np.any(g_i):
        return 1.0, 1.0
    denominator = dot(h_product(s_i), s_i)
    if not denominator > 0:
        raise RelaxationBreakdown('H', denominator)
    tauhat = dot(g_i, s_i) / denominator
    if tauhat < 0:
        raise IndefiniteOperatorError(f"negative tau hat {tauhat:.3e}: the Schur preconditioner or H is indefinite")
    return tauhat, theta_i * tauhat


class ThetaPolicy():
    """Abstract rule producing the damping factor :math:`\\theta_i` of every iteration."""
    @abc.abstractmethod
    def __call__(self, omega_i: float, n_iter: int) -> float:
        ...


class ConstantTheta(ThetaPolicy):
    def __init__(self, theta: float) -> None:
        if not theta > 0:
            raise ValueError(f"theta must be positive, got {theta}")
        self.theta = float(theta)

    def __call__(self, omega_i, n_iter):
        return self.theta

    def __repr__(self) -> str:
        return f"{self.theta:g}"


class AdaptiveTheta(ThetaPolicy):
    r""":math:`\theta_i = \min(1, (1 - \sqrt{\max(0, 1 - \hat{\lambda}\omega_i)})/2)` with a lower estimate :math:`\hat{\lambda}` of the spectrum of :math:`\hat{A}^{-1}A`.

    Args:
        lambda_hat (float): Positive estimate :math:`\hat{\lambda}`.
    """
    def __init__(self, lambda_hat: float) -> None:
        if not lambda_hat > 0:
            raise ValueError(f"lambda_hat must be positive, got {lambda_hat}")
        self.lambda_hat = float(lambda_hat)

    def __call__(self, omega_i, n_iter):
        return min(1.0, (1.0 - np.sqrt(max(0.0, 1.0 - self.lambda_hat * omega_i))) / 2.0)

    def __repr__(self) -> str:
        return f"adaptive(lambda_hat={self.lambda_hat:.6g})"


class KappaTheta(ThetaPolicy):
    r""":math:`\theta_i = M/\kappa_1` for a user constant :math:`M` and (an estimate of) the condition number :math:`\kappa_1` of :math:`\hat{A}^{-1}A`.

    Args:
        kappa1 (float): Condition number, at least 1.
        multiplier (float, optional): :math:`M`. Defaults to 1.
    """
    def __init__(self, kappa1: float, multiplier: float = 1.0) -> None:
        if not kappa1 >= 1:
            raise ValueError(f"kappa1 must be at least 1, got {kappa1}")
        self.kappa1 = float(kappa1)
        self.multiplier = float(multiplier)

    def __call__(self, omega_i, n_iter):
        return self.multiplier / self.kappa1

    def __repr__(self) -> str:
        return f"kappa(M={self.multiplier:g}, kappa1={self.kappa1:.6g})"
