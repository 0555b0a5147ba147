r"""Operator contract shared by every preconditioner. A preconditioner stands for an SPD matrix :math:`\hat{A}` (or :math:`\hat{S}`) and its ``apply`` method evaluates :math:`\hat{A}^{-1}v`. Linear preconditioners are fixed SPD operators; nonlinear ones (inner iterative solves) return an input dependent approximation and report ``is_linear = False``."""
from __future__ import annotations
import abc
import numpy as np
import pyuzawa
from pyuzawa.exceptions import DimensionError, NonFiniteError, NotSPDError
from pyuzawa.linalg import as_vector, dot

class Preconditioner():
    """Abstract class for preconditioners. Subclasses must implement ``_apply``; ``apply`` validates the input vector and the result around it.

    Args:
        size (int): Length of the vectors the preconditioner acts on.
    """
    kind: str = 'abstract'
    is_linear: bool = True

    def __init__(self, size: int) -> None:
        self.size = int(size)

    @abc.abstractmethod
    def _apply(self, v: np.ndarray) -> np.ndarray:
        """Abstract method evaluating the inverse action on a validated vector.

        Args:
            v (np.ndarray): Input vector of length ``size``.

        Returns:
            np.ndarray: Approximation of the inverse applied to ``v``.
        """
        ...

    def apply(self, v) -> np.ndarray:
        r"""Evaluates :math:`\hat{M}^{-1}v`.

        Args:
            v (array_like): Vector of length ``size``.

        Returns:
            np.ndarray: The preconditioned vector.
        """
        v = as_vector(v, self.size, f'{self.kind} preconditioner input')
        z = np.asarray(self._apply(v), dtype=pyuzawa.dtype)
        if not np.all(np.isfinite(z)):
            raise NonFiniteError(f"{self.kind} preconditioner produced NaN or Inf")
        return z

    def __call__(self, v) -> np.ndarray:
        return self.apply(v)

    def to_dense(self) -> np.ndarray:
        """Dense matrix of the inverse action, assembled column by column. Only meaningful for linear preconditioners.

        Returns:
            np.ndarray: ``size x size`` matrix.
        """
        if not self.is_linear:
            raise TypeError(f"{self.kind} preconditioner is nonlinear and has no matrix")
        I = np.eye(self.size)
        P = np.column_stack([self.apply(I[:, j]) for j in range(self.size)])
        return 0.5 * (P + P.T)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind}, size={self.size})"


class ScaledPreconditioner(Preconditioner):
    r"""Preconditioner for :math:`c\hat{M}` built from one for :math:`\hat{M}`: ``apply`` returns :math:`c^{-1}\hat{M}^{-1}v`. Used to rescale :math:`\hat{A}` so that its lower spectral bound against :math:`A` equals one.

    Args:
        base (Preconditioner): Preconditioner being rescaled.
        scale (float): Positive factor :math:`c`.
    """
    def __init__(self, base: Preconditioner, scale: float) -> None:
        if not scale > 0:
            raise NotSPDError(f"scale must be positive, got {scale}")
        super().__init__(base.size)
        self.base = base
        self.scale = float(scale)
        self.kind = f'scaled({base.kind})'
        self.is_linear = base.is_linear

    def _apply(self, v):
        return self.base.apply(v) / self.scale


class ScaledIdentityPreconditioner(Preconditioner):
    r"""Preconditioner for :math:`cI`: ``apply`` returns :math:`v/c`.

    Args:
        size (int): Vector length.
        scale (float, optional): Positive factor :math:`c`. Defaults to 1.
    """
    kind = 'scaled-identity'

    def __init__(self, size: int, scale: float = 1.0) -> None:
        if not scale > 0:
            raise NotSPDError(f"scale must be positive, got {scale}")
        super().__init__(size)
        self.scale = float(scale)

    def _apply(self, v):
        return v / self.scale


class DiagonalPreconditioner(Preconditioner):
    r"""Preconditioner for a positive diagonal matrix :math:`\text{diag}(d)`.

    Args:
        diagonal (array_like): Positive diagonal entries :math:`d`.
        kind (str, optional): Kind tag. Defaults to 'diagonal'.
    """
    def __init__(self, diagonal, kind: str = 'diagonal') -> None:
        diagonal = as_vector(diagonal, name='diagonal')
        if np.any(diagonal <= 0):
            row = int(np.argmax(diagonal <= 0))
            raise NotSPDError(f"diagonal entry {diagonal[row]:.3e} at row {row} is not positive")
        super().__init__(diagonal.shape[0])
        self.diagonal = diagonal
        self.kind = kind

    def _apply(self, v):
        return v / self.diagonal


class ExplicitInversePreconditioner(Preconditioner):
    r"""Preconditioner given directly by a dense SPD matrix :math:`P = \hat{M}^{-1}`; ``apply`` returns :math:`Pv`.

    Args:
        inverse (np.ndarray): Symmetric positive definite matrix :math:`P`.
    """
    kind = 'explicit'

    def __init__(self, inverse: np.ndarray) -> None:
        P = np.array(inverse, dtype=pyuzawa.dtype)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise DimensionError(f"inverse must be square, got {P.shape}")
        super().__init__(P.shape[0])
        self.inverse = 0.5 * (P + P.T)

    def _apply(self, v):
        return self.inverse @ v


def probe_contract(
    precond: Preconditioner,
    n_probes: int = 20,
    seed: int = 0,
    rtol: float = 1e-12,
) -> dict[str, bool]:
    r"""Checks linearity, symmetry and positivity of a preconditioner on random probes.

    Args:
        precond (Preconditioner): Operator under test.
        n_probes (int, optional): Number of random probe pairs. Defaults to 20.
        seed (int, optional): Seed of the probe generator. Defaults to 0.
        rtol (float, optional): Relative tolerance of the linearity and symmetry checks. Defaults to 1e-12.

    Returns:
        dict[str, bool]: Verdicts under the keys ``linear``, ``symmetric`` and ``positive``.
    """
    rng = np.random.default_rng(seed)
    verdict = {'linear': True, 'symmetric': True, 'positive': True}
    for _ in range(n_probes):
        u = rng.standard_normal(precond.size)
        v = rng.standard_normal(precond.size)
        a, b = rng.standard_normal(2)
        Pu, Pv = precond.apply(u), precond.apply(v)
        lhs = precond.apply(a * u + b * v)
        rhs = a * Pu + b * Pv
        scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), pyuzawa.delta)
        if np.max(np.abs(lhs - rhs)) > rtol * scale:
            verdict['linear'] = False
        uPv, vPu = dot(u, Pv), dot(v, Pu)
        if abs(uPv - vPu) > rtol * max(abs(uPv), abs(vPu), np.linalg.norm(u) * np.linalg.norm(Pv)):
            verdict['symmetric'] = False
        if dot(Pu, u) <= 0:
            verdict['positive'] = False
    return verdict
