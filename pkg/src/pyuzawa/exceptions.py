"""Exceptions and warnings raised throughout pyuzawa. Every error derives from :class:`UzawaError`, so callers can catch the whole family at once; most also derive from the matching builtin so that ``except ValueError`` keeps working."""
from __future__ import annotations


class UzawaError(Exception):
    """Base class of all pyuzawa errors."""


class DimensionError(UzawaError, ValueError):
    """Operand shapes or vector lengths do not match."""


class NonFiniteError(UzawaError, FloatingPointError):
    """A vector or matrix operation produced NaN or Inf."""


class NotSPDError(UzawaError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class AsymmetryError(UzawaError, ValueError):
    """A matrix required to be symmetric is not symmetric within tolerance."""


class FactorizationBreakdown(NotSPDError):
    """An (incomplete) Cholesky factorization met a non-positive pivot.

    Args:
        row (int): Row of the failing pivot.
        pivot (float): Value of the pivot.
    """
    def __init__(self, row: int, pivot: float, message: str | None = None) -> None:
        self.row = row
        self.pivot = pivot
        if message is None:
            message = f"non-positive pivot {pivot:.3e} at row {row}"
        super().__init__(message)


class IndefiniteOperatorError(UzawaError, ArithmeticError):
    """A Rayleigh quotient denominator or a CG curvature was not positive."""


class RelaxationBreakdown(IndefiniteOperatorError):
    r"""The denominator of a relaxation parameter, :math:`\langle Ar_i, r_i\rangle` for :math:`\omega_i` or :math:`\langle Hs_i, s_i\rangle` for :math:`\hat{\tau}_i`, was not positive.

    Args:
        block (str): ``'A'`` or ``'H'``.
        denominator (float): Value of the denominator.
    """
    def __init__(self, block: str, denominator: float, message: str | None = None) -> None:
        self.block = block
        self.denominator = denominator
        if message is None:
            message = f"<{block} v, v> = {denominator:.3e} is not positive"
        super().__init__(message)


class ConvergenceError(UzawaError, RuntimeError):
    """An inner dense algorithm did not converge."""


class DivergenceError(UzawaError, RuntimeError):
    """The outer Uzawa iteration diverged."""


class SpecError(UzawaError, ValueError):
    """A run specification could not be resolved.

    Args:
        field (str): Name of the offending field.
    """
    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


class NumericalWarning(RuntimeWarning):
    """Recoverable numerical event (shifted factorization, partial constant, ...)."""
