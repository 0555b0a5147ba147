from __future__ import annotations
import csv
import os
from dataclasses import dataclass, field, astuple
import numpy as np

HISTORY_HEADER = ('iter', 'fnorm', 'gnorm', 'omega', 'tauhat', 'tau', 'theta')

@dataclass(frozen=True)
class IterationRecord:
    r"""Quantities of one Uzawa iteration: :math:`\|f_i\|` at :math:`(x_i, y_i)`, :math:`\|g_i\|` at :math:`(x_{i+1}, y_i)` and the relaxation parameters."""
    iter: int
    fnorm: float
    gnorm: float
    omega: float
    tauhat: float
    tau: float
    theta: float

    def as_row(self) -> tuple:
        return astuple(self)


@dataclass
class UzawaState:
    """Mutable state of a running solve, owned by a single solver call.

    Args:
        x (np.ndarray): Current first block iterate.
        y (np.ndarray): Current second block iterate.
        iteration (int): Completed iterations.
        history (list[IterationRecord]): Per iteration records (empty unless requested).
    """
    x: np.ndarray
    y: np.ndarray
    iteration: int = 0
    history: list[IterationRecord] = field(default_factory=list)
    last: IterationRecord | None = None


@dataclass
class SolveReport:
    r"""Result of a Uzawa solve.

    Args:
        status (str): ``'converged'``, ``'max_iters'`` or ``'diverged'``.
        iterations (int): Completed iterations.
        fnorm (float): Final :math:`\|f - Ax - By\|`.
        gnorm (float): Final :math:`\|B^tx - Dy - g\|`.
        residual (float): Final value of the stopping measure.
        wall_time (float): Seconds spent in the solve.
        x (np.ndarray): Final first block iterate.
        y (np.ndarray): Final second block iterate.
        variant (str): Solver variant.
        stop_rule (str): ``'stacked'`` or ``'max'``.
        tol (float): Stopping tolerance.
        history (list[IterationRecord] | None): Per iteration records when recorded.
        message (str): Human readable reason for the status.
    """
    status: str
    iterations: int
    fnorm: float
    gnorm: float
    residual: float
    wall_time: float
    x: np.ndarray
    y: np.ndarray
    variant: str
    stop_rule: str
    tol: float
    history: list[IterationRecord] | None = None
    message: str = ''

    @property
    def converged(self) -> bool:
        return self.status == 'converged'

    def history_array(self) -> np.ndarray:
        """History as an array with the columns of ``HISTORY_HEADER``."""
        if not self.history:
            return np.zeros((0, len(HISTORY_HEADER)))
        return np.array([r.as_row() for r in self.history], dtype=float)

    def to_csv(self, path: str | os.PathLike) -> None:
        """Writes the residual history with the header ``iter,fnorm,gnorm,omega,tauhat,tau,theta``."""
        write_history_csv(path, self.history or [])

    def __repr__(self) -> str:
        return (f"SolveReport(status={self.status}, variant={self.variant}, iterations={self.iterations}, "
                f"fnorm={self.fnorm:.3e}, gnorm={self.gnorm:.3e}, wall_time={self.wall_time:.3f}s)")


def write_history_csv(path: str | os.PathLike, history: list[IterationRecord]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(HISTORY_HEADER)
        for record in history:
            writer.writerow([record.iter] + [repr(float(v)) for v in record.as_row()[1:]])

def read_history_csv(path: str | os.PathLike) -> list[IterationRecord]:
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        return [IterationRecord(int(row['iter']), *(float(row[k]) for k in HISTORY_HEADER[1:])) for row in reader]
