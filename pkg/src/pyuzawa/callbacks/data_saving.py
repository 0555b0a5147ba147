from __future__ import annotations
import numpy as np
from .callback import Callback

class IterateStorageCallback(Callback):
    """Stores copies of every iterate :math:`(x_i, y_i)`, including the initial guess, together with the iteration records. Used by the contraction check, which needs the error at every step.

    Args:
        x_initial (np.ndarray): Initial first block iterate.
        y_initial (np.ndarray): Initial second block iterate.
    """
    def __init__(self, x_initial: np.ndarray, y_initial: np.ndarray) -> None:
        self.xs = [np.array(x_initial, dtype=float)]
        self.ys = [np.array(y_initial, dtype=float)]
        self.records = []

    def run(self, state, n_iter):
        self.xs.append(state.x.copy())
        self.ys.append(state.y.copy())
        self.records.append(state.last)

    def __len__(self) -> int:
        return len(self.records)
