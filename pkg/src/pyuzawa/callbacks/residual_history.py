from __future__ import annotations
import csv
import os
from .callback import Callback
from pyuzawa.algorithms.report import HISTORY_HEADER

class HistoryCallback(Callback):
    """Collects the per iteration records of a solve, independently of ``UzawaConfig.record_history``."""
    def __init__(self) -> None:
        self.records = []

    def run(self, state, n_iter):
        self.records.append(state.last)

    def column(self, name: str) -> list[float]:
        """Values of one history column (``fnorm``, ``omega``, ...)."""
        return [getattr(r, name) for r in self.records]


class ResidualCSVCallback(Callback):
    """Streams the residual history to a CSV file with the header ``iter,fnorm,gnorm,omega,tauhat,tau,theta``. The file is opened on the first iteration and closed by ``finalize``.

    Args:
        path (str | os.PathLike): Target file.
    """
    def __init__(self, path: str | os.PathLike) -> None:
        self.path = path
        self._file = None
        self._writer = None

    def _open(self):
        self._file = open(self.path, 'w', newline='')
        self._writer = csv.writer(self._file)
        self._writer.writerow(HISTORY_HEADER)

    def run(self, state, n_iter):
        if self._file is None:
            self._open()
        record = state.last
        self._writer.writerow([record.iter] + [repr(float(v)) for v in record.as_row()[1:]])

    def finalize(self, state):
        if self._file is None:
            self._open()
        self._file.close()
