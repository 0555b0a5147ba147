from __future__ import annotations
import abc
from typing import TYPE_CHECKING
if TYPE_CHECKING:
    from pyuzawa.algorithms.report import UzawaState

class Callback():
    """Abstract class used for callbacks. Subclasses must redefine the ``run`` method. If a callback is passed to a Uzawa solver, ``run`` is called after every iteration and ``finalize`` once when the solve ends.
    """
    @abc.abstractmethod
    def run(self, state: UzawaState, n_iter: int):
        """Abstract method for ``run``.

        Args:
            state (UzawaState): Solver state after the iteration: iterates, iteration count and the latest record.
            n_iter (int): The iteration number (1 for the first iteration).
        """
        ...

    def finalize(self, state: UzawaState):
        """Called once after the last iteration.

        Args:
            state (UzawaState): Final solver state.
        """
        return None


class CallbackList(Callback):
    """Runs several callbacks in order."""
    def __init__(self, callbacks: list[Callback]) -> None:
        self.callbacks = list(callbacks)

    def run(self, state, n_iter):
        for callback in self.callbacks:
            callback.run(state, n_iter)

    def finalize(self, state):
        for callback in self.callbacks:
            callback.finalize(state)
