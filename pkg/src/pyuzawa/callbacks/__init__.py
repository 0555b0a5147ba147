"""Callbacks observe a Uzawa solve while it runs. A callback is a class whose ``run(state, n_iter)`` method is called after every iteration and whose ``finalize(state)`` method is called once at the end; it can record residuals, keep copies of the iterates for error analysis or stream the history to disk. All user defined callbacks should inherit from :class:`Callback`.
"""
from .callback import Callback, CallbackList
from .data_saving import IterateStorageCallback
from .residual_history import HistoryCallback, ResidualCSVCallback
