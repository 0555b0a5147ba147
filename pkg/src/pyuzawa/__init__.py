import logging
import numpy as np
from importlib.metadata import version, PackageNotFoundError

try:
    __version__: str = version('pyuzawa')
except PackageNotFoundError:
    __version__ = '0.0.0+local'

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

dtype = np.float64
delta = 1e-300
verbose = False
dense_path_limit = 1500
_handler = None

def set_verbose(b: bool, level: int = logging.INFO):
    """Turns progress output of the package on or off. Output goes through the ``pyuzawa`` logger; when on, a stream handler is attached to it at ``level``.

    Args:
        b (bool): Whether or not to print progress.
        level (int, optional): Logging level of the attached handler. Defaults to logging.INFO.
    """
    global verbose
    global _handler
    verbose = b
    if b:
        if _handler is None:
            _handler = logging.StreamHandler()
            _handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
            logger.addHandler(_handler)
        _handler.setLevel(level)
        logger.setLevel(level)
    elif _handler is not None:
        logger.removeHandler(_handler)
        _handler = None
        logger.setLevel(logging.NOTSET)

def set_dense_path_limit(limit: int):
    """Sets the largest value of ``n+m`` for which the theory module assembles dense matrices.

    Args:
        limit (int): New limit
    """
    global dense_path_limit
    dense_path_limit = int(limit)
