"""Matrix Market import and export of matrices, vectors and whole saddle point problems. Matrices use the coordinate format (1-based indices, ``real general`` or ``real symmetric`` headers), vectors the dense array format. A problem directory holds ``A.mtx``, ``B.mtx``, ``D.mtx``, ``f.mtx``, ``g.mtx``, optionally ``x_exact.mtx`` and ``y_exact.mtx``, and a ``problem.txt`` sidecar of ``key = value`` lines."""
from __future__ import annotations
import logging
import os
from pathlib import Path
import numpy as np
import scipy.io
import scipy.sparse as sp
import pyuzawa
from pyuzawa.linalg import SparseMatrix
from pyuzawa.problems import SaddleProblem
from .key_value import format_key_value, get_header_value, parse_key_value

logger = logging.getLogger(__name__)

SIDECAR = 'problem.txt'
BLOCK_FILES = {'A': 'A.mtx', 'B': 'B.mtx', 'D': 'D.mtx', 'f': 'f.mtx', 'g': 'g.mtx'}

def write_matrix(path: str | os.PathLike, M: SparseMatrix, symmetric: bool | None = None, comment: str = '') -> None:
    """Writes a sparse matrix in coordinate format.

    Args:
        path (str | os.PathLike): Target file.
        M (SparseMatrix): Matrix to write.
        symmetric (bool | None, optional): Whether to use the ``symmetric`` header (lower triangle only). Defaults to None, meaning exact symmetry is detected.
        comment (str, optional): Comment line written after the header. Defaults to ''.
    """
    if symmetric is None:
        symmetric = M.rows == M.cols and M.is_symmetric(0.0)
    scipy.io.mmwrite(str(path), sp.coo_matrix(M.csr), comment=comment, field='real', precision=17,
                     symmetry='symmetric' if symmetric else 'general')

def read_matrix(path: str | os.PathLike) -> SparseMatrix:
    """Reads a coordinate (or array) Matrix Market file into a ``SparseMatrix``."""
    data = scipy.io.mmread(str(path))
    if sp.issparse(data):
        return SparseMatrix(data)
    return SparseMatrix(np.asarray(data, dtype=pyuzawa.dtype))

def write_vector(path: str | os.PathLike, v) -> None:
    """Writes a vector as a one column dense array."""
    scipy.io.mmwrite(str(path), np.asarray(v, dtype=pyuzawa.dtype).reshape(-1, 1), field='real', precision=17)

def read_vector(path: str | os.PathLike) -> np.ndarray:
    data = scipy.io.mmread(str(path))
    if sp.issparse(data):
        data = data.toarray()
    return np.asarray(data, dtype=pyuzawa.dtype).ravel()

def export_problem(problem: SaddleProblem, out_dir: str | os.PathLike) -> Path:
    """Writes every block of a problem plus the ``problem.txt`` sidecar.

    Args:
        problem (SaddleProblem): Problem to export.
        out_dir (str | os.PathLike): Directory, created if needed.

    Returns:
        Path: The directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_matrix(out_dir / BLOCK_FILES['A'], problem.A, symmetric=problem.symmetric_a)
    write_matrix(out_dir / BLOCK_FILES['B'], problem.B, symmetric=False)
    write_matrix(out_dir / BLOCK_FILES['D'], problem.D, symmetric=True)
    write_vector(out_dir / BLOCK_FILES['f'], problem.f)
    write_vector(out_dir / BLOCK_FILES['g'], problem.g)
    sidecar = {
        'format_version': 1,
        'pyuzawa_version': pyuzawa.__version__,
        'n': problem.n,
        'm': problem.m,
        'symmetric_a': problem.symmetric_a,
        'has_exact_solution': problem.exact_solution is not None,
    }
    if problem.exact_solution is not None:
        write_vector(out_dir / 'x_exact.mtx', problem.exact_solution[0])
        write_vector(out_dir / 'y_exact.mtx', problem.exact_solution[1])
    for key, value in problem.metadata.items():
        sidecar[f'meta.{key}'] = value
    (out_dir / SIDECAR).write_text(format_key_value(sidecar))
    logger.info("exported %r to %s", problem, out_dir)
    return out_dir

def import_problem(in_dir: str | os.PathLike) -> SaddleProblem:
    """Reads a problem directory written by :func:`export_problem`."""
    in_dir = Path(in_dir)
    with open(in_dir / SIDECAR) as f:
        sidecar = parse_key_value(f.readlines())
    exact = None
    if get_header_value(sidecar, 'has_exact_solution', bool, False):
        exact = (read_vector(in_dir / 'x_exact.mtx'), read_vector(in_dir / 'y_exact.mtx'))
    metadata = {key[len('meta.'):]: value for key, value in sidecar.items() if key.startswith('meta.')}
    if 'h' in metadata:
        metadata['h'] = float(metadata['h'])
    return SaddleProblem(
        read_matrix(in_dir / BLOCK_FILES['A']),
        read_matrix(in_dir / BLOCK_FILES['B']),
        read_matrix(in_dir / BLOCK_FILES['D']),
        read_vector(in_dir / BLOCK_FILES['f']),
        read_vector(in_dir / BLOCK_FILES['g']),
        symmetric_a=get_header_value(sidecar, 'symmetric_a', bool, True),
        exact_solution=exact,
        metadata=metadata,
    )
