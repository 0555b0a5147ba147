"""Linear algebra building blocks. :mod:`pyuzawa.linalg.sparse` holds the sparse matrix type and the vector kernels used inside the solvers; :mod:`pyuzawa.linalg.dense` holds the desk scale dense routines used by the exact preconditioner and the theory diagnostics."""
from .sparse import Vector, SparseMatrix, as_vector, matvec, matvec_transpose, dot, axpy, norm2, kron, block_diag, vstack
from .dense import EigenPairs, as_dense, sym_eig, eigvalsh, sym_sqrt, sym_inv_sqrt, svd_rect, chol, chol_solve, generalized_eigvalsh, spectral_norm
