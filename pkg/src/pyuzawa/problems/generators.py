r"""Generators of the benchmark saddle point problems. All grids live on the unit square with mesh width :math:`h = 1/n`; velocity unknowns are numbered with the x index running fastest inside each row of the grid."""
from __future__ import annotations
import logging
import numpy as np
import scipy.linalg
import pyuzawa
from pyuzawa.linalg import SparseMatrix, kron, block_diag, vstack
from pyuzawa.metadata import ElasticityParams, ConvectionParams, StokesParams, AlgebraicParams, RandomQPParams
from .saddle_problem import SaddleProblem, problem_from_solution

logger = logging.getLogger(__name__)

MAX_RESEEDS = 5

def _neumann_tridiag(n: int) -> SparseMatrix:
    r""":math:`\text{tridiag}(-1,2,-1)` of order ``n`` with both corner entries set to 1."""
    T = SparseMatrix.tridiag(n, -1.0, 2.0, -1.0).csr.tolil()
    T[0, 0] = 1.0
    T[n - 1, n - 1] = 1.0
    return SparseMatrix(T.tocsr())

def _forward_difference(n: int) -> SparseMatrix:
    """``(n-1) x n`` matrix with -1 on the diagonal and 1 on the superdiagonal."""
    rows = np.repeat(np.arange(n - 1), 2)
    cols = np.column_stack([np.arange(n - 1), np.arange(1, n)]).ravel()
    vals = np.tile([-1.0, 1.0], n - 1)
    return SparseMatrix.from_triplets(rows, cols, vals, (n - 1, n))

def elasticity_blocks(params: ElasticityParams) -> tuple[SparseMatrix, SparseMatrix, SparseMatrix]:
    r"""Staggered grid blocks of the mixed elasticity problem.

    The first velocity component lives on vertical cell faces (Dirichlet at :math:`x=0,1`, reflecting at :math:`y=0,1`) and the second on horizontal faces (the same with the axes swapped), so that

    .. math::

        A_1 = I_n\otimes H_1 + H_2\otimes I_{n-1},\qquad A_2 = I_{n-1}\otimes H_2 + H_1\otimes I_n

    scaled by :math:`\mu/h^2`, :math:`B = -[I_n\otimes G;\; G\otimes I_n]/h` with the forward difference :math:`G` and :math:`D = \text{diag}(1/(\mu+\lambda))` at the cell centers.

    Args:
        params (ElasticityParams): Grid and material parameters.

    Returns:
        tuple[SparseMatrix, SparseMatrix, SparseMatrix]: ``A``, ``B`` and ``D``.
    """
    n, h, mu = params.n, params.h, params.mu
    H1 = SparseMatrix.tridiag(n - 1, -1.0, 2.0, -1.0)
    H2 = _neumann_tridiag(n)
    In, Im = SparseMatrix.identity(n), SparseMatrix.identity(n - 1)
    A1 = kron(In, H1) + kron(H2, Im)
    A2 = kron(Im, H2) + kron(H1, In)
    A = block_diag([A1, A2]).scaled(mu / h**2)
    G = _forward_difference(n)
    B = vstack([kron(In, G), kron(G, In)]).scaled(-1.0 / h)
    D = SparseMatrix.diagonal_matrix(1.0 / (mu + params.cell_lambda()))
    return A, B, D

def gen_elasticity(params: ElasticityParams) -> SaddleProblem:
    """Nearly incompressible elasticity with a stiff square inclusion.

    Args:
        params (ElasticityParams): Problem parameters.

    Returns:
        SaddleProblem: Problem with ``n = 2N(N-1)`` velocities and ``m = N^2`` pressures for ``N = params.n``.
    """
    A, B, D = elasticity_blocks(params)
    f = np.full(A.rows, params.f_value)
    g = np.full(D.rows, params.g_value)
    metadata = params.as_dict()
    metadata['problem'] = 'elasticity'
    metadata['g_convention'] = 'constant g_value in every divergence row'
    logger.debug("elasticity n=%d: dim A=%d, dim D=%d", params.n, A.rows, D.rows)
    return SaddleProblem(A, B, D, f, g, symmetric_a=True, metadata=metadata)

def convection_matrix(params: ConvectionParams) -> SparseMatrix:
    r"""Central difference :math:`\partial u_k/\partial x_k` on the staggered velocity grid, :math:`C = \text{tridiag}(-1,0,1)/(2h)` along the direction of each component."""
    n, h = params.n, params.h
    C = SparseMatrix.tridiag(n - 1, -1.0, 0.0, 1.0).scaled(1.0 / (2.0 * h))
    In = SparseMatrix.identity(n)
    return block_diag([kron(In, C), kron(C, In)])

def gen_convection(params: ConvectionParams) -> SaddleProblem:
    r"""Elasticity problem with the convection term :math:`b\,\partial u_k/\partial x_k` added to the velocity block, which makes :math:`A` nonsymmetric while keeping :math:`(A+A^t)/2` equal to the elasticity block. For :math:`b = 0` the elasticity problem is returned unchanged."""
    if params.b == 0.0:
        problem = gen_elasticity(params)
        problem.metadata.update(params.as_dict())
        return problem
    A, B, D = elasticity_blocks(params)
    A = A + convection_matrix(params).scaled(params.b)
    f = np.full(A.rows, params.f_value)
    g = np.full(D.rows, params.g_value)
    metadata = params.as_dict()
    metadata['g_convention'] = 'constant g_value in every divergence row'
    return SaddleProblem(A, B, D, f, g, symmetric_a=False, metadata=metadata)

def gen_stokes_q1p0(params: StokesParams) -> SaddleProblem:
    r"""Lid driven cavity Stokes problem discretized with Q1 velocities and piecewise constant pressures, stabilized by :math:`D = \beta h^2(I\otimes T_N + T_N\otimes I)`.

    The velocity block is :math:`\text{blockdiag}(A_0, A_0)` with :math:`A_0 = \frac{\nu}{6}(M\otimes K + K\otimes M)`, :math:`M = \text{tridiag}(1,4,1)` and :math:`K = \text{tridiag}(-1,2,-1)` of order :math:`n-1`. The lid velocity enters through :math:`f_1 = \nu(e_{n-1}\otimes \mathbb{1})`.

    Args:
        params (StokesParams): Problem parameters.

    Returns:
        SaddleProblem: Problem with ``2(n-1)^2`` velocities and ``n^2`` pressures.
    """
    n, h, nu = params.n, params.h, params.nu
    M = SparseMatrix.tridiag(n - 1, 1.0, 4.0, 1.0)
    K = SparseMatrix.tridiag(n - 1, -1.0, 2.0, -1.0)
    A0 = (kron(M, K) + kron(K, M)).scaled(nu / 6.0)
    A = block_diag([A0, A0])
    k = np.arange(n - 1)
    rows, cols = np.concatenate([k, k + 1]), np.concatenate([k, k])
    Ho = SparseMatrix.from_triplets(rows, cols, np.concatenate([-np.ones(n - 1), np.ones(n - 1)]), (n, n - 1))
    Hn = SparseMatrix.from_triplets(rows, cols, np.ones(2 * (n - 1)), (n, n - 1))
    B = vstack([kron(Hn.T, Ho.T), kron(Ho.T, Hn.T)]).scaled(h / 2.0)
    TN = _neumann_tridiag(n)
    In = SparseMatrix.identity(n)
    D = (kron(In, TN) + kron(TN, In)).scaled(params.beta * h**2)
    e_last = np.zeros(n - 1)
    e_last[-1] = 1.0
    f1 = nu * np.kron(e_last, np.ones(n - 1))
    f = np.concatenate([f1, np.zeros((n - 1) ** 2)])
    g = np.zeros(n * n)
    metadata = params.as_dict()
    metadata['h'] = h
    metadata['pressure_nullspace'] = 'constant'
    return SaddleProblem(A, B, D, f, g, symmetric_a=True, metadata=metadata)

def gen_algebraic(params: AlgebraicParams) -> SaddleProblem:
    r"""Algebraic example: Gaussian Toeplitz :math:`a_{ij} = e^{-|i-j|^2/(2\sigma^2)}/(\sqrt{2\pi}\sigma)`, :math:`B = [T; 0]` with :math:`T = \text{tridiag}(1,4,1)/1000`, :math:`D = I` and the right hand side chosen so that the solution is all ones."""
    n, m, sigma = params.n, params.m, params.sigma
    column = np.exp(-np.arange(n, dtype=float) ** 2 / (2.0 * sigma**2)) / (np.sqrt(2.0 * np.pi) * sigma)
    A = SparseMatrix(scipy.linalg.toeplitz(column))
    T = SparseMatrix.tridiag(m, 1.0, 4.0, 1.0).scaled(1.0 / 1000.0)
    B = vstack([T, SparseMatrix.zeros(n - m, m)])
    D = SparseMatrix.identity(m)
    return problem_from_solution(A, B, D, np.ones(n), np.ones(m), symmetric_a=True, metadata=params.as_dict())

def gen_random_qp(params: RandomQPParams) -> SaddleProblem:
    r"""Seeded equality constrained quadratic program :math:`\min \frac{1}{2}\langle Ax,x\rangle - \langle f,x\rangle` subject to :math:`B^tx = g`, relaxed by the penalty :math:`D = \varepsilon I`. :math:`A = LL^t + I` with a random :math:`L` and :math:`B` has full column rank.

    Args:
        params (RandomQPParams): Sizes, penalty and seed.

    Raises:
        ValueError: ``B`` stayed rank deficient after 5 redraws.

    Returns:
        SaddleProblem: Problem with a stored random exact solution.
    """
    n, m = params.n, params.m
    rng = np.random.default_rng(params.seed)
    L = rng.standard_normal((n, n)) / np.sqrt(n)
    A = L @ L.T + np.eye(n)
    for _ in range(MAX_RESEEDS):
        B = rng.standard_normal((n, m))
        if np.linalg.matrix_rank(B) == m:
            break
    else:
        raise ValueError(f"B stayed rank deficient after {MAX_RESEEDS} draws (seed {params.seed})")
    D = SparseMatrix.identity(m, params.epsilon) if params.epsilon > 0 else SparseMatrix.zeros(m, m)
    x = rng.standard_normal(n)
    y = rng.standard_normal(m)
    return problem_from_solution(SparseMatrix(0.5 * (A + A.T)), SparseMatrix(B), D, x, y, symmetric_a=True, metadata=params.as_dict())
