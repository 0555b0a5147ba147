"""Saddle point problems: the :class:`SaddleProblem` container and the generators of the benchmark problems (elasticity with a stiff inclusion, its convective nonsymmetric variant, stabilized Q1-P0 Stokes, the Gaussian Toeplitz algebraic example and random quadratic programs)."""
from .saddle_problem import SaddleProblem, problem_from_solution
from .generators import gen_elasticity, gen_convection, gen_stokes_q1p0, gen_algebraic, gen_random_qp, elasticity_blocks, convection_matrix
