"""Inexact Uzawa solvers. :mod:`~pyuzawa.algorithms.inexact_uzawa` holds the iteration and its four variants, :mod:`~pyuzawa.algorithms.relaxation` the residuals, the relaxation parameters and the damping policies, and :mod:`~pyuzawa.algorithms.report` the state, per iteration records and the final report."""
from .report import HISTORY_HEADER, IterationRecord, UzawaState, SolveReport, write_history_csv, read_history_csv
from .relaxation import residuals, step_omega, step_tau, ThetaPolicy, ConstantTheta, AdaptiveTheta, KappaTheta
from .inexact_uzawa import (
    VARIANTS,
    STOP_RULES,
    UzawaConfig,
    InexactUzawaAlgorithm,
    NonlinearAUzawaAlgorithm,
    NonlinearSchurUzawaAlgorithm,
    NonsymmetricUzawaAlgorithm,
    solve_alg1,
    solve_alg2,
    solve_alg3,
    solve_nonsymmetric,
    solve,
)
