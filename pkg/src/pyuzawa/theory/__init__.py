"""Convergence analysis of the inexact Uzawa iterations on desk sized problems. :mod:`~pyuzawa.theory.constants` computes the constants the bounds are stated in, :mod:`~pyuzawa.theory.error_propagation` the error propagation matrices and the checks built on them, :mod:`~pyuzawa.theory.nonsymmetric` the distances used for nonsymmetric :math:`A`, and :mod:`~pyuzawa.theory.corpus` runs every check over a seeded corpus of random problems."""
from .constants import (
    check_dense_path,
    DenseSystem,
    delta_bounds,
    TheoryReport,
    lambda_max_estimate,
    lambda_min_estimate,
    kappa_estimate,
    lambda_hat_estimate,
    weighted_c1,
    constants,
    scaled_for_lower_bound,
    alpha_i,
    GiSpectrum,
    beta_i_and_Gi_spectrum,
)
from .error_propagation import (
    gamma_rate,
    omega_rate,
    d0_scalar_roots,
    propagation_matrix,
    FiAnalysis,
    build_Fi,
    schur_deviation,
    theorem_condition,
    ConvergenceVerdict,
    convergence_check,
    RatesVerdict,
    rates_check,
    ContractionResult,
    contraction_check,
    D0LemmaResult,
    d0_lemma_check,
    CorollaryVerdict,
    corollary_check,
    stacked_error_norms,
    asymptotic_rate,
)
from .nonsymmetric import NonsymDiagnostics, nonsym_diagnostics
from .corpus import CorpusInstance, CorpusSummary, Violation, corpus_instance, check_instance, verify_corpus, clustered_d0_instance, CorollaryRate, corollary_rate
