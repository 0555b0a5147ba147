from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import dataclass, field
import logging
import math
import os
import time
import numpy as np
import pyuzawa
from pyuzawa.algorithms import UzawaConfig, residuals, solve
from pyuzawa.callbacks import ResidualCSVCallback
from pyuzawa.exceptions import SpecError, UzawaError
from pyuzawa.linalg import norm2
from pyuzawa.linalg.dense import MAX_DESK_SIZE
from pyuzawa.metadata import ElasticityParams, ConvectionParams, StokesParams, AlgebraicParams, RandomQPParams, inclusion_lambda
from pyuzawa.preconditioners import (
    Preconditioner,
    ScaledIdentityPreconditioner,
    ExactPreconditioner,
    HOperator,
    PCGPreconditioner,
    jacobi,
    ic0,
    ict,
    schur_diag,
)
from pyuzawa.problems import SaddleProblem, gen_elasticity, gen_convection, gen_stokes_q1p0, gen_algebraic, gen_random_qp
from .runspec import RunSpec

logger = logging.getLogger(__name__)

RESULT_FIELDS = (
    'name', 'problem', 'a_precond', 's_precond', 'variant', 'theta', 'stop', 'tol', 'max_iters',
    'status', 'converged', 'iterations', 'fnorm', 'gnorm', 'wall_seconds', 'history', 'version', 'message',
)


@dataclass
class RunRecord:
    """Outcome of one :class:`RunSpec`.

    Args:
        spec (RunSpec): The run that produced the record.
        status (str): ``'converged'``, ``'max_iters'``, ``'diverged'`` or ``'error'``.
        iterations (int): Outer iterations performed.
        fnorm (float): Final :math:`\\|f_i\\|`.
        gnorm (float): Final :math:`\\|g_i\\|`.
        wall_seconds (float): Time spent building and solving.
        history_path (str | None): Residual history CSV written by the run.
        message (str): Reason for the status.
        version (str): Library version that produced the record.
    """
    spec: RunSpec
    status: str
    iterations: int
    fnorm: float
    gnorm: float
    wall_seconds: float
    history_path: str | None = None
    message: str = ''
    version: str = field(default_factory=lambda: pyuzawa.__version__)

    @property
    def converged(self) -> bool:
        return self.status == 'converged'

    def as_row(self) -> dict[str, str]:
        spec = self.spec
        theta = spec.theta if isinstance(spec.theta, str) else f"{spec.theta:g}"
        return {
            'name': spec.name,
            'problem': spec.problem_id,
            'a_precond': spec.a_precond_id,
            's_precond': spec.s_precond_id,
            'variant': spec.resolved_variant,
            'theta': theta,
            'stop': spec.stop,
            'tol': f"{spec.tol:g}",
            'max_iters': str(spec.max_iters),
            'status': self.status,
            'converged': str(self.converged).lower(),
            'iterations': str(self.iterations),
            'fnorm': repr(float(self.fnorm)),
            'gnorm': repr(float(self.gnorm)),
            'wall_seconds': f"{self.wall_seconds:.4f}",
            'history': self.history_path or '',
            'version': self.version,
            'message': self.message,
        }


def build_problem(spec: RunSpec) -> SaddleProblem:
    """Generates the problem a specification selects. Invalid parameters raise a SpecError naming the problem key."""
    try:
        if spec.problem == 'elasticity':
            return gen_elasticity(ElasticityParams(spec.n, spec.mu, inclusion_lambda(spec.lambda_in)))
        if spec.problem == 'convection':
            return gen_convection(ConvectionParams(spec.n, spec.b, spec.mu, inclusion_lambda(spec.lambda_in)))
        if spec.problem == 'stokes':
            return gen_stokes_q1p0(StokesParams(spec.n, spec.nu, spec.beta))
        if spec.problem == 'algebraic':
            return gen_algebraic(AlgebraicParams(spec.n, spec.m, spec.sigma))
        return gen_random_qp(RandomQPParams(spec.n, spec.m, spec.epsilon, spec.seed))
    except SpecError:
        raise
    except ValueError as e:
        raise SpecError('problem', str(e)) from None

def build_a_precond(spec: RunSpec, problem: SaddleProblem) -> Preconditioner:
    r"""Preconditioner for :math:`A`. For a nonsymmetric :math:`A` it is built from the symmetric part :math:`A_0`."""
    A = problem.A if problem.symmetric_a else problem.symmetric_part()
    if spec.a_precond == 'jacobi':
        return jacobi(A)
    if spec.a_precond == 'ic0':
        return ic0(A)
    if spec.a_precond == 'ict':
        return ict(A, spec.a_droptol)
    if spec.a_precond == 'exact':
        return ExactPreconditioner(A)
    if not problem.symmetric_a:
        raise SpecError('a_precond', "pcg needs a symmetric A")
    return PCGPreconditioner(A, jacobi(A), spec.a_inner_tol, spec.a_inner_max)

def build_s_precond(spec: RunSpec, problem: SaddleProblem, a_precond: Preconditioner) -> Preconditioner:
    r"""Preconditioner for the Schur complement, or the inner solve :math:`\Psi_H` for ``pcg-h``."""
    if spec.s_precond in ('identity-plus-d', 'pressure-mass'):
        try:
            return schur_diag(problem, spec.s_precond)
        except ValueError as e:
            raise SpecError('s_precond', str(e)) from None
    if spec.s_precond == 'scaled-identity':
        return ScaledIdentityPreconditioner(problem.m, spec.s_scale)
    if spec.s_precond == 'pcg-h':
        return PCGPreconditioner(HOperator(problem, a_precond), None, spec.s_inner_tol, spec.s_inner_max)
    if not a_precond.is_linear:
        raise SpecError('s_precond', "the exact Schur preconditioner needs a linear preconditioner for A")
    if problem.m > MAX_DESK_SIZE:
        raise SpecError('s_precond', f"the exact Schur preconditioner assembles H densely and is limited to m <= {MAX_DESK_SIZE}, got m = {problem.m}")
    return ExactPreconditioner(HOperator(problem, a_precond).to_dense())


def run(spec: RunSpec) -> RunRecord:
    """Builds the problem and the preconditioners of ``spec`` and runs the selected Uzawa variant. Divergence and numerical breakdowns are recorded in the returned record; specification errors are raised.

    Args:
        spec (RunSpec): The run.

    Raises:
        SpecError: The specification cannot be resolved.

    Returns:
        RunRecord: The outcome.
    """
    start = time.perf_counter()
    problem = build_problem(spec)
    if spec.max_iters == 0:
        f_0, g_0 = residuals(problem, np.zeros(problem.n), np.zeros(problem.m))
        return RunRecord(spec, 'max_iters', 0, norm2(f_0), norm2(g_0), time.perf_counter() - start, message='max_iters = 0')
    try:
        a_precond = build_a_precond(spec, problem)
        s_precond = build_s_precond(spec, problem, a_precond)
        config = UzawaConfig(variant=spec.resolved_variant, theta=spec.theta, max_iters=spec.max_iters, stop_rule=spec.stop, tol=spec.tol, record_history=False)
        callback = None if spec.history is None else ResidualCSVCallback(spec.history)
        report = solve(problem, a_precond, s_precond, config, callback=callback)
    except SpecError:
        raise
    except UzawaError as e:
        logger.warning("%s: %s", spec.problem_id, e)
        return RunRecord(spec, 'error', 0, math.nan, math.nan, time.perf_counter() - start, message=f"{type(e).__name__}: {e}")
    except ValueError as e:
        raise SpecError('variant', str(e)) from None
    logger.info("%s %s/%s theta=%s: %s in %d iterations", spec.problem_id, spec.a_precond_id, spec.s_precond_id, spec.theta, report.status, report.iterations)
    return RunRecord(spec, report.status, report.iterations, report.fnorm, report.gnorm, time.perf_counter() - start, spec.history, report.message)

def run_safely(spec: RunSpec) -> RunRecord:
    """:func:`run` that turns every exception, specification errors included, into an ``'error'`` record."""
    try:
        return run(spec)
    except Exception as e:
        logger.warning("%s failed: %s", spec.name or spec.problem, e)
        return RunRecord(spec, 'error', 0, math.nan, math.nan, 0.0, message=f"{type(e).__name__}: {e}")


def append_records(path: str | os.PathLike, records: list[RunRecord]) -> None:
    """Appends records to a results CSV, writing the header when the file is new or empty."""
    write_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, 'a', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_FIELDS)
        if write_header:
            writer.writeheader()
        for record in records:
            writer.writerow(record.as_row())

def read_records(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline='') as f:
        return list(csv.DictReader(f))

def run_many(specs: list[RunSpec], results_path: str | os.PathLike | None = None, workers: int = 1, runner=run) -> list[RunRecord]:
    """Runs independent specifications in worker threads. Records are appended to ``results_path`` by the calling thread only, in the order of ``specs``.

    Args:
        specs (list[RunSpec]): Runs to execute.
        results_path (str | os.PathLike | None, optional): Results CSV to append to. Defaults to None.
        workers (int, optional): Number of worker threads. Defaults to 1.
        runner (Callable, optional): :func:`run` or :func:`run_safely`. Defaults to run.

    Returns:
        list[RunRecord]: One record per specification, in order.
    """
    records = []
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        for record in pool.map(runner, specs):
            records.append(record)
            if results_path is not None:
                append_records(results_path, [record])
    return records
