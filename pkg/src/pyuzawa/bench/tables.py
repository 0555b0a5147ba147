r"""Reproduction of the four published iteration count tables.

Each table is a grid of :class:`Cell` objects, one per published iteration count. A cell carries the run that reproduces it, the published count and a :class:`Gate` deciding whether the measured count matches. All gates come from :func:`tolerance_policy`.

The published experiments state no stopping rule for ``table3`` and ``table4``. For those tables the Exact cells are first run with the stacked rule :math:`\|(f_i, g_i)\| < \text{tol}` for every tolerance in ``CALIBRATION_TOLS``; the tolerance with the smallest total relative deviation from the published Exact counts is then used for the whole table and written into the output.

CSV and markdown renderings contain no timings, so rerunning a table with the same library version reproduces them byte for byte; the wall clock times and the generation timestamp go into a ``<table>.meta`` sidecar."""
from __future__ import annotations
import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
import io
import logging
import math
import os
from pathlib import Path
import pyuzawa
from pyuzawa.io import format_key_value
from .runner import RunRecord, run_many, run_safely
from .runspec import RunSpec

logger = logging.getLogger(__name__)

TABLES = ('table1', 'table2', 'table3', 'table4')
CALIBRATION_TOLS = (1e-4, 1e-6, 1e-8)
# deviation charged to an Exact cell that did not converge during calibration
CALIBRATION_PENALTY = 1e3

JACOBI = 'Jacobi'
IC0 = 'no fill-in Cholesky'
ICT = 'cholinc(A, 1e-3)'
EXACT = 'Exact'
GROUP_PRECOND = {JACOBI: 'jacobi', IC0: 'ic0', ICT: 'ict', EXACT: 'exact'}

CSV_FIELDS = ('table', 'group', 'problem', 'a_precond', 's_precond', 'theta', 'stop', 'tol', 'published', 'measured', 'status', 'gate', 'match')


@dataclass(frozen=True)
class Gate:
    """Acceptance rule of a cell.

    Args:
        kind (str): ``'absolute'`` (within ``tolerance`` iterations), ``'relative'`` (within ``tolerance`` times the published count), ``'converge'`` (convergence only) or ``'report'`` (never gated).
        tolerance (float, optional): Width of the accepted band. Defaults to 0.
    """
    kind: str
    tolerance: float = 0.0

    def match(self, published: int, record: RunRecord) -> bool | None:
        if self.kind == 'report':
            return None
        if not record.converged:
            return False
        if self.kind == 'converge':
            return True
        if self.kind == 'absolute':
            return abs(record.iterations - published) <= self.tolerance
        return abs(record.iterations - published) <= self.tolerance * published

    def __str__(self) -> str:
        if self.kind == 'absolute':
            return f"+-{self.tolerance:g}"
        if self.kind == 'relative':
            return f"+-{100 * self.tolerance:g}%"
        return self.kind


def tolerance_policy(table: str, group: str, theta: float, spec: RunSpec) -> Gate:
    """The single source of every match flag.

    Args:
        table (str): Table name.
        group (str): Preconditioner group of the cell.
        theta (float): Damping factor of the cell.
        spec (RunSpec): Run of the cell.

    Returns:
        Gate: Rule applied to the cell.
    """
    if table == 'table1':
        if group == EXACT:
            return Gate('absolute', 2)
        if group == JACOBI:
            return Gate('relative', 0.25)
        return Gate('converge')
    if table == 'table2':
        if group == EXACT:
            return Gate('relative', 0.15 if spec.nu == 1.0 else 0.20)
        if group == JACOBI:
            return Gate('relative', 0.30)
        return Gate('converge')
    if table == 'table3':
        if group == EXACT:
            return Gate('absolute', 2)
        return Gate('relative', 0.15 if theta == 0.05 else 0.25)
    if table == 'table4':
        if group == EXACT and theta == 1.0:
            return Gate('relative', 0.30)
        return Gate('report')
    raise ValueError(f"unknown table '{table}'")


@dataclass(frozen=True)
class Cell:
    group: str
    spec: RunSpec
    published: int
    gate: Gate


@dataclass(frozen=True)
class TableDefinition:
    """Grid of one table.

    Args:
        name (str): ``table1`` ... ``table4``.
        title (str): Caption.
        cells (tuple[Cell, ...]): Cells in the published order.
        calibrate (bool): Whether the stopping tolerance is calibrated.
    """
    name: str
    title: str
    cells: tuple[Cell, ...]
    calibrate: bool = False


def _cell(table: str, group: str, published: int, base: RunSpec, **changes) -> Cell:
    spec = base.with_changes(a_precond=GROUP_PRECOND[group], max_iters=max(500, 3 * published), **changes)
    spec = spec.with_changes(name=f"{table} {group} theta={spec.theta:g} {spec.problem_id}")
    return Cell(group, spec, published, tolerance_policy(table, group, spec.theta, spec))

def _table1() -> TableDefinition:
    base = RunSpec(problem='elasticity', s_precond='identity-plus-d', stop='stacked', tol=1e-4)
    grid = [
        (JACOBI, 0.03, 20, 659), (JACOBI, 0.1, 20, 737), (JACOBI, 0.5, 20, 906), (JACOBI, 1.0, 20, 1074),
        (IC0, 1.0, 20, 95), (IC0, 1.0, 50, 752), (IC0, 0.1, 50, 463), (IC0, 0.05, 50, 434),
        (ICT, 1.0, 20, 11), (ICT, 1.0, 50, 17), (ICT, 1.0, 100, 61), (ICT, 0.1, 200, 152),
        (EXACT, 1.0, 200, 5),
    ]
    cells = tuple(_cell('table1', group, published, base, theta=theta, n=n) for group, theta, n, published in grid)
    return TableDefinition('table1', "Number of iterates with different theta and preconditioners for the linear elasticity problem", cells)

TABLE2_THETAS = (0.5, 0.3, 0.1, 0.05)
TABLE2 = {
    (1.0, 32): {JACOBI: (2006, 891, 725, 749), IC0: (192, 164, 139, 156), ICT: (37, 47, 93, 175), EXACT: (37, 45, 98, 184)},
    (1.0, 64): {JACOBI: (16823, 14518, 3329, 2845), IC0: (873, 779, 494, 343), ICT: (38, 55, 80, 147), EXACT: (36, 48, 94, 177)},
    (0.01, 32): {JACOBI: (4103, 1318, 1278, 1300), IC0: (295, 203, 235, 291), ICT: (101, 117, 169, 271), EXACT: (80, 115, 169, 269)},
    (0.01, 64): {JACOBI: (22026, 3884, 2777, 3756), IC0: (1385, 755, 391, 386), ICT: (143, 117, 160, 242), EXACT: (77, 95, 151, 247)},
}

def _table2() -> TableDefinition:
    base = RunSpec(problem='stokes', beta=0.25, s_precond='pressure-mass', stop='max', tol=1e-6)
    cells = []
    for (nu, n), rows in TABLE2.items():
        for group, counts in rows.items():
            for theta, published in zip(TABLE2_THETAS, counts):
                cells.append(_cell('table2', group, published, base, theta=theta, n=n, nu=nu))
    return TableDefinition('table2', "Stokes problem", tuple(cells))

TABLE3_THETAS = (0.05, 0.1, 0.5, 0.9)
TABLE3 = {
    (800, 600): {JACOBI: (263, 206, 171, 183), EXACT: (263, 129, 21, 7)},
    (1600, 1200): {JACOBI: (263, 129, 150, 143), EXACT: (263, 129, 21, 7)},
}

def _table3() -> TableDefinition:
    base = RunSpec(problem='algebraic', n=800, m=600, sigma=1.5, s_precond='scaled-identity', s_scale=2.0, stop='stacked')
    cells = []
    for (n, m), rows in TABLE3.items():
        for group, counts in rows.items():
            for theta, published in zip(TABLE3_THETAS, counts):
                cells.append(_cell('table3', group, published, base, theta=theta, n=n, m=m))
    return TableDefinition('table3', "The purely algebraic example", tuple(cells), calibrate=True)

def _table4() -> TableDefinition:
    base = RunSpec(problem='convection', n=50, s_precond='identity-plus-d', variant='nonsymmetric', stop='stacked')
    grid = [
        (IC0, 0.05, 40, 343), (IC0, 0.05, 20, 315), (IC0, 0.05, 10, 355), (IC0, 0.05, 4, 438), (IC0, 0.05, 2, 431),
        (ICT, 0.03, 10, 1122), (ICT, 1.0, 4, 33), (ICT, 1.0, 2, 30),
        (EXACT, 0.03, 10, 660), (EXACT, 1.0, 4, 21), (EXACT, 1.0, 2, 20),
    ]
    cells = tuple(_cell('table4', group, published, base, theta=theta, b=float(b)) for group, theta, b, published in grid)
    return TableDefinition('table4', "Nonsymmetric case with n=50 and different b", cells, calibrate=True)

def table_definition(name: str) -> TableDefinition:
    builders = {'table1': _table1, 'table2': _table2, 'table3': _table3, 'table4': _table4}
    if name not in builders:
        raise ValueError(f"unknown table '{name}', expected one of {TABLES}")
    return builders[name]()


@dataclass
class CellResult:
    cell: Cell
    record: RunRecord

    @property
    def measured(self) -> str:
        status = self.record.status
        if status == 'converged':
            return str(self.record.iterations)
        if status == 'diverged':
            return 'DIVERGED'
        if status == 'error':
            return 'ERROR'
        return f">{self.record.iterations}"

    @property
    def match(self) -> bool | None:
        return self.cell.gate.match(self.cell.published, self.record)


@dataclass
class TableResult:
    """Measured grid of one table.

    Args:
        definition (TableDefinition): The grid.
        tol (float): Stopping tolerance used (calibrated or published).
        calibrated (bool): Whether ``tol`` was calibrated.
        results (list[CellResult]): One result per cell, in grid order.
        checks (list[tuple[str, bool]]): Qualitative checks of the table.
    """
    definition: TableDefinition
    tol: float
    calibrated: bool
    results: list[CellResult]
    checks: list[tuple[str, bool]] = field(default_factory=list)

    @property
    def mismatches(self) -> list[str]:
        out = [f"{r.cell.spec.name}: published {r.cell.published}, measured {r.measured} ({r.cell.gate})" for r in self.results if r.match is False]
        out.extend(f"check failed: {name}" for name, ok in self.checks if not ok)
        return out

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _deviation(cells: list[Cell], records: list[RunRecord]) -> float:
    return sum(abs(r.iterations - c.published) / c.published if r.converged else CALIBRATION_PENALTY for c, r in zip(cells, records))

def calibrate(cells: list[Cell], workers: int = 1) -> tuple[float, list[RunRecord]]:
    """Chooses the stacked stopping tolerance that best reproduces the published Exact counts.

    Args:
        cells (list[Cell]): The Exact cells of a table.
        workers (int, optional): Worker threads. Defaults to 1.

    Returns:
        tuple[float, list[RunRecord]]: The tolerance and the Exact records obtained with it.
    """
    best = None
    for tol in CALIBRATION_TOLS:
        records = run_many([c.spec.with_changes(tol=tol) for c in cells], workers=workers, runner=run_safely)
        deviation = _deviation(cells, records)
        logger.info("calibration: tol=%g gives total relative deviation %.4f", tol, deviation)
        if best is None or deviation < best[0]:
            best = (deviation, tol, records)
    return best[1], best[2]

def table4_checks(results: list[CellResult], large_theta: RunRecord | None) -> list[tuple[str, bool]]:
    r"""Qualitative checks of the nonsymmetric table.

    * Within each row (preconditioner and :math:`\theta` fixed) the measured count must not decrease between consecutive values of :math:`b` where the published count increases. The published ``no fill-in Cholesky`` row is not monotone in :math:`b`, so only its increasing steps are gated.
    * The cell with the largest :math:`b` needs its small :math:`\theta`: it converges, and the same run with :math:`\theta = 1` (``large_theta``) does not.

    Args:
        results (list[CellResult]): Measured cells of ``table4``.
        large_theta (RunRecord | None): Largest-:math:`b` cell rerun with :math:`\theta = 1`.

    Returns:
        list[tuple[str, bool]]: Check descriptions and outcomes.
    """
    checks = []
    rows: dict[tuple[str, float], list[CellResult]] = {}
    for r in results:
        rows.setdefault((r.cell.group, r.cell.spec.theta), []).append(r)
    for (group, theta), row in rows.items():
        row = sorted(row, key=lambda r: r.cell.spec.b)
        for low, high in zip(row, row[1:]):
            if high.cell.published <= low.cell.published:
                continue
            ok = low.record.converged and high.record.converged and high.record.iterations >= low.record.iterations
            checks.append((f"{group}, theta={theta:g}: iterations do not decrease from b={low.cell.spec.b:g} to b={high.cell.spec.b:g}", ok))
    widest = max(results, key=lambda r: r.cell.spec.b)
    ok = widest.record.converged and large_theta is not None and not large_theta.converged
    checks.append((f"{widest.cell.group}, b={widest.cell.spec.b:g}: converges with theta={widest.cell.spec.theta:g} but not with theta=1", ok))
    return checks

def _large_theta_spec(cells: list[Cell]) -> RunSpec:
    widest = max(cells, key=lambda c: c.spec.b)
    return widest.spec.with_changes(theta=1.0, name=f"{widest.spec.name} rerun with theta=1")

def run_table(name: str, workers: int = 1) -> TableResult:
    """Runs the full grid of a table.

    Args:
        name (str): ``table1`` ... ``table4``.
        workers (int, optional): Worker threads. Defaults to 1.

    Returns:
        TableResult: Measured cells and match flags.
    """
    definition = table_definition(name)
    cells = list(definition.cells)
    known = {}
    if definition.calibrate:
        exact_index = [k for k, c in enumerate(cells) if c.group == EXACT]
        tol, exact_records = calibrate([cells[k] for k in exact_index], workers)
        cells = [Cell(c.group, c.spec.with_changes(tol=tol), c.published, c.gate) for c in cells]
        known = dict(zip(exact_index, exact_records))
    else:
        tol = cells[0].spec.tol
    todo = [k for k in range(len(cells)) if k not in known]
    logger.info("%s: running %d cells", name, len(todo))
    records = dict(known)
    records.update(zip(todo, run_many([cells[k].spec for k in todo], workers=workers, runner=run_safely)))
    results = [CellResult(cells[k], records[k]) for k in range(len(cells))]
    checks = []
    if name == 'table4':
        checks = table4_checks(results, run_safely(_large_theta_spec(cells)))
    return TableResult(definition, tol, definition.calibrate, results, checks)


def _stop_line(result: TableResult) -> str:
    spec = result.results[0].cell.spec
    rule = 'max(|f_i|, |g_i|)' if spec.stop == 'max' else '|(f_i, g_i)|'
    line = f"stopping rule: {rule} < {result.tol:g}"
    if result.calibrated:
        line += f" (calibrated from {', '.join(f'{t:g}' for t in CALIBRATION_TOLS)} on the Exact cells)"
    return line

def _match_text(match: bool | None) -> str:
    return '-' if match is None else ('yes' if match else 'NO')

def to_csv(result: TableResult) -> str:
    """CSV rendering, one row per cell."""
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator='\n')
    writer.writeheader()
    for r in result.results:
        spec = r.cell.spec
        writer.writerow({
            'table': result.definition.name,
            'group': r.cell.group,
            'problem': spec.problem_id,
            'a_precond': spec.a_precond_id,
            's_precond': spec.s_precond_id,
            'theta': f"{spec.theta:g}",
            'stop': spec.stop,
            'tol': f"{spec.tol:g}",
            'published': r.cell.published,
            'measured': r.measured,
            'status': r.record.status,
            'gate': str(r.cell.gate),
            'match': _match_text(r.match),
        })
    return out.getvalue()

def to_markdown(result: TableResult) -> str:
    """Markdown rendering grouped by preconditioner, measured counts next to the published ones."""
    lines = [f"# {result.definition.name}: {result.definition.title}", "", _stop_line(result), f"version: {pyuzawa.__version__}", ""]
    lines.append("| preconditioner | problem | theta | published | measured | gate | match |")
    lines.append("|---|---|---|---|---|---|---|")
    for r in result.results:
        spec = r.cell.spec
        lines.append(f"| {r.cell.group} | {spec.problem_id} | {spec.theta:g} | {r.cell.published} | {r.measured} | {r.cell.gate} | {_match_text(r.match)} |")
    for name, ok in result.checks:
        lines.append("")
        lines.append(f"check: {name}: {'yes' if ok else 'NO'}")
    return '\n'.join(lines) + '\n'

def write_table(result: TableResult, out_dir: str | os.PathLike, fmt: str = 'csv') -> Path:
    """Writes ``<table>.csv`` or ``<table>.md`` plus the ``<table>.meta`` sidecar with the timestamp and the wall clock times.

    Args:
        result (TableResult): Measured table.
        out_dir (str | os.PathLike): Output directory, created when missing.
        fmt (str, optional): ``'csv'`` or ``'md'``. Defaults to 'csv'.

    Returns:
        Path: Path of the rendered table.
    """
    if fmt not in ('csv', 'md'):
        raise ValueError(f"format must be 'csv' or 'md', got '{fmt}'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = result.definition.name
    path = out_dir / f"{name}.{fmt}"
    path.write_text(to_csv(result) if fmt == 'csv' else to_markdown(result))
    meta = {
        'table': name,
        'generated': datetime.now(timezone.utc).isoformat(timespec='seconds'),
        'version': pyuzawa.__version__,
        'tol': result.tol,
        'calibrated': str(result.calibrated).lower(),
    }
    for k, r in enumerate(result.results):
        meta[f'wall_seconds.{k}'] = 'nan' if math.isnan(r.record.wall_seconds) else f"{r.record.wall_seconds:.3f}"
    (out_dir / f"{name}.meta").write_text(format_key_value(meta))
    return path
