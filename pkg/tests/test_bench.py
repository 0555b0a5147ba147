from __future__ import annotations
import math
import numpy as np
import pytest
from pyuzawa.bench import (
    Gate,
    RunRecord,
    RunSpec,
    TableResult,
    append_records,
    parse_selector,
    parse_specs,
    read_records,
    run,
    run_many,
    run_safely,
    table_definition,
    to_csv,
    to_markdown,
    tolerance_policy,
    write_table,
)
from pyuzawa.bench.cli import EXIT_ERROR, EXIT_OK, main
from pyuzawa.bench.tables import CellResult, table4_checks
from pyuzawa.exceptions import SpecError
from pyuzawa.io import parse_key_value

QP = dict(problem='random-qp', n=12, m=4, epsilon=0.5, seed=3)


@pytest.mark.parametrize('changes, field', [
    ({'problem': 'heat'}, 'problem'),
    ({'problem': 'algebraic'}, 'm'),
    ({'theta': 0.0}, 'theta'),
    ({'theta': 'golden'}, 'theta'),
    ({'tol': -1.0}, 'tol'),
    ({'max_iters': -1}, 'max_iters'),
    ({'a_precond': 'pcg', 's_precond': 'pcg-h'}, 's_precond'),
    ({'s_precond': 'scaled-identity', 's_scale': 0.0}, 's_scale'),
])
def test_run_spec_validation(changes, field):
    with pytest.raises(SpecError) as info:
        RunSpec(**changes)
    assert info.value.field == field


def test_from_mapping_parses_values():
    spec = RunSpec.from_mapping({'problem': 'stokes', 'n': '8', 'nu': '0.01', 'theta': 'adaptive', 'a_inner_max': 'none'})
    assert (spec.n, spec.nu, spec.theta, spec.a_inner_max) == (8, 0.01, 'adaptive', None)
    with pytest.raises(SpecError) as info:
        RunSpec.from_mapping({'colour': 'red'})
    assert info.value.field == 'colour'
    with pytest.raises(SpecError) as info:
        RunSpec.from_mapping({'n': 'eight'})
    assert info.value.field == 'n'


def test_parse_specs_names_the_stanza():
    specs = parse_specs("problem = stokes\nn = 8\n\n# second\nproblem = elasticity\n")
    assert [s.problem for s in specs] == ['stokes', 'elasticity']
    with pytest.raises(SpecError, match='stanza 2'):
        parse_specs("problem = stokes\n\nproblem = stokes\nbogus = 1\n")


def test_identifiers():
    assert parse_selector('stokes:n=8,nu=0.01').problem_id == 'stokes(n=8,nu=0.01,beta=0.25)'
    assert parse_selector('elasticity').problem_id == 'elasticity(n=20,mu=1,lambda_in=1000)'
    assert RunSpec(a_precond='ict').a_precond_id == 'ict(0.001)'
    assert RunSpec(s_precond='scaled-identity', s_scale=2.0).s_precond_id == '2I'
    with pytest.raises(SpecError):
        parse_selector('stokes:n')


def test_resolved_variant():
    assert RunSpec().resolved_variant == 'alg1'
    assert RunSpec(a_precond='pcg').resolved_variant == 'alg2'
    assert RunSpec(s_precond='pcg-h').resolved_variant == 'alg3'
    assert RunSpec(problem='convection', b=2.0).resolved_variant == 'nonsymmetric'
    assert RunSpec(problem='convection').resolved_variant == 'alg1'
    assert RunSpec(variant='alg1', a_precond='pcg').resolved_variant == 'alg1'


def test_run_without_iterations_records_initial_residual():
    record = run(RunSpec(**QP, max_iters=0))
    assert record.status == 'max_iters'
    assert record.iterations == 0
    assert record.fnorm > 0


def test_run_converges_and_appends(tmp_path):
    spec = RunSpec(**QP, s_precond='exact', tol=1e-8, history=str(tmp_path / 'history.csv'))
    record = run(spec)
    assert record.converged
    assert record.fnorm < 1e-8
    assert (tmp_path / 'history.csv').exists()
    results = tmp_path / 'results.csv'
    append_records(results, [record])
    append_records(results, [record])
    rows = read_records(results)
    assert len(rows) == 2
    assert results.read_text().count('name,problem') == 1
    assert rows[0]['status'] == 'converged'
    assert rows[0]['problem'] == 'random-qp(n=12,m=4,epsilon=0.5,seed=3)'


def test_unresolvable_run_is_raised_or_recorded():
    spec = RunSpec(problem='stokes', n=4, s_precond='identity-plus-d')
    with pytest.raises(SpecError) as info:
        run(spec)
    assert info.value.field == 's_precond'
    record = run_safely(spec)
    assert record.status == 'error'
    assert record.message.startswith('SpecError')
    assert math.isnan(record.fnorm)


def test_run_many_keeps_order(tmp_path):
    specs = [RunSpec(**QP, theta=theta, s_precond='exact', max_iters=20) for theta in (1.0, 0.5, 0.8)]
    records = run_many(specs, tmp_path / 'results.csv', workers=2)
    assert [r.spec.theta for r in records] == [1.0, 0.5, 0.8]
    assert [row['theta'] for row in read_records(tmp_path / 'results.csv')] == ['1', '0.5', '0.8']


def test_table_definitions():
    assert [len(table_definition(name).cells) for name in ('table1', 'table2', 'table3', 'table4')] == [13, 64, 16, 11]
    first = table_definition('table1').cells[0]
    assert (first.spec.a_precond, first.spec.n, first.spec.theta, first.published) == ('jacobi', 20, 0.03, 659)
    assert first.spec.max_iters == 3 * 659
    table3 = table_definition('table3')
    assert table3.calibrate
    assert all(c.spec.s_scale == 2.0 for c in table3.cells)
    assert {(c.spec.n, c.spec.m) for c in table3.cells} == {(800, 600), (1600, 1200)}
    assert all(c.spec.variant == 'nonsymmetric' for c in table_definition('table4').cells)
    with pytest.raises(ValueError):
        table_definition('table5')


def _record(spec, status='converged', iterations=5):
    return RunRecord(spec, status, iterations, 0.0, 0.0, 0.25)


def test_gates():
    spec = RunSpec()
    assert Gate('absolute', 2).match(5, _record(spec, iterations=7))
    assert not Gate('absolute', 2).match(5, _record(spec, iterations=8))
    assert Gate('relative', 0.25).match(100, _record(spec, iterations=125))
    assert not Gate('converge').match(5, _record(spec, status='max_iters'))
    assert Gate('report').match(5, _record(spec, status='diverged')) is None
    assert [str(Gate('absolute', 2)), str(Gate('relative', 0.25)), str(Gate('converge'))] == ['+-2', '+-25%', 'converge']


def test_tolerance_policy():
    spec = RunSpec(problem='stokes', nu=0.01)
    assert tolerance_policy('table2', 'Exact', 0.5, spec) == Gate('relative', 0.20)
    assert tolerance_policy('table2', 'Exact', 0.5, spec.with_changes(nu=1.0)) == Gate('relative', 0.15)
    assert tolerance_policy('table3', 'Jacobi', 0.05, spec) == Gate('relative', 0.15)
    assert tolerance_policy('table4', 'Exact', 1.0, spec) == Gate('relative', 0.30)
    assert tolerance_policy('table4', 'Exact', 0.03, spec) == Gate('report')
    with pytest.raises(ValueError):
        tolerance_policy('table9', 'Exact', 1.0, spec)


def fake_table1():
    definition = table_definition('table1')
    results = [CellResult(cell, _record(cell.spec, iterations=cell.published)) for cell in definition.cells]
    results[0] = CellResult(definition.cells[0], _record(definition.cells[0].spec, status='diverged', iterations=12))
    results[4] = CellResult(definition.cells[4], _record(definition.cells[4].spec, status='max_iters', iterations=500))
    return TableResult(definition, 1e-4, False, results)


def test_table_renderings():
    result = fake_table1()
    assert [r.measured for r in result.results[:5]] == ['DIVERGED', '737', '906', '1074', '>500']
    assert not result.ok
    assert len(result.mismatches) == 2
    csv_text = to_csv(result)
    lines = csv_text.splitlines()
    assert lines[0] == 'table,group,problem,a_precond,s_precond,theta,stop,tol,published,measured,status,gate,match'
    assert len(lines) == 14
    assert lines[-1].endswith(',5,5,converged,+-2,yes')
    markdown = to_markdown(result)
    assert 'stopping rule: |(f_i, g_i)| < 0.0001' in markdown
    assert '| Jacobi | elasticity(n=20,mu=1,lambda_in=1000) | 0.03 | 659 | DIVERGED | +-25% | NO |' in markdown
    # no timings, so renderings are reproducible
    assert to_csv(fake_table1()) == csv_text
    assert to_markdown(fake_table1()) == markdown


def table4_results(**iterations):
    """Table 4 cells measured at their published counts, with overrides keyed by ``'<precond>_b<b>'``."""
    results = []
    for cell in table_definition('table4').cells:
        key = f"{cell.spec.a_precond}_b{cell.spec.b:g}"
        results.append(CellResult(cell, _record(cell.spec, iterations=iterations.get(key, cell.published))))
    return results


def test_table4_checks_pass_on_published_counts():
    results = table4_results()
    large_theta = _record(results[0].cell.spec.with_changes(theta=1.0), status='diverged')
    checks = table4_checks(results, large_theta)
    assert all(ok for _, ok in checks), checks
    names = [name for name, _ in checks]
    # increasing published steps only: ic0 2->4 and 20->40, ict 2->4, exact 2->4, plus the large-b check
    assert len(names) == 5
    assert 'Exact, theta=1: iterations do not decrease from b=2 to b=4' in names
    assert names[-1] == 'no fill-in Cholesky, b=40: converges with theta=0.05 but not with theta=1'


def test_table4_checks_flag_decrease_with_b():
    checks = dict(table4_checks(table4_results(exact_b4=15), _record(RunSpec(), status='diverged')))
    assert not checks['Exact, theta=1: iterations do not decrease from b=2 to b=4']
    checks = dict(table4_checks(table4_results(ic0_b40=300), _record(RunSpec(), status='diverged')))
    assert not checks['no fill-in Cholesky, theta=0.05: iterations do not decrease from b=20 to b=40']


def test_table4_checks_flag_large_b_converging_with_large_theta():
    results = table4_results()
    name = 'no fill-in Cholesky, b=40: converges with theta=0.05 but not with theta=1'
    assert not dict(table4_checks(results, _record(RunSpec(), iterations=80)))[name]
    assert not dict(table4_checks(results, None))[name]


def test_write_table(tmp_path):
    path = write_table(fake_table1(), tmp_path / 'out', 'md')
    assert path.name == 'table1.md'
    meta = parse_key_value((tmp_path / 'out' / 'table1.meta').read_text().splitlines())
    assert meta['calibrated'] == 'false'
    assert meta['wall_seconds.0'] == '0.250'
    assert '0.250' not in path.read_text()
    with pytest.raises(ValueError):
        write_table(fake_table1(), tmp_path, 'html')


def test_cli_export_problem(tmp_path, capsys):
    out = tmp_path / 'stokes'
    assert main(['--quiet', 'export-problem', 'stokes:n=4', '--out', str(out)]) == EXIT_OK
    assert (out / 'A.mtx').exists()
    assert 'stokes(n=4,nu=1,beta=0.25)' in capsys.readouterr().out


def test_cli_run(tmp_path, capsys):
    config = tmp_path / 'runs.txt'
    config.write_text("name = qp\nproblem = random-qp\nn = 12\nm = 4\nepsilon = 0.5\ns_precond = exact\ntol = 1e-8\n")
    results = tmp_path / 'results.csv'
    assert main(['--quiet', 'run', '--config', str(config), '--results', str(results)]) == EXIT_OK
    assert 'qp: converged' in capsys.readouterr().out
    assert read_records(results)[0]['name'] == 'qp'


def test_cli_errors(tmp_path, capsys):
    config = tmp_path / 'bad.txt'
    config.write_text("problem = elasticity\nsolver = fast\n")
    assert main(['--quiet', 'run', '--config', str(config)]) == EXIT_ERROR
    assert 'solver' in capsys.readouterr().err
    assert main(['--quiet', 'run', '--config', str(tmp_path / 'missing.txt')]) == EXIT_ERROR
    with pytest.raises(SystemExit):
        main(['table', 'table9'])


def test_cli_verify_theory(capsys):
    assert main(['--quiet', 'verify-theory', '--count', '2']) == EXIT_OK
    assert capsys.readouterr().out.startswith('corpus seed=42 count=2 violations=0')


@pytest.mark.slow
def test_table1_exact_cell():
    cell = table_definition('table1').cells[-1]
    record = run(cell.spec)
    assert cell.gate.match(cell.published, record), f"measured {record.iterations}"


@pytest.mark.slow
def test_stokes_exact_cell():
    cell = next(c for c in table_definition('table2').cells if c.group == 'Exact' and c.spec.nu == 1.0 and c.spec.n == 32 and c.spec.theta == 0.5)
    assert cell.published == 37
    record = run(cell.spec)
    assert cell.gate.match(cell.published, record), f"measured {record.iterations}"
