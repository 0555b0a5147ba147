from __future__ import annotations
import numpy as np
import pytest
from numpy.testing import assert_array_equal
from pyuzawa.io import export_problem, format_key_value, get_header_value, import_problem, parse_key_value, parse_stanzas, read_matrix, write_matrix
from pyuzawa.linalg import SparseMatrix


def test_parse_key_value_skips_comments():
    values = parse_key_value(['# header', 'n = 32', '', 'nu=0.01  # viscosity', 'n = 64'])
    assert values == {'n': '64', 'nu': '0.01'}
    with pytest.raises(ValueError, match='line 1'):
        parse_key_value(['missing separator'])


def test_parse_stanzas():
    text = "problem = stokes\nn = 8\n\n# second run\nproblem = elasticity\n\n\n"
    assert parse_stanzas(text) == [{'problem': 'stokes', 'n': '8'}, {'problem': 'elasticity'}]
    assert parse_stanzas('') == []


def test_format_key_value_reads_back():
    text = format_key_value({'tol': 0.1, 'n': 3, 'name': 'run'})
    assert text == "tol = 0.1\nn = 3\nname = run\n"
    values = parse_key_value(text.splitlines())
    assert get_header_value(values, 'tol') == 0.1
    assert get_header_value(values, 'n', int) == 3
    assert get_header_value(values, 'missing', default=7) == 7


def test_get_header_value_booleans():
    values = {'a': 'True', 'b': 'off', 'c': 'maybe'}
    assert get_header_value(values, 'a', bool) is True
    assert get_header_value(values, 'b', bool) is False
    with pytest.raises(ValueError):
        get_header_value(values, 'c', bool)


def test_matrix_market_keeps_values(tmp_path):
    M = SparseMatrix.from_triplets([0, 1, 2], [1, 0, 2], [0.1, -1.0 / 3.0, 2.5], (3, 4))
    write_matrix(tmp_path / 'M.mtx', M)
    assert read_matrix(tmp_path / 'M.mtx') == M


def test_export_and_import_problem(tmp_path, stokes_small):
    out = export_problem(stokes_small, tmp_path / 'stokes')
    assert sorted(p.name for p in out.iterdir()) == ['A.mtx', 'B.mtx', 'D.mtx', 'f.mtx', 'g.mtx', 'problem.txt']
    sidecar = parse_key_value((out / 'problem.txt').read_text().splitlines())
    assert sidecar['n'] == '18'
    assert sidecar['symmetric_a'] == 'True'
    loaded = import_problem(out)
    assert_array_equal(loaded.A.to_dense(), stokes_small.A.to_dense())
    assert_array_equal(loaded.B.to_dense(), stokes_small.B.to_dense())
    assert_array_equal(loaded.D.to_dense(), stokes_small.D.to_dense())
    assert_array_equal(loaded.f, stokes_small.f)
    assert loaded.metadata['h'] == 0.25
    assert loaded.exact_solution is None


def test_export_keeps_exact_solution(tmp_path, qp_problem):
    loaded = import_problem(export_problem(qp_problem, tmp_path))
    assert loaded.exact_solution is not None
    assert_array_equal(loaded.exact_solution[0], qp_problem.exact_solution[0])
    assert np.isclose(loaded.D.diagonal()[0], 0.5)
