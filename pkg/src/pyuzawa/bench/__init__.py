"""Benchmark harness: run specifications read from ``key = value`` files (:mod:`~pyuzawa.bench.runspec`), their execution into append-only result records (:mod:`~pyuzawa.bench.runner`), the reproduction of the published iteration count tables (:mod:`~pyuzawa.bench.tables`) and the ``pyuzawa`` command line (:mod:`~pyuzawa.bench.cli`)."""
from .runspec import RunSpec, PROBLEMS, A_PRECONDS, S_PRECONDS, parse_specs, load_specs, parse_selector
from .runner import RunRecord, RESULT_FIELDS, build_problem, build_a_precond, build_s_precond, run, run_safely, run_many, append_records, read_records
from .tables import TABLES, Gate, Cell, TableDefinition, CellResult, TableResult, tolerance_policy, table_definition, calibrate, run_table, to_csv, to_markdown, write_table
