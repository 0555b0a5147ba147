"""Command line entry point ``pyuzawa``.

Exit codes: 0 on success, 1 when a table has a gated mismatch or the theory corpus has a violation, 2 on any error."""
from __future__ import annotations
import argparse
import logging
import sys
import pyuzawa
from pyuzawa.exceptions import UzawaError
from pyuzawa.io import export_problem
from .runner import build_problem, run_many
from .runspec import load_specs, parse_selector, keys_help
from .tables import TABLES, run_table, write_table, to_csv, to_markdown

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_ERROR = 2


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='pyuzawa', description='Inexact Uzawa solvers for saddle point systems: benchmark runs, table reproduction and theory verification.')
    parser.add_argument('--debug', action='store_true', help='log every outer iteration')
    parser.add_argument('--quiet', action='store_true', help='log warnings only')
    subparsers = parser.add_subparsers(dest='command', required=True)

    parser_run = subparsers.add_parser(
        'run',
        help='run the stanzas of a configuration file',
        description='Runs every stanza of a key = value configuration file. Stanzas are separated by blank lines; # starts a comment.',
        epilog='configuration keys:\n' + keys_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser_run.add_argument('--config', required=True, help='configuration file')
    parser_run.add_argument('--results', default='results.csv', help='results CSV, appended to (default: results.csv)')
    parser_run.add_argument('--workers', type=int, default=1, help='worker threads (default: 1)')

    parser_table = subparsers.add_parser('table', help='reproduce one of the published tables')
    parser_table.add_argument('name', choices=TABLES)
    parser_table.add_argument('--out', default=None, help='output directory; the table is printed when omitted')
    parser_table.add_argument('--format', choices=('csv', 'md'), default='md', help='rendering (default: md)')
    parser_table.add_argument('--workers', type=int, default=1, help='worker threads (default: 1)')

    parser_theory = subparsers.add_parser('verify-theory', help='check the convergence bounds on a seeded corpus')
    parser_theory.add_argument('--seed', type=int, default=42, help='corpus seed (default: 42)')
    parser_theory.add_argument('--count', type=int, default=50, help='number of instances (default: 50)')
    parser_theory.add_argument('--theta', type=float, default=None, help='damping factor forced on every instance')
    parser_theory.add_argument('--exact', action='store_true', help='use exact preconditioners on every instance')

    parser_export = subparsers.add_parser('export-problem', help='write a problem as Matrix Market files')
    parser_export.add_argument('selector', help='problem[:key=value,...], for example stokes:n=32,nu=0.01')
    parser_export.add_argument('--out', required=True, help='output directory')
    return parser.parse_args(argv)


def _run(args) -> int:
    specs = load_specs(args.config)
    records = run_many(specs, args.results, args.workers)
    for record in records:
        print(f"{record.spec.name or record.spec.problem_id}: {record.status} after {record.iterations} iterations")
    return EXIT_OK

def _table(args) -> int:
    result = run_table(args.name, args.workers)
    if args.out is None:
        print(to_csv(result) if args.format == 'csv' else to_markdown(result), end='')
    else:
        path = write_table(result, args.out, args.format)
        print(f"wrote {path}")
    for line in result.mismatches:
        logger.warning("mismatch: %s", line)
    return EXIT_OK if result.ok else EXIT_MISMATCH

def _verify_theory(args) -> int:
    from pyuzawa.theory import verify_corpus
    summary = verify_corpus(args.seed, args.count, args.theta, args.exact)
    print('\n'.join(summary.lines()))
    return EXIT_OK if summary.ok else EXIT_MISMATCH

def _export_problem(args) -> int:
    spec = parse_selector(args.selector)
    path = export_problem(build_problem(spec), args.out)
    print(f"wrote {spec.problem_id} to {path}")
    return EXIT_OK

COMMANDS = {'run': _run, 'table': _table, 'verify-theory': _verify_theory, 'export-problem': _export_problem}


def main(argv: list[str] | None = None) -> int:
    args = _parse_args(argv)
    if args.debug:
        pyuzawa.set_verbose(True, logging.DEBUG)
    elif args.quiet:
        pyuzawa.set_verbose(True, logging.WARNING)
    else:
        pyuzawa.set_verbose(True, logging.INFO)
    try:
        return COMMANDS[args.command](args)
    except (UzawaError, OSError, ValueError) as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        pyuzawa.set_verbose(False)


if __name__ == '__main__':
    raise SystemExit(main())
