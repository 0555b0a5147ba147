"""Input and output: Matrix Market files for matrices, vectors and whole problems, and the plain ``key = value`` text format used by problem sidecars, run configurations and theory reports."""
from .key_value import parse_key_value, parse_stanzas, format_key_value, get_header_value
from .matrix_market import write_matrix, read_matrix, write_vector, read_vector, export_problem, import_problem
