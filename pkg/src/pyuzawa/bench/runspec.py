r"""Run specifications: which problem to build, which preconditioners to use and how to stop. Specifications are read from plain text files of blank-line separated ``key = value`` stanzas, one run per stanza:

.. code-block:: text

    # Stokes problem with the exact velocity solver
    problem = stokes
    n = 32
    nu = 1
    a_precond = exact
    s_precond = pressure-mass
    theta = 0.5
    stop = max
    tol = 1e-6

Unknown keys and unresolvable values raise :class:`~pyuzawa.exceptions.SpecError` carrying the offending key."""
from __future__ import annotations
from dataclasses import dataclass, fields, replace
import os
from pyuzawa.algorithms import STOP_RULES, VARIANTS
from pyuzawa.exceptions import SpecError
from pyuzawa.io import parse_stanzas

PROBLEMS = ('elasticity', 'convection', 'stokes', 'algebraic', 'random-qp')
A_PRECONDS = ('jacobi', 'ic0', 'ict', 'exact', 'pcg')
S_PRECONDS = ('identity-plus-d', 'pressure-mass', 'scaled-identity', 'exact', 'pcg-h')

# keys that describe the problem, per problem
PROBLEM_KEYS = {
    'elasticity': ('n', 'mu', 'lambda_in'),
    'convection': ('n', 'b', 'mu', 'lambda_in'),
    'stokes': ('n', 'nu', 'beta'),
    'algebraic': ('n', 'm', 'sigma'),
    'random-qp': ('n', 'm', 'epsilon', 'seed'),
}

KEY_HELP = {
    'name': 'free label copied into the results',
    'problem': '|'.join(PROBLEMS),
    'n': 'grid cells per direction (elasticity, convection, stokes) or size of A (algebraic, random-qp)',
    'm': 'size of D (algebraic, random-qp)',
    'sigma': 'Gaussian width of the algebraic example',
    'nu': 'Stokes viscosity',
    'beta': 'Stokes stabilization parameter',
    'b': 'convection magnitude',
    'mu': 'shear modulus',
    'lambda_in': 'Lame parameter inside the stiff inclusion',
    'epsilon': 'penalty of the random quadratic program',
    'seed': 'seed of the random quadratic program',
    'a_precond': '|'.join(A_PRECONDS),
    'a_droptol': 'drop tolerance of ict',
    'a_inner_tol': 'relative residual tolerance of the pcg inner solve for A',
    'a_inner_max': 'iteration cap of the pcg inner solve for A',
    's_precond': '|'.join(S_PRECONDS),
    's_scale': 'factor c of the scaled-identity Schur preconditioner cI',
    's_inner_tol': 'relative residual tolerance of the pcg-h inner solve',
    's_inner_max': 'iteration cap of the pcg-h inner solve',
    'variant': '|'.join(VARIANTS) + ' (inferred from the preconditioners when absent)',
    'theta': "damping factor > 0, 'adaptive' or 'kappa'",
    'stop': '|'.join(STOP_RULES),
    'tol': 'absolute stopping tolerance',
    'max_iters': 'outer iteration cap (0 records the initial residual only)',
    'history': 'path of the residual history CSV',
}


def _optional_int(value: str) -> int | None:
    return None if value.lower() == 'none' else int(value)

def _optional_str(value: str) -> str | None:
    return None if value.lower() in ('', 'none') else value

def _theta(value: str) -> float | str:
    if value in ('adaptive', 'kappa'):
        return value
    return float(value)


@dataclass(frozen=True)
class RunSpec:
    """One benchmark run. Every field is a key of the configuration format; see ``KEY_HELP`` for their meaning."""
    problem: str = 'elasticity'
    n: int = 20
    m: int | None = None
    sigma: float = 1.5
    nu: float = 1.0
    beta: float = 0.25
    b: float = 0.0
    mu: float = 1.0
    lambda_in: float = 1000.0
    epsilon: float = 0.0
    seed: int = 0
    a_precond: str = 'exact'
    a_droptol: float = 1e-3
    a_inner_tol: float = 1e-6
    a_inner_max: int | None = None
    s_precond: str = 'identity-plus-d'
    s_scale: float = 1.0
    s_inner_tol: float = 1e-6
    s_inner_max: int | None = None
    variant: str | None = None
    theta: float | str = 1.0
    stop: str = 'stacked'
    tol: float = 1e-6
    max_iters: int = 1000
    history: str | None = None
    name: str = ''

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise SpecError('problem', f"unknown problem '{self.problem}', expected one of {PROBLEMS}")
        if self.a_precond not in A_PRECONDS:
            raise SpecError('a_precond', f"unknown preconditioner '{self.a_precond}', expected one of {A_PRECONDS}")
        if self.s_precond not in S_PRECONDS:
            raise SpecError('s_precond', f"unknown Schur preconditioner '{self.s_precond}', expected one of {S_PRECONDS}")
        if self.variant is not None and self.variant not in VARIANTS:
            raise SpecError('variant', f"unknown variant '{self.variant}', expected one of {VARIANTS}")
        if self.stop not in STOP_RULES:
            raise SpecError('stop', f"unknown stop rule '{self.stop}', expected one of {STOP_RULES}")
        if isinstance(self.theta, str):
            if self.theta not in ('adaptive', 'kappa'):
                raise SpecError('theta', f"expected a positive number, 'adaptive' or 'kappa', got '{self.theta}'")
        elif not self.theta > 0:
            raise SpecError('theta', f"must be positive, got {self.theta}")
        if not self.tol > 0:
            raise SpecError('tol', f"must be positive, got {self.tol}")
        if self.max_iters < 0:
            raise SpecError('max_iters', f"must be nonnegative, got {self.max_iters}")
        if self.problem in ('algebraic', 'random-qp') and self.m is None:
            raise SpecError('m', f"required by the {self.problem} problem")
        if self.a_precond == 'pcg' and self.s_precond == 'pcg-h':
            raise SpecError('s_precond', "pcg-h cannot be combined with a nonlinear preconditioner for A")
        if self.s_precond == 'scaled-identity' and not self.s_scale > 0:
            raise SpecError('s_scale', f"must be positive, got {self.s_scale}")

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> RunSpec:
        """Builds a specification from parsed ``key = value`` strings.

        Args:
            values (dict[str, str]): Keys and raw values of one stanza.

        Raises:
            SpecError: Unknown key, value of the wrong type or invalid combination.

        Returns:
            RunSpec: The specification.
        """
        kwargs = {}
        for key, raw in values.items():
            if key not in FIELD_PARSERS:
                raise SpecError(key, "unknown key")
            try:
                kwargs[key] = FIELD_PARSERS[key](raw)
            except ValueError as e:
                raise SpecError(key, f"cannot read '{raw}': {e}") from None
        return cls(**kwargs)

    @property
    def resolved_variant(self) -> str:
        """Variant to run: the explicit one, or the one implied by the preconditioners and the problem."""
        if self.variant is not None:
            return self.variant
        if self.s_precond == 'pcg-h':
            return 'alg3'
        if self.a_precond == 'pcg':
            return 'alg2'
        if self.problem == 'convection' and self.b != 0.0:
            return 'nonsymmetric'
        return 'alg1'

    @property
    def problem_id(self) -> str:
        """Short identifier such as ``stokes(n=32,nu=1,beta=0.25)``."""
        params = ','.join(f"{key}={getattr(self, key):g}" if isinstance(getattr(self, key), float) else f"{key}={getattr(self, key)}" for key in PROBLEM_KEYS[self.problem])
        return f"{self.problem}({params})"

    @property
    def a_precond_id(self) -> str:
        if self.a_precond == 'ict':
            return f"ict({self.a_droptol:g})"
        if self.a_precond == 'pcg':
            return f"pcg({self.a_inner_tol:g})"
        return self.a_precond

    @property
    def s_precond_id(self) -> str:
        if self.s_precond == 'scaled-identity':
            return f"{self.s_scale:g}I"
        if self.s_precond == 'pcg-h':
            return f"pcg-h({self.s_inner_tol:g})"
        return self.s_precond

    def with_changes(self, **changes) -> RunSpec:
        return replace(self, **changes)

    def as_dict(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


FIELD_PARSERS = {
    'name': str,
    'problem': str,
    'n': int,
    'm': _optional_int,
    'sigma': float,
    'nu': float,
    'beta': float,
    'b': float,
    'mu': float,
    'lambda_in': float,
    'epsilon': float,
    'seed': int,
    'a_precond': str,
    'a_droptol': float,
    'a_inner_tol': float,
    'a_inner_max': _optional_int,
    's_precond': str,
    's_scale': float,
    's_inner_tol': float,
    's_inner_max': _optional_int,
    'variant': _optional_str,
    'theta': _theta,
    'stop': str,
    'tol': float,
    'max_iters': int,
    'history': _optional_str,
}


def parse_specs(text: str) -> list[RunSpec]:
    """Parses every stanza of a configuration text. A SpecError names the stanza in its message."""
    specs = []
    for k, stanza in enumerate(parse_stanzas(text), start=1):
        try:
            specs.append(RunSpec.from_mapping(stanza))
        except SpecError as e:
            raise SpecError(e.field, f"stanza {k}: {str(e).split(': ', 1)[1]}") from None
    return specs

def load_specs(path: str | os.PathLike) -> list[RunSpec]:
    """Reads a configuration file of ``key = value`` stanzas."""
    with open(path) as f:
        return parse_specs(f.read())

def parse_selector(selector: str) -> RunSpec:
    """Parses a compact problem selector ``problem[:key=value,...]`` such as ``stokes:n=32,nu=0.01``.

    Args:
        selector (str): The selector.

    Returns:
        RunSpec: Specification holding the problem keys; the solver keys keep their defaults.
    """
    problem, _, rest = selector.partition(':')
    values = {'problem': problem.strip()}
    for item in filter(None, (s.strip() for s in rest.split(','))):
        key, sep, value = item.partition('=')
        if not sep:
            raise SpecError(item, "expected key=value in the selector")
        values[key.strip()] = value.strip()
    return RunSpec.from_mapping(values)

def keys_help() -> str:
    """One line per configuration key, used as the epilog of ``pyuzawa run --help``."""
    width = max(len(key) for key in KEY_HELP)
    return '\n'.join(f"  {key.ljust(width)}  {text}" for key, text in KEY_HELP.items())
