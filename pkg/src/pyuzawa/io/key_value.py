from __future__ import annotations
from collections.abc import Iterable, Mapping
import numpy as np

def parse_key_value(lines: Iterable[str], split_substr: str = '=') -> dict[str, str]:
    """Parses ``key = value`` lines. Blank lines and ``#`` comments are skipped; later keys overwrite earlier ones.

    Args:
        lines (Iterable[str]): Lines of text.
        split_substr (str, optional): Separator between key and value. Defaults to '='.

    Returns:
        dict[str, str]: Stripped keys and values.
    """
    out = {}
    for number, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if split_substr not in line:
            raise ValueError(f"line {number}: expected 'key {split_substr} value', got '{line}'")
        key, value = line.split(split_substr, 1)
        out[key.strip()] = value.strip()
    return out

def parse_stanzas(text: str) -> list[dict[str, str]]:
    """Splits text into blank-line separated stanzas of ``key = value`` lines."""
    stanzas, block = [], []
    for line in text.splitlines() + ['']:
        if line.split('#', 1)[0].strip():
            block.append(line)
        elif block and not line.strip():
            stanzas.append(parse_key_value(block))
            block = []
    return stanzas

def format_key_value(values: Mapping[str, object]) -> str:
    """Formats a mapping as ``key = value`` lines in insertion order. Floats use ``repr`` so they read back exactly."""
    lines = []
    for key, value in values.items():
        if isinstance(value, (float, np.floating)):
            value = repr(float(value))
        lines.append(f"{key} = {value}")
    return '\n'.join(lines) + '\n'

def get_header_value(values: Mapping[str, str], key: str, dtype: type = float, default=None):
    """Typed lookup in a parsed ``key = value`` mapping.

    Args:
        values (Mapping[str, str]): Parsed mapping.
        key (str): Key looked for.
        dtype (type, optional): ``float``, ``int``, ``bool`` or ``str``. Defaults to float.
        default (optional): Returned when the key is absent. Defaults to None.

    Returns:
        The converted value, or ``default``.
    """
    if key not in values:
        return default
    raw = values[key]
    if dtype is bool:
        lowered = raw.lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise ValueError(f"{key}: cannot read '{raw}' as a boolean")
    return dtype(raw)
