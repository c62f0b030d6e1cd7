"""Flat ``key = value`` configuration files.

The format is the flat subset of TOML: one assignment per line, ``#``
comments, quoted strings, numbers, booleans and arrays.  Reading goes through
the TOML parser; writing is a plain formatter so files stay diff-able.
"""
from __future__ import annotations

import math
import sys
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def parse_flat(text: str) -> dict[str, Any]:
    data = tomllib.loads(text)
    nested = [key for key, value in data.items() if isinstance(value, dict)]
    if nested:
        raise ValueError(f"config must be flat; found tables {nested}")
    return data


def load_flat(path) -> dict[str, Any]:
    return parse_flat(Path(path).read_text())


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to a flat config")


def dump_flat(data: Mapping[str, Any]) -> str:
    """Format a mapping as flat config text (``None`` values are omitted)."""
    lines = [f"{key} = {_format_value(value)}" for key, value in data.items() if value is not None]
    return "\n".join(lines) + "\n"
