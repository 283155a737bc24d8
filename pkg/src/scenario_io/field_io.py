# src/scenario_io/field_io.py
"""
Plain-text mesh-field format: a `# field <name>` header followed by one line
per vertex (or cell) holding one value, or d values separated by spaces.
"""
from pathlib import Path
from typing import Dict, Iterable, TextIO, Tuple, Union

import numpy as np

from src.utils.errors import ConfigParseError

FLOAT_FORMAT = ".17g"


def format_float(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def write_field(stream: TextIO, name: str, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=float)
    stream.write(f"# field {name}\n")
    rows = values.reshape(values.shape[0], -1) if values.ndim else values.reshape(1, 1)
    for row in rows:
        stream.write(" ".join(format_float(v) for v in row) + "\n")


def write_fields(path: Union[str, Path], fields: Iterable[Tuple[str, np.ndarray]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        for name, values in fields:
            write_field(stream, name, values)


def read_fields(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """All fields of a file, in order, as float arrays (1D for scalar fields)"""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigParseError(f"cannot read field file {path}: {exc}") from exc

    fields: Dict[str, list] = {}
    current = None
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# field"):
            parts = line.split(maxsplit=2)
            if len(parts) < 3:
                raise ConfigParseError(f"{path}: field header without a name", number)
            current = parts[2].strip()
            fields[current] = []
            continue
        if current is None:
            raise ConfigParseError(f"{path}: values before the first field header", number)
        try:
            fields[current].append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise ConfigParseError(f"{path}: invalid number in '{line}'", number) from exc

    out = {}
    for name, rows in fields.items():
        arr = np.asarray(rows, dtype=float)
        out[name] = arr[:, 0] if arr.ndim == 2 and arr.shape[1] == 1 else arr
    return out


def read_field(path: Union[str, Path], name: str = None) -> np.ndarray:
    fields = read_fields(path)
    if not fields:
        raise ConfigParseError(f"{path}: no field found")
    if name is None:
        return next(iter(fields.values()))
    if name not in fields:
        raise ConfigParseError(f"{path}: no field named '{name}'")
    return fields[name]
