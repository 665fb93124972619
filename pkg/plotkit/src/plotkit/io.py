"""Read-only parsers for run CSV logs, lab1d CSV dumps, and mesh dumps."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    """Input file cannot be interpreted; message names the offending part."""


RUN_REQUIRED = ("step", "dof", "eta_max_rel")


def read_run_csv(path, required=RUN_REQUIRED) -> dict:
    """Parse a run log CSV into {column: ndarray}.

    Raises ParseError naming the first missing required column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file, expected a run log CSV")
    header, data = rows[0], rows[1:]
    for col in required:
        if col not in header:
            raise ParseError(f"{path}: missing required column '{col}' "
                             f"(found: {', '.join(header)})")
    out = {}
    for i, col in enumerate(header):
        vals = [r[i] for r in data]
        try:
            out[col] = np.array([float(v) for v in vals])
        except ValueError:
            out[col] = np.array(vals)
    return out


def pair_columns(cols: dict, prefix: str) -> list[str]:
    """Names like prefix_1, prefix_2, ... present in the log, in order."""
    names = []
    j = 1
    while f"{prefix}_{j}" in cols:
        names.append(f"{prefix}_{j}")
        j += 1
    return names


def read_lab1d_csv(path, required=("x",)) -> dict:
    return read_run_csv(path, required=required)


@dataclass(frozen=True)
class MeshCell:
    eid: int
    level: int
    x0: float
    y0: float
    x1: float
    y1: float
    subdomain: int
    p: int


def read_mesh_dump(path) -> list[MeshCell]:
    """Parse a `mesh v1` text dump into a list of leaf cells."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith("mesh v1"):
        raise ParseError(f"{path}: not a mesh dump (expected 'mesh v1' header)")
    try:
        count = int(lines[0].split()[2])
    except (IndexError, ValueError) as exc:
        raise ParseError(f"{path}: malformed mesh header '{lines[0]}'") from exc
    cells = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        parts = ln.split()
        if len(parts) != 8:
            raise ParseError(f"{path}: malformed mesh line '{ln}'")
        cells.append(MeshCell(int(parts[0]), int(parts[1]),
                              float(parts[2]), float(parts[3]),
                              float(parts[4]), float(parts[5]),
                              int(parts[6]), int(parts[7])))
    if len(cells) != count:
        raise ParseError(f"{path}: header says {count} cells, found {len(cells)}")
    return cells
