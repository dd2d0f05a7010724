"""Deterministic CSV and summary rendering.

Every numeric cell is rendered with 17 significant digits so a file's bytes
are a pure function of the values, and identical runs diff clean.  Column
orders are fixed by the caller and written as a header row.
"""

from __future__ import annotations

import csv
import math
import os

import numpy as np


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return format(f, ".17g")
    return str(value)


def write_csv(path: str, columns, rows) -> str:
    """Write ``rows`` (dicts or sequences) under the fixed ``columns`` order."""
    columns = list(columns)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row[c] for c in columns]
            writer.writerow([format_cell(v) for v in row])
    return path


def write_text(path: str, lines) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    return path
