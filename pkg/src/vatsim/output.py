"""Delimited tables and the plain-text summary.

CSV layout: column names, then units, then data rows.  Floats are written
with 17 significant digits so they parse back to the same double.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


@dataclass
class Table:
    columns: Sequence[str]
    units: Sequence[str]
    rows: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("columns and units must have the same length")


@dataclass(frozen=True)
class Scalar:
    name: str
    value: float | int | str
    unit: str
    formula: str


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    writer.writerow(table.units)
    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(table.columns)}")
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def read_csv(path: str | Path) -> tuple[list[str], list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: missing header or units row")
    return rows[0], rows[1], rows[2:]


def summary_text(title: str, scalars: Sequence[Scalar]) -> str:
    width = max((len(s.name) for s in scalars), default=0)
    lines = [f"# {title}"]
    for s in scalars:
        unit = f" {s.unit}" if s.unit and s.unit != "1" else ""
        lines.append(f"{s.name:<{width}} = {format_cell(s.value)}{unit}    [{s.formula}]")
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> dict[str, str]:
    """Map scalar name to its value text (unit and formula stripped)."""
    out = {}
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        name, _, rest = line.partition("=")
        out[name.strip()] = rest.split()[0]
    return out
