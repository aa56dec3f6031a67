"""Schema-checked reader for levy-dividend-opt CSV files."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

EXPECTED_SCHEMA = 1
_VERSION_RE = re.compile(r"^# levy-dividend-opt v[\w.]+ schema=(\d+)\s*$")


class SchemaError(ValueError):
    pass


@dataclass
class Table:
    columns: list
    rows: list                      # list of dicts, values str
    meta: dict = field(default_factory=dict)

    def column(self, name: str, numeric: bool = True):
        if name not in self.columns:
            raise SchemaError(f"missing column {name!r}")
        if numeric:
            return [float(r[name]) if r[name] != "" else float("nan") for r in self.rows]
        return [r[name] for r in self.rows]

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self.columns:
                raise SchemaError(f"missing column {name!r}")


def read_table(path: str) -> Table:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    m = _VERSION_RE.match(lines[0])
    if not m:
        raise SchemaError(f"{path}: missing schema version line")
    if int(m.group(1)) != EXPECTED_SCHEMA:
        raise SchemaError(
            f"{path}: schema {m.group(1)} does not match expected {EXPECTED_SCHEMA}"
        )
    meta = {}
    body = []
    for ln in lines[1:]:
        if ln.startswith("#"):
            for key, val in re.findall(r"(\w+)=([^\s]+)", ln):
                meta[key] = val
        elif ln:
            body.append(ln)
    if len(body) < 2:
        raise SchemaError(f"{path}: no data rows")
    columns = body[0].split(",")
    rows = []
    for ln in body[1:]:
        parts = ln.split(",")
        if len(parts) != len(columns):
            raise SchemaError(f"{path}: ragged row with {len(parts)} fields")
        rows.append(dict(zip(columns, parts)))
    return Table(columns=columns, rows=rows, meta=meta)
