"""Deterministic CSV/JSON writers with a metadata block."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .experiments import config_hash


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row {r!r} does not match columns {self.columns}")

    def to_records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def _plain(obj):
    """Convert numpy scalars/arrays, tuples and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Table):
        return {"columns": list(obj.columns), "rows": _plain(obj.rows)}
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False) + "\n"


def metadata(config: dict | None = None, seed: int | None = None) -> dict:
    config = _plain(config or {})
    return {"config_hash": config_hash(config), "seed": seed, "version": __version__}


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v, separators=(",", ":"))
    return "" if v is None else str(v)


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def emit(report, path, fmt: str | None = None, config: dict | None = None,
         seed: int | None = None) -> Path:
    """Write a Table or report to ``path`` as csv or json.

    JSON output is {"metadata": ..., "data": ...} in canonical form.  CSV output
    holds only the table; its metadata goes to a sibling ``<name>.meta.json``.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    meta = metadata(config, seed)
    if fmt == "json":
        path.write_text(canonical_json({"metadata": meta, "data": report}), encoding="utf-8")
    elif fmt == "csv":
        if not isinstance(report, Table):
            raise TypeError("csv output needs a Table")
        path.write_text(table_to_csv(report), encoding="utf-8")
        path.with_name(path.name + ".meta.json").write_text(canonical_json(meta), encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    return path


def load_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def divergence_table(result) -> Table:
    """Flatten a dichotomy result into one plot-ready table."""
    from .experiments import DivergenceTable
    rows = [r for tab in result.tables.values() for r in tab.as_rows()]
    return Table(DivergenceTable.columns, rows)
