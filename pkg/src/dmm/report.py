"""Canonical report serialization.

Floats are rounded to 12 significant digits and then written in their
shortest round-trip form, keys are sorted, and the output is ASCII with a
trailing newline, so equal reports always have equal bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["SCHEMA_VERSION", "canonical", "dumps", "write_report", "summary_rows", "summary_csv"]

SCHEMA_VERSION = 1


def _round(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be written to a report")
    if x == 0.0:
        return 0.0  # folds -0.0
    return float(f"{x:.12g}")


def canonical(obj):
    """Recursively convert ``obj`` to plain JSON types with rounded floats."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return canonical(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_report(obj, path: str | Path) -> None:
    Path(path).write_bytes(dumps(obj).encode("ascii"))


def _fmt(x) -> str:
    return f"{x:.4f}" if isinstance(x, float) else str(x)


def summary_rows(report: dict) -> tuple[list[str], list[list[str]]]:
    """Table view of a report: one row per cell, one ``method:metric`` column
    per reported method and table metric."""
    metrics = report["config"]["table_metrics"]
    cells = report["cells"]
    param_keys = list(cells[0]["params"]) if cells else []
    methods = list(cells[0]["methods"]) if cells else []
    header = param_keys + [f"{m}:{x}" for m in methods for x in metrics]
    rows = []
    for cell in cells:
        row = [_fmt(cell["params"][p]) for p in param_keys]
        row += [_fmt(float(cell["methods"][m][x])) for m in methods for x in metrics]
        rows.append(row)
    return header, rows


def summary_csv(report: dict) -> str:
    header, rows = summary_rows(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
