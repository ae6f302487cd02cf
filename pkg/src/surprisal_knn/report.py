"""Report serialization: one JSON document per run, optional CSV tables.

Floats are written with Python's shortest round-trip repr; NaN and
infinities become ``null`` so every report is strict JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path

import numpy as np


def to_plain(obj):
    """Recursively convert numpy values, enums and tuples into JSON-ready builtins."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(report: dict) -> str:
    return json.dumps(to_plain(report), indent=2, allow_nan=False) + "\n"


def write_json(report: dict, path) -> None:
    Path(path).write_text(dumps(report))


def table_csv(rows: list[dict]) -> str:
    """CSV text for a list of flat dicts; columns follow the first row's key order."""
    buf = io.StringIO()
    if not rows:
        return ""
    rows = [to_plain(r) for r in rows]
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: "" if v is None else v for k, v in r.items()})
    return buf.getvalue()


def write_csv(rows: list[dict], path) -> None:
    Path(path).write_text(table_csv(rows))
