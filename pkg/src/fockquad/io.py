"""Deterministic text serialisation helpers (CSV, JSON lines)."""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Sequence


def fmt_float(x: float) -> str:
    """Shortest decimal that round-trips to the same double (<= 17 digits)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def json_line(record: dict) -> str:
    parts = []
    for key, value in record.items():
        if isinstance(value, float):
            text = fmt_float(value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, (int,)):
            text = str(value)
        else:
            text = '"' + str(value).replace('"', '\\"') + '"'
        parts.append(f'"{key}": {text}')
    return "{" + ", ".join(parts) + "}"
