"""Plain-text CSV tables with stable columns and 17 significant digits."""
from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping, Sequence


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if hasattr(value, "item"):  # numpy scalars
        return fmt(value.item())
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Mapping], preamble: Sequence[str] = ()) -> str:
    """CSV with a header row; ``preamble`` lines are written first, prefixed by '# '."""
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        missing = [c for c in columns if c not in r]
        if missing:
            raise KeyError(f"row lacks columns {missing}")
        w.writerow([fmt(r[c]) for c in columns])
    return buf.getvalue()
