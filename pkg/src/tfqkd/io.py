"""CSV and JSON emission with stable number formatting, and gain-table ingestion."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .core import OUTCOMES, GainTable, UsageError, check_outcome

FLOAT_FORMAT = "%.16e"


def fmt(x) -> str:
    """17 significant digits in scientific notation; ints pass through."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return FLOAT_FORMAT % x
    return str(x)


def csv_text(header, rows, comments=()) -> str:
    buf = io.StringIO()
    for c in comments:
        for line in str(c).splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, comments=()) -> None:
    text = csv_text(header, rows, comments)
    Path(path).write_text(text, encoding="utf-8")


def read_csv(path):
    """Returns (comments, header, rows) with rows as lists of strings."""
    comments, lines = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif line.strip():
            lines.append(line)
    if not lines:
        raise UsageError(f"{path}: no header row")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    rows = [[c.strip() for c in r] for r in reader]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise UsageError(f"{path}: row {i + 1} has {len(r)} fields, header has {len(header)}")
    return comments, header, rows


def _jsonable(obj):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return fmt(obj)
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(json_text(obj), encoding="utf-8")


# ---------------------------------------------------------------------------
# gain tables

def outcome_label(outcome) -> str:
    kc, kd = check_outcome(outcome)
    return f"{kc}{kd}"


def parse_outcome(label: str):
    label = label.strip().replace(",", "").replace("(", "").replace(")", "").replace(" ", "")
    if label not in ("10", "01"):
        raise UsageError(f"outcome must be 10 or 01, got {label!r}")
    return (int(label[0]), int(label[1]))


def gain_rows(tables: dict):
    for o in OUTCOMES:
        if o not in tables:
            continue
        t = tables[o]
        for k in range(t.size):
            for l in range(t.size):
                yield [outcome_label(o), k, l, t.q[k][l]]


def write_gain_tables(path, tables: dict, comments=()) -> None:
    write_csv(path, ["outcome", "k", "l", "Q"], gain_rows(tables), comments)


def read_gain_tables(path, size: int) -> dict:
    """Gain tables from a CSV with columns (outcome,) k, l, Q.

    Without an outcome column the single table serves both outcomes.
    """
    _, header, rows = read_csv(path)
    cols = {h: i for i, h in enumerate(header)}
    for need in ("k", "l", "Q"):
        if need not in cols:
            raise UsageError(f"{path}: missing column {need!r} (need k,l,Q and optionally outcome)")
    extra = set(cols) - {"outcome", "k", "l", "Q"}
    if extra:
        raise UsageError(f"{path}: unexpected columns {sorted(extra)}")
    cells: dict = {}
    for i, r in enumerate(rows):
        try:
            o = parse_outcome(r[cols["outcome"]]) if "outcome" in cols else None
            k, l = int(r[cols["k"]]), int(r[cols["l"]])
            q = float(r[cols["Q"]])
        except ValueError as e:
            raise UsageError(f"{path}: row {i + 1}: {e}") from None
        if not (0 <= k < size and 0 <= l < size):
            raise UsageError(f"{path}: row {i + 1}: index ({k},{l}) outside a {size}x{size} table")
        if not 0.0 <= q <= 1.0:
            raise UsageError(f"{path}: row {i + 1}: gain {q} outside [0,1]")
        key = (o, k, l)
        if key in cells:
            raise UsageError(f"{path}: duplicate entry for outcome {o}, ({k},{l})")
        cells[key] = q
    outcomes = sorted({o for o, _, _ in cells}, key=lambda o: (o is None, o))
    if not outcomes:
        raise UsageError(f"{path}: no gain rows")
    tables = {}
    for o in outcomes:
        missing = [(k, l) for k in range(size) for l in range(size) if (o, k, l) not in cells]
        if missing:
            raise UsageError(f"{path}: table for outcome {o} is not {size}x{size}; missing {missing[:3]}")
        q = tuple(tuple(cells[(o, k, l)] for l in range(size)) for k in range(size))
        if o is None:
            return {oo: GainTable(oo, q) for oo in OUTCOMES}
        tables[o] = GainTable(o, q)
    if set(tables) != set(OUTCOMES):
        raise UsageError(f"{path}: need tables for both outcomes 10 and 01, or no outcome column")
    return tables
