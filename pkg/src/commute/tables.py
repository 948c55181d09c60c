"""CSV and JSON emission with full double precision.

All numbers are written with ``%.17g`` so that a float survives a round trip
through text unchanged; complex values are split into ``re``/``im`` columns.
"""

import csv
import json
import math

FLOAT_FORMAT = "%.17g"


def fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return FLOAT_FORMAT % value


def complex_columns(name):
    return [f"re_{name}", f"im_{name}"]


def split_complex(value):
    c = complex(value)
    return [c.real, c.imag]


def write_csv(path, header, rows):
    """Write ``rows`` (iterables of numbers or strings) under ``header``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, header, rows, meta=None):
    records = [{h: _jsonable(v) for h, v in zip(header, row)} for row in rows]
    doc = {"columns": list(header), "rows": records}
    if meta:
        doc["meta"] = meta
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=False, default=str)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    v = float(v)
    if math.isfinite(v):
        return v
    return fmt(v)


def read_csv(path):
    """Read a table written by :func:`write_csv` into (header, list of float rows)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[_parse(v) for v in row] for row in r]
    return header, rows


def _parse(v):
    try:
        return float(v)
    except ValueError:
        return v
