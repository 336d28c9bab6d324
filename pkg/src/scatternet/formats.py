"""CSV and JSON emitters for sweep records and finder reports."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math

import numpy as np

CSV_HEADER = [
    "omega", "re_t", "im_t", "re_r_left", "im_r_left", "re_r_right", "im_r_right",
    "T", "R_left", "R_right", "eig_ratio", "det_residual", "flags",
]


def fmt(x: float) -> str:
    """17 significant digits: exact binary64 round trip."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def sweep_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow([
            fmt(rec.omega),
            fmt(rec.t.real), fmt(rec.t.imag),
            fmt(rec.r_left.real), fmt(rec.r_left.imag),
            fmt(rec.r_right.real), fmt(rec.r_right.imag),
            fmt(rec.T), fmt(rec.R_left), fmt(rec.R_right),
            fmt(rec.eig_ratio), fmt(rec.det_residual),
            ";".join(rec.flags),
        ])
    return buf.getvalue()


def read_sweep_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        for key in CSV_HEADER[:-1]:
            row[key] = float(row[key])
    return rows


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        for prop in ("crossing",):
            if hasattr(type(obj), prop):
                out[prop] = getattr(obj, prop)
        return out
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(obj.real), "im": _jsonable(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # non-finite values are written as strings; JSON has no literal for them
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def reports_json(payload) -> str:
    """Deterministic JSON; floats use the shortest exact round-trip repr."""
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
