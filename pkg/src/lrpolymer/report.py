"""Report serialization: 17-significant-digit JSON, CSV rows and atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import jsonschema
import numpy as np

CSV_COLUMNS = ("N", "check", "estimate", "stderr", "oracle", "z", "pass")

_NUM = {"type": ["number", "null"]}

RECORD_SCHEMA = {
    "type": "object",
    "required": ["N", "check", "estimate", "stderr", "oracle", "z", "pass"],
    "properties": {
        "N": {"type": "integer", "minimum": 1},
        "check": {"type": "string"},
        "estimate": _NUM,
        "stderr": _NUM,
        "oracle": _NUM,
        "z": _NUM,
        "pass": {"type": "boolean"},
        "detail": {"type": "object"},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "config", "environment", "records", "trends", "passed"],
    "properties": {
        "kind": {"type": "string"},
        "config": {"type": "object"},
        "environment": {
            "type": "object",
            "required": ["seed", "versions"],
            "properties": {"seed": {"type": "integer"}, "versions": {"type": "object"}},
        },
        "oracle": {"type": "object"},
        "records": {"type": "array", "items": RECORD_SCHEMA},
        "trends": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["errors", "pass"],
                "properties": {"errors": {"type": "array", "items": _NUM}, "pass": {"type": "boolean"}},
            },
        },
        "diagnostics": {"type": "object"},
        "passed": {"type": "boolean"},
        "runtime": {"type": "object"},
    },
}


def format_float(x: float) -> str:
    """17 significant digits, which round-trips every double exactly."""
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int, level: int, out: list) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}{json.dumps(str(k))}: ")
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(seq):
            out.append(pad)
            _encode(v, indent, level + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out: list[str] = []
    _encode(obj, indent, 0, out)
    return "".join(out) + "\n"


def payload(report: dict) -> str:
    """Serialized report without the wall-time block (the reproducible part)."""
    return dumps({k: v for k, v in report.items() if k != "runtime"})


def validate(report: dict) -> None:
    jsonschema.validate(json.loads(dumps(report)), REPORT_SCHEMA)


def atomic_write(path: str, data: str | bytes) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def csv_text(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report["records"]:
        row = []
        for c in CSV_COLUMNS:
            v = r[c]
            if isinstance(v, bool):
                row.append("true" if v else "false")
            elif isinstance(v, float):
                row.append(format_float(v) if math.isfinite(v) else "nan")
            else:
                row.append(v)
        w.writerow(row)
    return buf.getvalue()


def emit_report(report: dict, out_dir: str, formats=("json", "csv")) -> dict:
    """Validate and write ``report.json`` / ``report.csv``; returns the paths written."""
    validate(report)
    paths = {}
    if "json" in formats:
        paths["json"] = os.path.join(out_dir, "report.json")
        atomic_write(paths["json"], dumps(report))
    if "csv" in formats:
        paths["csv"] = os.path.join(out_dir, "report.csv")
        atomic_write(paths["csv"], csv_text(report))
    return paths


def load_report(path: str) -> dict:
    try:
        with open(path) as fh:
            rep = json.load(fh)
    except OSError as exc:
        raise OSError(f"could not read {path}: {exc}") from exc
    jsonschema.validate(rep, REPORT_SCHEMA)
    return rep
