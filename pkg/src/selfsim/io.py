"""CSV and JSON exports.

CSV files start with ``# key=value`` metadata lines, then a header row, then
rows written with 17 significant digits so every float survives a round
trip.  Metadata floats use the shortest exact form.  Nothing time dependent
is written unless a timestamp is requested.
"""

from __future__ import annotations

import io as _io
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Mapping

import numpy as np

from . import __version__
from .affine import ChainParams

FLOAT_FORMAT = "{:.17g}"


def _fmt(value, short: bool = False) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v) if short else FLOAT_FORMAT.format(v)
    return str(value)


def base_meta(params: ChainParams | None = None, timestamp: bool = False, **extra) -> dict:
    """Metadata every export carries: library version, parameters and extras."""
    meta = {"version": __version__}
    if params is not None:
        meta.update({"N": params.N, "delta": params.delta, "h": params.h})
    meta.update(extra)
    if timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def csv_text(columns: Mapping[str, np.ndarray], meta: Mapping | None = None) -> str:
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[k])) for k in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"columns differ in length: {sorted(lengths)}")
    buf = _io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={_fmt(value, short=True)}\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*arrays):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(target, columns: Mapping[str, np.ndarray], meta: Mapping | None = None) -> None:
    """Write columns to a path or an open text stream."""
    text = csv_text(columns, meta)
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def _parse_meta(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    if value in ("true", "false"):
        return value == "true"
    return value


def read_csv(source) -> tuple[dict, dict]:
    """Inverse of :func:`write_csv`: ``(meta, columns)``."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    meta, rows, header = {}, [], None
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = _parse_meta(value)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError("no header row found")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return meta, {name: data[:, i] for i, name in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(record: Mapping) -> str:
    return json.dumps(_jsonable(record), indent=1, sort_keys=True) + "\n"


def write_json(target, record: Mapping) -> None:
    text = json_text(record)
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def read_json(source) -> dict:
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    return json.loads(text)


def params_from_record(record: Mapping) -> ChainParams:
    p = record.get("params", record)
    return ChainParams(float(p["N"]), float(p["delta"]), float(p.get("h", 1.0)))


def emit(target: str | IO | None, fmt: str, columns: Mapping, meta: Mapping, extra: Mapping | None = None):
    """Write ``columns`` as CSV, or a JSON record holding meta, columns and extras."""
    if fmt == "csv":
        text = csv_text(columns, meta)
    elif fmt == "json":
        text = json_text({"meta": dict(meta), "columns": dict(columns), **(extra or {})})
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)
    return text
