"""Reading and writing the JSON and CSV file formats.

Function files are JSON objects.  A ``kind`` field selects the type when
present; otherwise the type is inferred from the fields (``cells`` for
samples, ``vertices`` for polygons, ``breakpoints`` for step functions).
Step functions are written as CSV with a ``# {json}`` header line carrying
the monotonicity tag and the tail value, followed by ``s,value,end`` rows.
The last row holds only the final breakpoint.  Every float is written with
``repr`` so the round trip is exact.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from bvsym.bvcalc import BVFunction1D, RadialBVFunction
from bvsym.geometry import BallSpec, Polygon
from bvsym.rearrange import NONE, MeasuredSample, StepFunction


class FormatError(ValueError):
    """Malformed input; the message names the file, field or line."""


def _num(x: float) -> str:
    return repr(float(x))


def _field(data: dict, key: str, where: str) -> Any:
    if not isinstance(data, dict):
        raise FormatError(f"{where}: expected a JSON object")
    if key not in data:
        raise FormatError(f"{where}: missing field '{key}'")
    return data[key]


def _real(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise FormatError(f"{where}: number must be finite")
    return float(value)


def _reals(value: Any, where: str) -> np.ndarray:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected a list of numbers")
    return np.array([_real(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=float)


def _pairs_of(value: Any, where: str, keys: tuple[str, str]) -> list[tuple[float, float]]:
    if not isinstance(value, list):
        raise FormatError(f"{where}: expected a list of objects")
    out = []
    for i, item in enumerate(value):
        here = f"{where}[{i}]"
        out.append(tuple(_real(_field(item, k, here), f"{here}.{k}") for k in keys))
    return out


def _build(cls, where: str, *args, **kwargs):
    try:
        return cls(*args, **kwargs)
    except FormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


# -- JSON -----------------------------------------------------------------


def function_from_json(data: Any, where: str = "input"):
    """Object described by a parsed JSON document."""
    if not isinstance(data, dict):
        raise FormatError(f"{where}: expected a JSON object at top level")
    kind = data.get("kind")
    if kind is None:
        if "cells" in data:
            kind = "samples"
        elif "vertices" in data:
            kind = "polygon"
        elif "breakpoints" in data:
            kind = "step"
        elif "ac_density" in data:
            kind = "bv1d"
        elif "profile" in data:
            kind = "radial"
        elif "n" in data and "R" in data:
            kind = "ball"
        else:
            raise FormatError(f"{where}: cannot tell the object type; add a 'kind' field")
    if kind == "bv1d":
        dom = _reals(_field(data, "domain", where), f"{where}.domain")
        if len(dom) != 2:
            raise FormatError(f"{where}.domain: expected [a, b]")
        dens = _reals(_field(data, "ac_density", where), f"{where}.ac_density")
        atoms = _pairs_of(data.get("atoms", []), f"{where}.atoms", ("x", "h"))
        return _build(BVFunction1D, where, tuple(dom), dens, tuple(atoms))
    if kind == "radial":
        n = _field(data, "n", where)
        if isinstance(n, bool) or not isinstance(n, int):
            raise FormatError(f"{where}.n: expected an integer dimension")
        R = _real(_field(data, "R", where), f"{where}.R")
        prof = _reals(_field(data, "profile", where), f"{where}.profile")
        nodes = data.get("nodes")
        nodes = None if nodes is None else _reals(nodes, f"{where}.nodes")
        atoms = _pairs_of(data.get("radial_atoms", []), f"{where}.radial_atoms", ("rho", "h"))
        return _build(RadialBVFunction, where, n, R, prof, tuple(atoms), nodes)
    if kind == "samples":
        cells = _pairs_of(_field(data, "cells", where), f"{where}.cells", ("value", "measure"))
        if not cells:
            raise FormatError(f"{where}.cells: sample set is empty")
        return [_build(MeasuredSample, f"{where}.cells[{i}]", v, m) for i, (v, m) in enumerate(cells)]
    if kind == "polygon":
        verts = _field(data, "vertices", where)
        if not isinstance(verts, list):
            raise FormatError(f"{where}.vertices: expected a list of [x, y] pairs")
        pts = []
        for i, p in enumerate(verts):
            if not isinstance(p, list) or len(p) != 2:
                raise FormatError(f"{where}.vertices[{i}]: expected [x, y]")
            pts.append([_real(p[0], f"{where}.vertices[{i}][0]"), _real(p[1], f"{where}.vertices[{i}][1]")])
        return _build(Polygon, where, pts)
    if kind == "ball":
        n = _field(data, "n", where)
        if isinstance(n, bool) or not isinstance(n, int):
            raise FormatError(f"{where}.n: expected an integer dimension")
        return _build(BallSpec, where, n, _real(_field(data, "R", where), f"{where}.R"))
    if kind == "step":
        b = _reals(_field(data, "breakpoints", where), f"{where}.breakpoints")
        v = _reals(_field(data, "values", where), f"{where}.values")
        ends = data.get("ends")
        ends = None if ends is None else _reals(ends, f"{where}.ends")
        tail = _real(data.get("tail", 0.0), f"{where}.tail")
        return _build(StepFunction, where, b, v, data.get("monotone", NONE), ends, tail)
    raise FormatError(f"{where}.kind: unknown kind {kind!r}")


def to_json(obj) -> dict:
    """JSON-ready dict for any object :func:`function_from_json` reads."""
    if isinstance(obj, list) and all(isinstance(c, MeasuredSample) for c in obj):
        return {"kind": "samples", "cells": [{"value": c.value, "measure": c.cell_measure} for c in obj]}
    if isinstance(obj, StepFunction):
        return {"kind": "step", **obj.to_json()}
    if isinstance(obj, Polygon):
        return {"kind": "polygon", **obj.to_json()}
    if isinstance(obj, BallSpec):
        return {"kind": "ball", **obj.to_json()}
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=1, allow_nan=False) + "\n"


def load_json(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return function_from_json(data, str(path))


def write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"{path}: cannot write ({exc.strerror})") from exc


# -- CSV ------------------------------------------------------------------


def step_to_csv(f: StepFunction, header: dict | None = None) -> str:
    """Lossless CSV rendering of a step function."""
    head = {"monotone": f.monotone, "tail": float(f.tail), "linear": f.ends is not None}
    if header:
        head.update(header)
    buf = io.StringIO()
    buf.write("# " + json.dumps(head, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["s", "value", "end"])
    ends = f.values if f.ends is None else f.ends
    for s, v, e in zip(f.breakpoints[:-1], f.values, ends):
        w.writerow([_num(s), _num(v), _num(e)])
    if len(f.breakpoints):
        w.writerow([_num(f.breakpoints[-1]), "", ""])
    return buf.getvalue()


def step_from_csv(text: str, where: str = "csv") -> tuple[StepFunction, dict]:
    """Inverse of :func:`step_to_csv`; also returns the header."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{where}:1: expected a '# {{json}}' header line")
    try:
        head = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{where}:1: header is not valid JSON ({exc.msg})") from exc
    if not isinstance(head, dict):
        raise FormatError(f"{where}:1: header must be a JSON object")
    rows = list(csv.reader(lines[1:]))
    if not rows or [c.strip() for c in rows[0]] != ["s", "value", "end"]:
        raise FormatError(f"{where}:2: expected column header 's,value,end'")
    s, v, e = [], [], []
    body = rows[1:]
    for k, row in enumerate(body):
        lineno = k + 3
        last = k == len(body) - 1
        if len(row) != 3:
            raise FormatError(f"{where}:{lineno}: expected 3 columns, got {len(row)}")
        try:
            s.append(float(row[0]))
            if last:
                if row[1] or row[2]:
                    raise FormatError(f"{where}:{lineno}: the final row holds only the last breakpoint")
            else:
                v.append(float(row[1]))
                e.append(float(row[2]))
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{where}:{lineno}: not a number ({exc})") from exc
    if not s:
        raise FormatError(f"{where}: no data rows")
    try:
        tail = float(head.get("tail", 0.0))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}:1: field 'tail' is not a number") from exc
    ends = np.array(e) if head.get("linear", True) else None
    f = _build(StepFunction, where, np.array(s), np.array(v), head.get("monotone", NONE), ends, tail)
    return f, head


def load_step_csv(path: str | Path) -> tuple[StepFunction, dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    return step_from_csv(text, str(path))


def curves_to_csv(columns: dict[str, np.ndarray]) -> str:
    """Plot data: one column per named curve, rows aligned."""
    names = list(columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*(np.asarray(columns[k], dtype=float) for k in names)):
        w.writerow([_num(x) for x in row])
    return buf.getvalue()
