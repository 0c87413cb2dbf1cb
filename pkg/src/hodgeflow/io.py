"""Readers and writers for the on-disk formats used by the CLI."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .complex import OrientedComplex2
from .errors import ValidationError
from .leadlag import NodeTimeSeries


def fmt(v) -> str:
    """Shortest round-trip text for a float; integers stay integers."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _open_csv(path):
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    with path.open(newline="") as fh:
        return [row for row in csv.reader(fh) if row and any(cell.strip() for cell in row)]


def _floats(rows: Sequence[Sequence[str]], path, offset: int) -> np.ndarray:
    out = []
    width = len(rows[0]) if rows else 0
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"{path}: row {r + offset + 1} has {len(row)} columns, expected {width}"
            )
        vals = []
        for col, cell in enumerate(row):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ValidationError(
                    f"{path}: row {r + offset + 1}, column {col + 1}: cannot parse {cell!r} as a number"
                ) from None
        out.append(vals)
    return np.asarray(out, dtype=float).reshape(len(rows), width)


def read_edge_list(path) -> tuple[int, list[tuple[int, int]]]:
    """``i j`` per line, ``#`` starts a comment.  Vertex count = max index + 1."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValidationError(f"{path}: line {lineno}: expected two vertex indices")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ValidationError(f"{path}: line {lineno}: vertex indices must be integers") from None
    n = 1 + max((max(p) for p in pairs), default=-1)
    return n, pairs


def read_adjacency(path, header: bool = False) -> tuple[np.ndarray, list[str] | None]:
    rows = _open_csv(path)
    if not rows:
        raise ValidationError(f"{path}: empty adjacency file")
    labels = None
    if header:
        labels = [c.strip() for c in rows[0]]
        rows = rows[1:]
    w = _floats(rows, path, 1 if header else 0)
    if w.shape[0] != w.shape[1]:
        raise ValidationError(f"{path}: adjacency has {w.shape[0]} rows and {w.shape[1]} columns")
    if labels is not None and len(labels) != w.shape[0]:
        raise ValidationError(f"{path}: header has {len(labels)} labels for {w.shape[0]} nodes")
    return w, labels


def write_adjacency(path, w, labels=None) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        if labels is not None:
            out.writerow(labels)
        for row in np.asarray(w):
            out.writerow([fmt(v) for v in row])


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(to_jsonable(obj), indent=2) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"{path}: no such file")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def save_complex(path, c: OrientedComplex2) -> None:
    write_json(path, c.to_dict())


def load_complex(path) -> OrientedComplex2:
    return OrientedComplex2.from_dict(read_json(path))


def read_node_timeseries(path, transpose: bool = False) -> NodeTimeSeries:
    """Node series CSV: header of node labels, then one row per time point.

    With ``transpose=True`` each row is a node instead: the first cell is the
    node label and the remaining cells are its samples.
    """
    rows = _open_csv(path)
    if not rows:
        raise ValidationError(f"{path}: empty time-series file")
    if transpose:
        labels = [r[0].strip() for r in rows]
        data = _floats([r[1:] for r in rows], path, 0)
    else:
        labels = [c.strip() for c in rows[0]]
        data = _floats(rows[1:], path, 1).T
        if data.shape[0] != len(labels):
            raise ValidationError(
                f"{path}: header lists {len(labels)} nodes but rows have {data.shape[0]} columns"
            )
    return NodeTimeSeries(data, tuple(labels))


def write_node_timeseries(path, data, labels: Sequence[str] | None = None) -> None:
    data = np.asarray(data)
    labels = labels or [str(k) for k in range(data.shape[0])]
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(labels)
        for row in data.T:
            out.writerow([fmt(v) for v in row])


def write_edge_series(path, c: OrientedComplex2, series) -> None:
    """Header of ``tail-tip`` labels, one row per time point."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(c.edge_labels())
        for row in series.T:
            out.writerow([fmt(v) for v in row])


def read_edge_series(path, c: OrientedComplex2) -> np.ndarray:
    """E x L array aligned to the complex's edge order (columns matched by label)."""
    rows = _open_csv(path)
    if not rows:
        raise ValidationError(f"{path}: empty edge-signal file")
    header = [h.strip() for h in rows[0]]
    if header and header[0] == "component":
        raise ValidationError(f"{path}: this is a component export, not an edge signal")
    values = _floats(rows[1:], path, 1)
    pos = {}
    for k, lab in enumerate(header):
        try:
            a, b = (int(v) for v in lab.split("-"))
        except ValueError:
            raise ValidationError(f"{path}: column {k + 1}: bad edge label {lab!r}") from None
        key = (min(a, b), max(a, b))
        pos[key] = (k, 1.0 if a < b else -1.0)
    missing = [e for e in c.edges if e not in pos]
    if missing or len(pos) != c.n_edges:
        raise ValidationError(
            f"{path}: signal has {len(pos)} edge columns, complex has {c.n_edges} edges"
            + (f" (missing {missing[0][0]}-{missing[0][1]})" if missing else "")
        )
    out = np.empty((c.n_edges, values.shape[0]))
    for k, e in enumerate(c.edges):
        col, sign = pos[e]
        out[k] = values[:, col] if sign > 0 else -values[:, col]
    return out


def write_components(path, c: OrientedComplex2, comps: Iterable[tuple[str, np.ndarray]]) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["component"] + c.edge_labels())
        for name, series in comps:
            series = np.asarray(series, dtype=float)
            if series.ndim == 1:
                series = series[:, None]
            for row in series.T:
                out.writerow([name] + [fmt(v) for v in row])


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) if isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, (bool, np.bool_)) else v for v in row])
