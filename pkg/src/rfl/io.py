"""CSV + JSON sidecar serialization for fields and metrics.

A field ``foo.csv`` has header ``index,x,value`` (1-D) or
``index,jndex,x,y,value`` (2-D); the sidecar ``foo.json`` carries the grid
(``n, l`` or ``nx, ny, lx, ly``) and a name.  Floats are written with 17
significant digits so the round trip is lossless.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import ConformalMetric, SphereMetric
from .gridcore import Grid1D, Grid2D, ScalarField

FMT = "{:.17g}"


def fmt(x) -> str:
    return FMT.format(float(x))


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def grid_meta(grid) -> dict:
    if isinstance(grid, Grid1D):
        return {"n": grid.n, "l": grid.length}
    return {"nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly}


def grid_from_meta(meta: dict):
    if "n" in meta:
        return Grid1D(int(meta["n"]), float(meta["l"]))
    return Grid2D(int(meta["nx"]), int(meta["ny"]), float(meta["lx"]), float(meta["ly"]))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_field(path, fld: ScalarField, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    g = fld.grid
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if isinstance(g, Grid1D):
            w.writerow(["index", "x", "value"])
            for i, (x, v) in enumerate(zip(g.x, fld.values)):
                w.writerow([i, fmt(x), fmt(v)])
        else:
            w.writerow(["index", "jndex", "x", "y", "value"])
            for i in range(g.nx):
                for j in range(g.ny):
                    w.writerow([i, j, fmt(i * g.hx), fmt(j * g.hy), fmt(fld.values[i, j])])
    meta = grid_meta(g)
    meta["name"] = fld.name
    if extra:
        meta.update(extra)
    write_json(sidecar_path(path), meta)
    return path


def load_field(path) -> tuple[ScalarField, dict]:
    """Read a field written by :func:`save_field`; returns ``(field, sidecar)``."""
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    grid = grid_from_meta(meta)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    values = np.empty(grid.shape)
    if isinstance(grid, Grid1D):
        if header != ["index", "x", "value"]:
            raise ValueError(f"unexpected header {header}")
        for r in body:
            values[int(r[0])] = float(r[2])
    else:
        if header != ["index", "jndex", "x", "y", "value"]:
            raise ValueError(f"unexpected header {header}")
        for r in body:
            values[int(r[0]), int(r[1])] = float(r[4])
    if len(body) != values.size:
        raise ValueError(f"{path}: expected {values.size} rows, got {len(body)}")
    return ScalarField(grid, values, meta.get("name", "")), meta


def write_table(path, columns: dict) -> Path:
    """Write equally long numeric columns as CSV with 17-digit floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path) -> dict:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}


def save_metric(path, metric) -> Path:
    """Conformal metrics store their ``u`` field; spheres only a sidecar."""
    path = Path(path)
    if isinstance(metric, ConformalMetric):
        return save_field(path, metric.u.with_values(metric.u.values, "u"), {"kind": "conformal2d"})
    path.parent.mkdir(parents=True, exist_ok=True)
    write_json(sidecar_path(path), {"kind": "sphere", "r": metric.radius})
    return path


def load_metric(path):
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    if meta.get("kind") == "sphere":
        return SphereMetric(float(meta["r"]))
    u, _ = load_field(path)
    return ConformalMetric(u.grid, u)
