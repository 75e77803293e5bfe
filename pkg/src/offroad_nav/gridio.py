"""Plain-text grid dumps and path CSVs.

A grid dump is a short header followed by the cells in row-major order, one
grid row per line, row 0 (lowest y) first::

    # offroad_nav grid 1
    layer height
    size 512 512
    resolution 0.2
    origin -51.2 -51.2 0
    stamp 3.5
    data
    0 0.01 nan ...

Values are written with 17 significant digits so every float, including
``nan`` and ``inf``, re-parses to the identical value.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .grid import Pose2D

MAGIC = "# offroad_nav grid 1"


@dataclass
class GridDump:
    layer: str
    values: np.ndarray  # [row, col]
    resolution: float
    origin: Pose2D
    stamp: float = 0.0


def format_grid(dump: GridDump) -> str:
    v = np.asarray(dump.values, dtype=float)
    if v.ndim != 2:
        raise InvalidInputError("grid dump needs a 2D array")
    if not dump.layer or any(ch.isspace() for ch in dump.layer):
        raise InvalidInputError(f"layer name must be a single word, got {dump.layer!r}")
    o = dump.origin
    buf = io.StringIO()
    buf.write(f"{MAGIC}\nlayer {dump.layer}\nsize {v.shape[0]} {v.shape[1]}\n")
    buf.write(f"resolution {dump.resolution!r}\norigin {o.x!r} {o.y!r} {o.heading!r}\n")
    buf.write(f"stamp {float(dump.stamp)!r}\ndata\n")
    np.savetxt(buf, v, fmt="%.17g")
    return buf.getvalue()


def parse_grid(text: str) -> GridDump:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise InvalidInputError("not a grid dump (missing header line)")
    header: dict[str, list[str]] = {}
    i = 1
    while i < len(lines) and lines[i].strip() != "data":
        parts = lines[i].split()
        if parts:
            header[parts[0]] = parts[1:]
        i += 1
    missing = {"layer", "size", "resolution", "origin"} - set(header)
    if missing or i == len(lines):
        raise InvalidInputError(f"grid dump header incomplete (missing {sorted(missing) or ['data']})")
    rows, cols = (int(s) for s in header["size"])
    body = lines[i + 1:]
    if len(body) != rows:
        raise InvalidInputError(f"expected {rows} data rows, found {len(body)}")
    values = np.array([[float(s) for s in line.split()] for line in body], dtype=float).reshape(rows, cols) \
        if rows else np.zeros((0, cols))
    ox, oy, oh = (float(s) for s in header["origin"])
    stamp = float(header.get("stamp", ["0"])[0])
    return GridDump(header["layer"][0], values, float(header["resolution"][0]), Pose2D(ox, oy, oh), stamp)


def write_grid(path: str | Path, dump: GridDump) -> None:
    Path(path).write_text(format_grid(dump), encoding="utf-8")


def read_grid(path: str | Path) -> GridDump:
    return parse_grid(Path(path).read_text(encoding="utf-8"))


def bundle_dumps(bundle, layers: list[str] | None = None) -> list[GridDump]:
    """Grid dumps of the selected MapBundle layers (all when ``layers`` is None)."""
    available = bundle.layers()
    names = list(available) if layers is None else layers
    unknown = [n for n in names if n not in available]
    if unknown:
        raise InvalidInputError(f"unknown layer(s) {unknown}; choose from {sorted(available)}")
    res = bundle.spec.resolution
    return [GridDump(n, np.asarray(available[n], dtype=float), res, bundle.origin, bundle.stamp) for n in names]


def costmap_dump(cmap, name: str = "cost", stamp: float = 0.0) -> GridDump:
    return GridDump(name, cmap.cost, cmap.spec.resolution, cmap.origin, stamp)


def write_path_csv(path: str | Path, points: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for x, y in np.asarray(points, dtype=float)[:, :2]:
            w.writerow([repr(float(x)), repr(float(y))])


def read_path_csv(path: str | Path) -> np.ndarray:
    pts = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "x":
                continue
            x, y = float(row[0]), float(row[1])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidInputError(f"non-finite path point ({x}, {y})")
            pts.append((x, y))
    return np.array(pts, dtype=float).reshape(-1, 2)
