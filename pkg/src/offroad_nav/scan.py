"""Per-scan height, certainty and obstacle layers from a registered point cloud."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .grid import GridSpec, Pose2D, RoiTracker, WrapGrid, world_to_cells

DEFAULT_OBSTACLE_THRESHOLD = 0.5


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3) world frame, meters
    stamp: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.points = pts[np.all(np.isfinite(pts), axis=1)]

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class ScanLayerSet:
    max_height: WrapGrid
    min_height: WrapGrid
    certainty: WrapGrid
    obstacle: WrapGrid
    stamp: float = 0.0

    @property
    def spec(self) -> GridSpec:
        return self.max_height.spec

    @classmethod
    def empty(cls, spec: GridSpec, stamp: float = 0.0) -> ScanLayerSet:
        return cls(
            max_height=WrapGrid(spec, -math.inf),
            min_height=WrapGrid(spec, math.inf),
            certainty=WrapGrid(spec, 0.0),
            obstacle=WrapGrid(spec, 0.0),
            stamp=stamp,
        )

    def grids(self) -> list[WrapGrid]:
        return [self.max_height, self.min_height, self.certainty, self.obstacle]


def ingest_scan(cloud: PointCloud, robot: Pose2D, spec: GridSpec, roi: RoiTracker) -> ScanLayerSet:
    """Bin in-ROI points into max/min height and certainty layers.

    A point is used when its planar distance to the robot is strictly less
    than the ROI half extent.  The obstacle layer is left empty; see
    ``mark_obstacles``.
    """
    layers = ScanLayerSet.empty(spec, cloud.stamp)
    pts = cloud.points
    if len(pts) == 0:
        return layers
    d2 = (pts[:, 0] - robot.x) ** 2 + (pts[:, 1] - robot.y) ** 2
    pts = pts[d2 < roi.roi_half_extent ** 2]
    if len(pts) == 0:
        return layers
    cols, rows = world_to_cells(pts, spec)
    flat = rows * spec.size + cols
    z = pts[:, 2]
    np.maximum.at(layers.max_height.cells.reshape(-1), flat, z)
    np.minimum.at(layers.min_height.cells.reshape(-1), flat, z)
    layers.certainty.cells.reshape(-1)[flat] = 1.0
    return layers


def mark_obstacles(layers: ScanLayerSet, threshold: float = DEFAULT_OBSTACLE_THRESHOLD) -> ScanLayerSet:
    """Flag cells whose height spread exceeds ``threshold`` (strictly)."""
    if not threshold >= 0:
        raise InvalidInputError(f"obstacle threshold must be non-negative, got {threshold!r}")
    seen = layers.certainty.cells > 0
    spread = np.where(seen, layers.max_height.cells - layers.min_height.cells, 0.0)
    obstacle = WrapGrid(layers.spec, 0.0, (seen & (spread > threshold)).astype(float))
    return replace(layers, obstacle=obstacle)


def read_cloud_csv(path: str | Path, stamp: float = 0.0) -> PointCloud:
    """Load ``x,y,z`` lines (meters, world frame). Lines starting with ``#`` are skipped."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise InvalidInputError(f"{path}:{lineno}: expected 'x,y,z', got {line!r}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
    return PointCloud(np.array(rows, dtype=float).reshape(-1, 3), stamp)


def write_cloud_csv(path: str | Path, cloud: PointCloud) -> None:
    np.savetxt(path, cloud.points, fmt="%.17g", delimiter=",")


def read_pose_csv(path: str | Path) -> list[tuple[float, Pose2D]]:
    """Load ``stamp,x,y,heading`` lines, one pose per recorded cloud."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise InvalidInputError(f"{path}:{lineno}: expected 'stamp,x,y,heading'")
            try:
                t, x, y, h = (float(v) for v in parts)
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from None
            out.append((t, Pose2D(x, y, h)))
    return out
