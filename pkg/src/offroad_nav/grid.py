"""Wrapping grid storage.

The map memory stays put while the vehicle moves across it: a world point
lands in cell ``floor(x / resolution) mod size``.  Because that mapping is
many-to-one, only a square region of interest (ROI) around the vehicle holds
valid data.  Every time the vehicle moves, the strips of cells that fall out
of the ROI are reset to each layer's fill value, so all live layers agree on
which world cell a memory cell refers to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidInputError, RoiOverrunError, SpecMismatchError


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]; angles already in range are returned unchanged."""
    if -math.pi < a <= math.pi:
        return a
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))

    def distance_to(self, other: Pose2D) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.heading)


@dataclass(frozen=True)
class GridSpec:
    size: int = 512
    resolution: float = 0.2

    def __post_init__(self):
        if int(self.size) != self.size or self.size <= 0:
            raise InvalidInputError(f"grid size must be a positive integer, got {self.size!r}")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise InvalidInputError(f"grid resolution must be positive, got {self.resolution!r}")

    @property
    def extent(self) -> float:
        return self.size * self.resolution

    def global_index(self, v: float) -> int:
        """Unwrapped cell index of a world coordinate."""
        return math.floor(v / self.resolution)


def world_to_cell(p: tuple[float, float], spec: GridSpec) -> tuple[int, int]:
    """Return the (col, row) memory cell holding world point ``p``."""
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidInputError(f"non-finite coordinate ({x}, {y})")
    return (spec.global_index(x) % spec.size, spec.global_index(y) % spec.size)


def world_to_cells(xy: np.ndarray, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``world_to_cell`` over an (N, 2+) array; returns (cols, rows)."""
    xy = np.asarray(xy, dtype=float)
    if not np.all(np.isfinite(xy[:, :2])):
        raise InvalidInputError("non-finite coordinate in point array")
    cols = np.floor(xy[:, 0] / spec.resolution).astype(np.int64) % spec.size
    rows = np.floor(xy[:, 1] / spec.resolution).astype(np.int64) % spec.size
    return cols, rows


@dataclass
class WrapGrid:
    spec: GridSpec
    fill_value: float = 0.0
    cells: np.ndarray = None

    def __post_init__(self):
        n = self.spec.size
        if self.cells is None:
            self.cells = np.full((n, n), self.fill_value, dtype=float)
        elif self.cells.shape != (n, n):
            raise SpecMismatchError(f"cells shape {self.cells.shape} does not match size {n}")

    def get(self, x: float, y: float) -> float:
        c, r = world_to_cell((x, y), self.spec)
        return float(self.cells[r, c])

    def set(self, x: float, y: float, value: float) -> None:
        c, r = world_to_cell((x, y), self.spec)
        self.cells[r, c] = value

    def reset(self) -> None:
        self.cells.fill(self.fill_value)

    def copy(self) -> WrapGrid:
        return WrapGrid(self.spec, self.fill_value, self.cells.copy())


@dataclass
class RoiTracker:
    """Square ROI of half-side ``roi_half_extent`` following the vehicle.

    ``margin`` bounds how far the vehicle may travel between two updates
    (max speed divided by map update rate).
    """

    spec: GridSpec
    roi_half_extent: float = 40.0
    margin: float = 0.45
    last_pose: Pose2D = field(default_factory=Pose2D)

    def __post_init__(self):
        if self.roi_half_extent <= 0 or self.margin < 0:
            raise InvalidInputError("ROI half extent must be positive and margin non-negative")
        if 2 * self.roi_half_extent + self.margin > self.spec.extent:
            raise InvalidInputError(
                f"ROI side {2 * self.roi_half_extent} m plus margin {self.margin} m "
                f"exceeds map extent {self.spec.extent} m"
            )
        if 2 * self.half_cells + 1 > self.spec.size:
            raise InvalidInputError("ROI window does not fit inside the grid")

    @property
    def half_cells(self) -> int:
        """ROI half-width in cells; every point closer than the half extent falls inside."""
        return math.ceil(self.roi_half_extent / self.spec.resolution - 1e-9)

    def window(self, pose: Pose2D) -> tuple[int, int, int, int]:
        """Inclusive global cell bounds (col_lo, col_hi, row_lo, row_hi) of the ROI at ``pose``."""
        h = self.half_cells
        gx = self.spec.global_index(pose.x)
        gy = self.spec.global_index(pose.y)
        return gx - h, gx + h, gy - h, gy + h

    def contains(self, pose: Pose2D, x: float, y: float) -> bool:
        c0, c1, r0, r1 = self.window(pose)
        gx = self.spec.global_index(x)
        gy = self.spec.global_index(y)
        return c0 <= gx <= c1 and r0 <= gy <= r1

    def advance(self, grids: Iterable[WrapGrid], new_pose: Pose2D) -> int:
        n = roi_advance(grids, self.last_pose, new_pose, self)
        self.last_pose = new_pose
        return n


def _leaving(old_lo: int, old_hi: int, new_lo: int, new_hi: int) -> range:
    # global indices in the old window but not in the new one
    if new_lo > old_lo:
        return range(old_lo, min(old_hi, new_lo - 1) + 1)
    if new_hi < old_hi:
        return range(max(old_lo, new_hi + 1), old_hi + 1)
    return range(0)


def roi_advance(grids: Iterable[WrapGrid], old_pose: Pose2D, new_pose: Pose2D,
                tracker: RoiTracker) -> int:
    """Clear every cell that left the ROI when moving ``old_pose`` -> ``new_pose``.

    Cells outside the old ROI are already at their fill value, so only the
    row and column strips leaving the window need touching.  Returns the
    number of distinct memory cells cleared (per grid).
    """
    step = old_pose.distance_to(new_pose)
    if step > tracker.margin + 1e-9:
        raise RoiOverrunError(
            f"moved {step:.3f} m in one update, margin is {tracker.margin:.3f} m"
        )
    size = tracker.spec.size
    oc0, oc1, or0, or1 = tracker.window(old_pose)
    nc0, nc1, nr0, nr1 = tracker.window(new_pose)
    cols = np.array([c % size for c in _leaving(oc0, oc1, nc0, nc1)], dtype=np.int64)
    rows = np.array([r % size for r in _leaving(or0, or1, nr0, nr1)], dtype=np.int64)
    if cols.size == 0 and rows.size == 0:
        return 0
    for g in grids:
        if g.spec != tracker.spec:
            raise SpecMismatchError("grid spec differs from ROI tracker spec")
        if cols.size:
            g.cells[:, cols] = g.fill_value
        if rows.size:
            g.cells[rows, :] = g.fill_value
    return int(cols.size * size + rows.size * size - cols.size * rows.size)


class LayerRingBuffer:
    """Fixed-depth circular buffer of per-scan layer sets.

    Index 0 is the most recent entry and ``len(buf) - 1`` the oldest.
    """

    def __init__(self, depth: int, spec: GridSpec):
        if depth < 1:
            raise InvalidInputError("buffer depth must be >= 1")
        self.n = int(depth)
        self.spec = spec
        self.slots: list = [None] * self.n
        self.head = -1
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def push(self, layers) -> LayerRingBuffer:
        if layers.spec != self.spec:
            raise SpecMismatchError("layer set spec does not match buffer spec")
        self.head = (self.head + 1) % self.n
        self.slots[self.head] = layers
        self._count = min(self._count + 1, self.n)
        return self

    def __getitem__(self, i: int):
        if not 0 <= i < self._count:
            raise IndexError(f"buffer index {i} out of range (occupancy {self._count})")
        return self.slots[(self.head - i) % self.n]

    def __iter__(self) -> Iterator:
        for i in range(self._count):
            yield self[i]

    def grids(self) -> list[WrapGrid]:
        """All live grids, for ROI clearing."""
        out = []
        for layers in self:
            out.extend(layers.grids())
        return out


def buffer_push(buf: LayerRingBuffer, layers) -> LayerRingBuffer:
    return buf.push(layers)
