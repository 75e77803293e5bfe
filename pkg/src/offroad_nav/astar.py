"""8-connected A* over a CostMap.

Edge weight between neighbouring cells u, v:
    step * (1 + (cost[u] + cost[v]) / 2),   step in {1, sqrt(2)} cells
so the euclidean cell distance is an admissible and consistent heuristic.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .costmap import CostMap
from .errors import MapFullError, NoPathError
from .grid import Pose2D

SQRT2 = math.sqrt(2.0)

_DCOL = np.array([1, -1, 0, 0, 1, 1, -1, -1], dtype=np.int64)
_DROW = np.array([0, 0, 1, -1, 1, -1, 1, -1], dtype=np.int64)
_STEP = np.array([1.0, 1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2, SQRT2])


@dataclass(frozen=True)
class GridPath:
    cells: list[tuple[int, int]]  # (col, row)
    world_points: np.ndarray  # (N, 2) cell centers, meters
    total_cost: float

    def __len__(self) -> int:
        return len(self.cells)


def edge_weight(c_from: float, c_to: float, step: float) -> float:
    return step * (1.0 + 0.5 * (c_from + c_to))


@njit(cache=True)
def _astar(cost, start, goal, dcol, drow, dstep):
    h, w = cost.shape
    n = h * w
    g = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.bool_)
    gc = goal % w
    gr = goal // w
    g[start] = 0.0
    sc = start % w
    sr = start // w
    h0 = math.sqrt((sc - gc) ** 2 + (sr - gr) ** 2)
    heap = [(h0, h0, np.int64(0), np.int64(start))]
    counter = 1
    while len(heap) > 0:
        item = heapq.heappop(heap)
        u = item[3]
        if closed[u]:
            continue
        closed[u] = True
        if u == goal:
            return g[u], parent
        uc = u % w
        ur = u // w
        cu = cost[ur, uc]
        for k in range(8):
            vc = uc + dcol[k]
            vr = ur + drow[k]
            if vc < 0 or vc >= w or vr < 0 or vr >= h:
                continue
            cv = cost[vr, vc]
            if cv == np.inf:
                continue
            v = vr * w + vc
            if closed[v]:
                continue
            ng = g[u] + dstep[k] * (1.0 + 0.5 * (cu + cv))
            if ng < g[v]:
                g[v] = ng
                parent[v] = u
                hv = math.sqrt((vc - gc) ** 2 + (vr - gr) ** 2)
                heapq.heappush(heap, (ng + hv, hv, np.int64(counter), np.int64(v)))
                counter += 1
    return np.inf, parent


def plan(cmap: CostMap, start: tuple[int, int], goal: tuple[int, int]) -> GridPath:
    """Optimal 8-connected path from ``start`` to ``goal`` (both (col, row))."""
    h, w = cmap.shape
    for name, (c, r) in (("start", start), ("goal", goal)):
        if not cmap.in_bounds(c, r):
            raise NoPathError(f"{name} cell {(c, r)} outside the map")
    if cmap.is_lethal(*start):
        raise NoPathError(f"start cell {start} is lethal")
    if cmap.is_lethal(*goal):
        raise NoPathError(f"goal cell {goal} is lethal")
    cost = np.ascontiguousarray(cmap.cost, dtype=np.float64)
    if cmap.lethal_threshold != math.inf:
        cost = np.where(cost >= cmap.lethal_threshold, np.inf, cost)
    s = start[1] * w + start[0]
    gl = goal[1] * w + goal[0]
    total, parent = _astar(cost, s, gl, _DCOL, _DROW, _STEP)
    if not math.isfinite(total):
        raise NoPathError(f"goal {goal} unreachable from {start}")
    idx = [gl]
    while idx[-1] != s:
        idx.append(int(parent[idx[-1]]))
    idx.reverse()
    cells = [(i % w, i // w) for i in idx]
    pts = np.array([cmap.cell_to_world(c, r) for c, r in cells])
    return GridPath(cells, pts, float(total))


def clamp_goal(goal: tuple[float, float], cmap: CostMap, robot: Pose2D | None = None) -> tuple[int, int]:
    """Map a world goal to a traversable cell of ``cmap``.

    Goals outside the map are projected to the nearest in-map cell.  If that
    cell is LETHAL, the nearest non-LETHAL cell (cell-center distance, then
    lowest cost, then row-major order) is used instead.
    """
    h, w = cmap.shape
    res = cmap.spec.resolution
    gx = min(max(goal[0], cmap.origin.x), cmap.origin.x + w * res)
    gy = min(max(goal[1], cmap.origin.y), cmap.origin.y + h * res)
    col, row = cmap.world_to_cell(gx, gy)
    col = min(max(col, 0), w - 1)
    row = min(max(row, 0), h - 1)
    if not cmap.is_lethal(col, row):
        return (col, row)
    free = ~cmap.lethal_mask()
    if not free.any():
        raise MapFullError("every cell of the cost map is lethal")
    rows, cols = np.nonzero(free)  # row-major order
    d2 = (cols - col) ** 2 + (rows - row) ** 2
    order = np.lexsort((rows * w + cols, cmap.cost[rows, cols], d2))
    k = order[0]
    return (int(cols[k]), int(rows[k]))
