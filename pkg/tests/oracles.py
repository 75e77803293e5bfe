"""Slow, direct reference implementations used to check the package.

Nothing here imports package internals beyond plain data types; each oracle
is a straightforward loop over the definition it checks.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

SQRT2 = math.sqrt(2.0)
NEIGHBOURS = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
              (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2)]


def dijkstra(cost: np.ndarray, start: tuple[int, int], goal: tuple[int, int]) -> float:
    """Shortest (col, row) path cost, edge = step * (1 + mean endpoint cost); inf cells blocked."""
    h, w = cost.shape
    if not (np.isfinite(cost[start[1], start[0]]) and np.isfinite(cost[goal[1], goal[0]])):
        return math.inf
    dist = {start: 0.0}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == goal:
            return d
        cu = cost[u[1], u[0]]
        for dc, dr, step in NEIGHBOURS:
            v = (u[0] + dc, u[1] + dr)
            if not (0 <= v[0] < w and 0 <= v[1] < h):
                continue
            cv = cost[v[1], v[0]]
            if not math.isfinite(cv):
                continue
            nd = d + step * (1.0 + (cu + cv) / 2.0)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return math.inf


def dijkstra_all(cost: np.ndarray, source: tuple[int, int]) -> np.ndarray:
    """Cost-to-come from ``source`` to every cell (symmetric weights, so also cost-to-go)."""
    h, w = cost.shape
    out = np.full((h, w), math.inf)
    out[source[1], source[0]] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > out[u[1], u[0]]:
            continue
        cu = cost[u[1], u[0]]
        for dc, dr, step in NEIGHBOURS:
            v = (u[0] + dc, u[1] + dr)
            if not (0 <= v[0] < w and 0 <= v[1] < h) or not math.isfinite(cost[v[1], v[0]]):
                continue
            nd = d + step * (1.0 + (cu + cost[v[1], v[0]]) / 2.0)
            if nd < out[v[1], v[0]]:
                out[v[1], v[0]] = nd
                heapq.heappush(heap, (nd, v))
    return out


def groupby_ingest(points: np.ndarray, robot_xy: tuple[float, float], size: int, res: float,
                   radius: float) -> dict[tuple[int, int], tuple[float, float]]:
    """(col, row) -> (max z, min z) over points strictly inside ``radius`` of the robot."""
    cells: dict[tuple[int, int], list[float]] = {}
    for x, y, z in points:
        if math.hypot(x - robot_xy[0], y - robot_xy[1]) >= radius:
            continue
        key = (math.floor(x / res) % size, math.floor(y / res) % size)
        cells.setdefault(key, []).append(z)
    return {k: (max(v), min(v)) for k, v in cells.items()}


def fuse_dense(heights: list[np.ndarray], certs: list[np.ndarray], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Weighted average per cell; lists ordered newest first, weights (n - i) / n."""
    h, w = heights[0].shape
    H = np.full((h, w), math.nan)
    C = np.zeros((h, w))
    total = sum((n - i) / n for i in range(n))
    for r in range(h):
        for c in range(w):
            num = den = 0.0
            for i in range(len(heights)):
                f = (n - i) / n
                if certs[i][r, c] > 0:
                    num += heights[i][r, c] * certs[i][r, c] * f
                    den += certs[i][r, c] * f
            if den > 0:
                H[r, c] = num / den
            C[r, c] = den / total
    return H, C


def fill_dense(height: np.ndarray, cert: np.ndarray, kernel2d: np.ndarray,
               exclude: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Normalized convolution at unknown cells only, zero padding outside the array."""
    h, w = height.shape
    k = kernel2d.shape[0] // 2
    known = np.isfinite(height) & (cert > 0)
    src = known if exclude is None else known & ~exclude
    H = np.where(known, height, math.nan)
    C = np.where(known, cert, 0.0)
    mass = kernel2d.sum()
    for r in range(h):
        for c in range(w):
            if known[r, c]:
                continue
            num = den = 0.0
            for dr in range(-k, k + 1):
                for dc in range(-k, k + 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < h and 0 <= cc < w and src[rr, cc]:
                        kw = kernel2d[dr + k, dc + k]
                        num += kw * cert[rr, cc] * height[rr, cc]
                        den += kw * cert[rr, cc]
            if den > 0:
                H[r, c] = num / den
            C[r, c] = min(max(den / mass, 0.0), 1.0)
    return H, C


def gradient_dense(height: np.ndarray, res: float) -> np.ndarray:
    """Central differences inside, one-sided at the borders; NaN where any stencil value is NaN."""
    h, w = height.shape

    def d(vals, i, n):
        if i == 0:
            return (vals(1) - vals(0)) / res
        if i == n - 1:
            return (vals(n - 1) - vals(n - 2)) / res
        return (vals(i + 1) - vals(i - 1)) / (2 * res)

    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            gx = d(lambda j: height[r, j], c, w)
            gy = d(lambda j: height[j, c], r, h)
            out[r, c] = math.hypot(gx, gy) if np.isfinite(height[r, c]) else math.nan
    return out


def dilate_disc(lethal: np.ndarray, radius_cells: int) -> np.ndarray:
    """Minkowski sum of a boolean mask with a disc of ``radius_cells``."""
    h, w = lethal.shape
    out = np.zeros_like(lethal, dtype=bool)
    rr = radius_cells
    for r, c in zip(*np.nonzero(lethal)):
        for dr in range(-rr, rr + 1):
            for dc in range(-rr, rr + 1):
                if dr * dr + dc * dc <= rr * rr and 0 <= r + dr < h and 0 <= c + dc < w:
                    out[r + dr, c + dc] = True
    return out


def max_filter_disc(cost: np.ndarray, radius_cells: int) -> np.ndarray:
    h, w = cost.shape
    out = np.zeros_like(cost)
    rr = radius_cells
    for r in range(h):
        for c in range(w):
            best = 0.0
            for dr in range(-rr, rr + 1):
                for dc in range(-rr, rr + 1):
                    if dr * dr + dc * dc <= rr * rr and 0 <= r + dr < h and 0 <= c + dc < w:
                        best = max(best, cost[r + dr, c + dc])
            out[r, c] = best
    return out


def nearest_free(cost: np.ndarray, col: int, row: int) -> tuple[int, int]:
    """Nearest finite cell to (col, row): distance, then cost, then row-major order."""
    best = None
    h, w = cost.shape
    for r in range(h):
        for c in range(w):
            if not math.isfinite(cost[r, c]):
                continue
            key = ((c - col) ** 2 + (r - row) ** 2, cost[r, c], r * w + c)
            if best is None or key < best[0]:
                best = (key, (c, r))
    return best[1]


def euler_rollout(segments: list[tuple[float, float]], speed: float, start: tuple[float, float, float],
                  dt: float = 1e-4) -> tuple[float, float, float]:
    """Forward-Euler unicycle integration over (yaw rate, duration) segments."""
    x, y, th = start
    for w, dur in segments:
        steps = int(round(dur / dt))
        for _ in range(steps):
            x += speed * math.cos(th) * dt
            y += speed * math.sin(th) * dt
            th += w * dt
    return x, y, th


def sampled_cells(points: np.ndarray, origin: tuple[float, float], res: float,
                  step: float = 1e-3) -> set[tuple[int, int]]:
    """Cells whose interior a polyline visits, by dense sampling along each segment."""
    cells = set()
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        n = max(1, int(math.hypot(x1 - x0, y1 - y0) / step))
        for k in range(n + 1):
            t = k / n
            x = x0 + t * (x1 - x0)
            y = y0 + t * (y1 - y0)
            cells.add((math.floor((x - origin[0]) / res), math.floor((y - origin[1]) / res)))
    return cells


def cell_segment_distance(col: int, row: int, origin: tuple[float, float], res: float,
                          a: tuple[float, float], b: tuple[float, float]) -> float:
    """Distance between a closed cell square and a segment (0 when they touch)."""
    x0, y0 = origin[0] + col * res, origin[1] + row * res
    best = math.inf
    for k in range(2001):
        t = k / 2000
        px = a[0] + t * (b[0] - a[0])
        py = a[1] + t * (b[1] - a[1])
        dx = max(x0 - px, 0.0, px - (x0 + res))
        dy = max(y0 - py, 0.0, py - (y0 + res))
        best = min(best, math.hypot(dx, dy))
    return best


def random_cost_field(rng: np.random.Generator, size: int) -> np.ndarray:
    """Smooth non-negative costs plus scattered inf obstacles (density up to 0.3)."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    field = np.zeros((size, size))
    for _ in range(4):
        fx, fy, ph = rng.uniform(0.5, 4), rng.uniform(0.5, 4), rng.uniform(0, 2 * math.pi)
        field += np.sin(2 * math.pi * (fx * xx + fy * yy) + ph)
    field = (field - field.min()) * rng.uniform(0, 3) / max(np.ptp(field), 1e-12)
    field[rng.random((size, size)) < rng.uniform(0, 0.3)] = math.inf
    return field
