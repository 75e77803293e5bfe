"""Synthetic terrain and a multi-ring spinning lidar.

The ground is an analytic height field (tilted base plane plus ramps,
Gaussian bumps and rough "grass" patches).  Solid obstacles are vertical
cylinders (cones, posts) and axis-aligned boxes standing on the ground; only
these count for collisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..grid import Pose2D
from ..scan import PointCloud


@dataclass
class Ramp:
    x0: float
    y0: float
    heading: float  # direction of ascent, rad
    length: float
    rise: float


@dataclass
class Bump:
    x: float
    y: float
    amplitude: float
    sigma: float


@dataclass
class GrassPatch:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    height: float


@dataclass
class Cylinder:
    x: float
    y: float
    radius: float
    height: float


@dataclass
class Box:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    height: float


@dataclass
class TerrainSpec:
    base_z: float = 0.0
    slope_x: float = 0.0
    slope_y: float = 0.0
    ramps: list[Ramp] = field(default_factory=list)
    bumps: list[Bump] = field(default_factory=list)
    grass: list[GrassPatch] = field(default_factory=list)
    cylinders: list[Cylinder] = field(default_factory=list)
    boxes: list[Box] = field(default_factory=list)


@dataclass
class SensorSpec:
    rings: int = 32
    azimuths: int = 360
    min_elevation_deg: float = -25.0
    max_elevation_deg: float = 15.0
    max_range: float = 50.0
    mount_height: float = 1.0
    noise_std: float = 0.0

    def directions(self) -> tuple[np.ndarray, np.ndarray]:
        """Elevation and body-frame azimuth of every beam, flattened ring-major."""
        if self.rings == 0 or self.azimuths == 0:
            return np.empty(0), np.empty(0)
        el = np.radians(np.linspace(self.min_elevation_deg, self.max_elevation_deg, self.rings))
        az = np.linspace(-math.pi, math.pi, self.azimuths, endpoint=False)
        e, a = np.meshgrid(el, az, indexing="ij")
        return e.ravel(), a.ravel()


def _arr(rows, width):
    return np.array(rows, dtype=float).reshape(-1, width)


@njit(cache=True)
def _hash01(ix, iy):
    v = math.sin(ix * 12.9898 + iy * 78.233) * 43758.5453
    return v - math.floor(v)


@njit(cache=True)
def _ground(x, y, base, ramps, bumps, grass):
    z = base[0] + base[1] * x + base[2] * y
    for k in range(ramps.shape[0]):
        s = ((x - ramps[k, 0]) * ramps[k, 2] + (y - ramps[k, 1]) * ramps[k, 3]) / ramps[k, 4]
        if s > 0.0:
            z += ramps[k, 5] * (s if s < 1.0 else 1.0)
    for k in range(bumps.shape[0]):
        dx = x - bumps[k, 0]
        dy = y - bumps[k, 1]
        z += bumps[k, 2] * math.exp(-0.5 * (dx * dx + dy * dy) / (bumps[k, 3] * bumps[k, 3]))
    for k in range(grass.shape[0]):
        if grass[k, 0] <= x <= grass[k, 1] and grass[k, 2] <= y <= grass[k, 3]:
            z += grass[k, 4] * _hash01(math.floor(x * 10.0), math.floor(y * 10.0))
    return z


@njit(cache=True)
def _ground_many(xs, ys, base, ramps, bumps, grass):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = _ground(xs[i], ys[i], base, ramps, bumps, grass)
    return out


@njit(cache=True)
def _ray_cylinder(ox, oy, oz, dx, dy, dz, cyl, tmax):
    best = tmax
    for k in range(cyl.shape[0]):
        cx, cy, r, z0, z1 = cyl[k, 0], cyl[k, 1], cyl[k, 2], cyl[k, 3], cyl[k, 4]
        px = ox - cx
        py = oy - cy
        a = dx * dx + dy * dy
        b = 2.0 * (px * dx + py * dy)
        c = px * px + py * py - r * r
        if a > 1e-15:
            disc = b * b - 4.0 * a * c
            if disc >= 0.0:
                t = (-b - math.sqrt(disc)) / (2.0 * a)
                if 0.0 < t < best:
                    z = oz + t * dz
                    if z0 <= z <= z1:
                        best = t
        if dz < 0.0 and oz > z1:
            t = (z1 - oz) / dz
            if 0.0 < t < best:
                hx = px + t * dx
                hy = py + t * dy
                if hx * hx + hy * hy <= r * r:
                    best = t
    return best


@njit(cache=True)
def _ray_box(ox, oy, oz, dx, dy, dz, boxes, tmax):
    best = tmax
    for k in range(boxes.shape[0]):
        t0 = 0.0
        t1 = best
        ok = True
        lo = np.array((boxes[k, 0], boxes[k, 2], boxes[k, 4]))
        hi = np.array((boxes[k, 1], boxes[k, 3], boxes[k, 5]))
        o = np.array((ox, oy, oz))
        d = np.array((dx, dy, dz))
        for ax in range(3):
            if abs(d[ax]) < 1e-15:
                if o[ax] < lo[ax] or o[ax] > hi[ax]:
                    ok = False
                    break
            else:
                ta = (lo[ax] - o[ax]) / d[ax]
                tb = (hi[ax] - o[ax]) / d[ax]
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
                if t0 > t1:
                    ok = False
                    break
        if ok and 0.0 < t0 < best:
            best = t0
    return best


@njit(cache=True)
def _raycast(ox, oy, oz, dirs, max_range, base, ramps, bumps, grass, cyl, boxes,
             zlo, zhi, step):
    n = dirs.shape[0]
    ranges = np.full(n, np.inf)
    for i in range(n):
        dx, dy, dz = dirs[i, 0], dirs[i, 1], dirs[i, 2]
        t_hit = _ray_cylinder(ox, oy, oz, dx, dy, dz, cyl, max_range)
        t_hit = _ray_box(ox, oy, oz, dx, dy, dz, boxes, t_hit)
        # ground: march only where the ray can be inside the height bounds
        if dz < 0.0:
            t_start = (oz - zhi) / -dz if oz > zhi else 0.0
            t_end = (oz - zlo) / -dz
        elif oz + dz * max_range < zhi:
            t_start = 0.0
            t_end = max_range
        else:
            t_start = 0.0
            t_end = (zhi - oz) / dz if dz > 0.0 else max_range
        if t_end > t_hit:
            t_end = t_hit
        t = t_start
        while t < t_end:
            t_next = t + step
            if t_next > t_end:
                t_next = t_end
            f = oz + t_next * dz - _ground(ox + t_next * dx, oy + t_next * dy, base, ramps, bumps, grass)
            if f <= 0.0:
                a = t
                b = t_next
                for _ in range(30):
                    m = 0.5 * (a + b)
                    if oz + m * dz - _ground(ox + m * dx, oy + m * dy, base, ramps, bumps, grass) > 0.0:
                        a = m
                    else:
                        b = m
                t_hit = b
                break
            t = t_next
            if t_next >= t_end:
                break
        if t_hit < max_range:
            ranges[i] = t_hit
    return ranges


class TerrainModel:
    """Deterministic terrain queries and lidar raycasting."""

    def __init__(self, spec: TerrainSpec):
        self.spec = spec
        s = spec
        self._base = np.array([s.base_z, s.slope_x, s.slope_y], dtype=float)
        self._ramps = _arr([(r.x0, r.y0, math.cos(r.heading), math.sin(r.heading), r.length, r.rise)
                            for r in s.ramps], 6)
        self._bumps = _arr([(b.x, b.y, b.amplitude, b.sigma) for b in s.bumps], 4)
        self._grass = _arr([(g.xmin, g.xmax, g.ymin, g.ymax, g.height) for g in s.grass], 5)
        cyl = []
        for c in s.cylinders:
            z0 = self.height(c.x, c.y)
            cyl.append((c.x, c.y, c.radius, z0, z0 + c.height))
        self._cyl = _arr(cyl, 5)
        boxes = []
        for b in s.boxes:
            z0 = self.height(0.5 * (b.xmin + b.xmax), 0.5 * (b.ymin + b.ymax))
            boxes.append((b.xmin, b.xmax, b.ymin, b.ymax, z0, z0 + b.height))
        self._boxes = _arr(boxes, 6)

    def height(self, x: float, y: float) -> float:
        return float(_ground(float(x), float(y), self._base, self._ramps, self._bumps, self._grass))

    def heights(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        xs = np.ascontiguousarray(xs, dtype=float).ravel()
        ys = np.ascontiguousarray(ys, dtype=float).ravel()
        return _ground_many(xs, ys, self._base, self._ramps, self._bumps, self._grass)

    def height_bounds(self, x: float, y: float, radius: float) -> tuple[float, float]:
        """Lower/upper bound of ground height within ``radius`` of (x, y)."""
        s = self.spec
        center = s.base_z + s.slope_x * x + s.slope_y * y
        tilt = math.hypot(s.slope_x, s.slope_y) * radius
        lo, hi = center - tilt, center + tilt
        for r in s.ramps:
            lo += min(0.0, r.rise)
            hi += max(0.0, r.rise)
        for b in s.bumps:
            lo += min(0.0, b.amplitude)
            hi += max(0.0, b.amplitude)
        for g in s.grass:
            lo += min(0.0, g.height)
            hi += max(0.0, g.height)
        return lo - 1e-6, hi + 1e-6

    def clearance(self, x: float, y: float) -> float:
        """Planar distance from (x, y) to the nearest solid obstacle surface."""
        best = math.inf
        for c in self.spec.cylinders:
            best = min(best, math.hypot(x - c.x, y - c.y) - c.radius)
        for b in self.spec.boxes:
            dx = max(b.xmin - x, 0.0, x - b.xmax)
            dy = max(b.ymin - y, 0.0, y - b.ymax)
            if dx == 0.0 and dy == 0.0:
                d = -min(x - b.xmin, b.xmax - x, y - b.ymin, b.ymax - y)
            else:
                d = math.hypot(dx, dy)
            best = min(best, d)
        return best

    def collides(self, x: float, y: float, radius: float) -> bool:
        return self.clearance(x, y) < radius


def raycast_scan(terrain: TerrainModel, sensor: SensorSpec, pose: Pose2D, stamp: float = 0.0,
                 rng: np.random.Generator | None = None, march_step: float = 0.1) -> PointCloud:
    """Intersect the sensor's beam fan with the terrain; returns world-frame hits."""
    el, az = sensor.directions()
    if el.size == 0:
        return PointCloud(np.empty((0, 3)), stamp)
    yaw = az + pose.heading
    ce = np.cos(el)
    dirs = np.ascontiguousarray(np.stack([ce * np.cos(yaw), ce * np.sin(yaw), np.sin(el)], axis=1))
    ox, oy = float(pose.x), float(pose.y)
    oz = terrain.height(ox, oy) + sensor.mount_height
    zlo, zhi = terrain.height_bounds(ox, oy, sensor.max_range)
    ranges = _raycast(ox, oy, float(oz), dirs, float(sensor.max_range), terrain._base, terrain._ramps,
                      terrain._bumps, terrain._grass, terrain._cyl, terrain._boxes,
                      float(zlo), float(zhi), float(march_step))
    if sensor.noise_std > 0:
        if rng is None:
            raise ValueError("range noise requested without a random generator")
        ranges = ranges + rng.normal(0.0, sensor.noise_std, size=ranges.shape)
    hit = np.isfinite(ranges) & (ranges > 0) & (ranges <= sensor.max_range)
    r = ranges[hit][:, None]
    pts = np.array([ox, oy, oz]) + r * dirs[hit]
    return PointCloud(pts, stamp)
