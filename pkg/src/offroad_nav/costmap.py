"""Scalar traversal cost from obstacle, certainty and slope layers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError
from .fusion import MapBundle
from .grid import GridSpec, Pose2D

LETHAL = math.inf


@dataclass(frozen=True)
class CostParams:
    gradient_scale: float = 10.0
    unknown_cost: float = 1.0
    lethal_gradient: float = 1.0
    robot_radius: float = 0.7

    def __post_init__(self):
        for name in ("gradient_scale", "unknown_cost", "lethal_gradient", "robot_radius"):
            v = getattr(self, name)
            if not v >= 0:
                raise InvalidInputError(f"{name} must be >= 0, got {v!r}")
        if not self.lethal_gradient > 0:
            raise InvalidInputError("lethal_gradient must be > 0 (use inf to disable)")


@dataclass(frozen=True)
class CostMap:
    cost: np.ndarray  # [row, col]; LETHAL == inf
    spec: GridSpec
    origin: Pose2D  # world position of the lower-left corner of cell (0, 0)
    lethal_threshold: float = LETHAL

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        res = self.spec.resolution
        return (math.floor((x - self.origin.x) / res), math.floor((y - self.origin.y) / res))

    def cell_to_world(self, col: float, row: float) -> tuple[float, float]:
        res = self.spec.resolution
        return (self.origin.x + (col + 0.5) * res, self.origin.y + (row + 0.5) * res)

    def in_bounds(self, col: int, row: int) -> bool:
        h, w = self.cost.shape
        return 0 <= col < w and 0 <= row < h

    def is_lethal(self, col: int, row: int) -> bool:
        return bool(self.cost[row, col] >= self.lethal_threshold)

    def lethal_mask(self) -> np.ndarray:
        return self.cost >= self.lethal_threshold


def build_costmap(bundle: MapBundle, params: CostParams = CostParams(), inflate_map: bool = True) -> CostMap:
    """Combine bundle layers, then (by default) inflate by the robot radius.

    cost = gradient_scale * slope + unknown_cost * (1 - certainty), with
    obstacle cells and slopes at or above ``lethal_gradient`` made LETHAL.
    Cells without a slope estimate contribute only the uncertainty term.
    """
    grad = np.nan_to_num(bundle.gradient_mag, nan=0.0)
    cert = np.clip(np.nan_to_num(bundle.certainty, nan=0.0), 0.0, 1.0)
    cost = params.gradient_scale * grad + params.unknown_cost * (1.0 - cert)
    lethal = (bundle.obstacle > 0) | (grad >= params.lethal_gradient)
    cost[lethal] = LETHAL
    cmap = CostMap(cost, bundle.spec, bundle.origin)
    if inflate_map:
        cmap = inflate(cmap, params.robot_radius)
    return cmap


def disc_footprint(radius_cells: int) -> np.ndarray:
    r = int(radius_cells)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


def inflate(cmap: CostMap, robot_radius: float) -> CostMap:
    """Grey dilation with a disc of ceil(radius / resolution) cells.

    LETHAL spreads over the disc and every finite cost becomes the maximum
    over its disc neighbourhood.
    """
    if not robot_radius >= 0:
        raise InvalidInputError("robot_radius must be >= 0")
    r = math.ceil(robot_radius / cmap.spec.resolution - 1e-9)
    if r <= 0:
        return cmap
    out = ndimage.maximum_filter(cmap.cost, footprint=disc_footprint(r), mode="constant", cval=0.0)
    return CostMap(out, cmap.spec, cmap.origin, cmap.lethal_threshold)


def relax_near(inflated: CostMap, raw: CostMap, x: float, y: float, radius: float,
               penalty: float = 100.0) -> CostMap:
    """Let a robot that already sits in an inflated buffer drive out of it.

    Within ``radius`` of (x, y), cells that are LETHAL only because of
    inflation get the finite ``penalty`` instead.  Cells that are LETHAL in
    ``raw`` stay LETHAL, so the relaxed map never allows driving into an
    obstacle or an over-steep slope.
    """
    if raw.shape != inflated.shape:
        raise InvalidInputError("raw and inflated cost maps differ in shape")
    if not (math.isfinite(penalty) and penalty >= 0):
        raise InvalidInputError("penalty must be finite and >= 0")
    res = inflated.spec.resolution
    h, w = inflated.shape
    cols = inflated.origin.x + (np.arange(w) + 0.5) * res
    rows = inflated.origin.y + (np.arange(h) + 0.5) * res
    near = (cols[None, :] - x) ** 2 + (rows[:, None] - y) ** 2 <= radius * radius
    relax = near & inflated.lethal_mask() & ~raw.lethal_mask()
    if not relax.any():
        return inflated
    cost = inflated.cost.copy()
    cost[relax] = penalty
    return CostMap(cost, inflated.spec, inflated.origin, inflated.lethal_threshold)
