"""Built-in scenarios used by the tests and shipped as JSON under ``configs/``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..astar import plan
from ..costmap import LETHAL, CostMap, inflate
from ..grid import GridSpec, Pose2D
from ..sampler import SamplerConfig, sample_profiles
from .config import GoalPoint, ScenarioConfig, StartPose
from .terrain import Bump, Cylinder, GrassPatch, TerrainSpec

# traffic-cone sized posts; tall enough that a close scan spans > 0.5 m
CONE_RADIUS = 0.2
CONE_HEIGHT = 0.9

CONE_POSITIONS = [
    (9.0, 0.3), (14.0, -3.0), (16.0, 2.5), (20.0, -0.4), (24.0, 3.5),
    (26.0, -3.2), (29.0, 0.6), (33.0, -1.8), (35.0, 3.0), (12.0, 5.5),
    (22.0, -6.5), (31.0, 6.0), (6.0, -4.0), (38.0, -5.0),
]


def empty_field(**overrides) -> ScenarioConfig:
    cfg = ScenarioConfig(name="empty_field", seed=1, duration=30.0,
                         start=StartPose(0.0, 0.0, 0.0), goal=GoalPoint(30.0, 0.0))
    return _apply(cfg, overrides)


def cone_field(**overrides) -> ScenarioConfig:
    """Flat field with traffic cones scattered across and around the direct line."""
    terrain = TerrainSpec(cylinders=[Cylinder(x, y, CONE_RADIUS, CONE_HEIGHT) for x, y in CONE_POSITIONS])
    cfg = ScenarioConfig(name="cone_field", seed=7, duration=45.0, start=StartPose(0.0, 0.0, 0.0),
                         goal=GoalPoint(42.0, 0.0), cruise_speed=3.0, terrain=terrain)
    return _apply(cfg, overrides)


def corridor(**overrides) -> ScenarioConfig:
    """50 m trail with tall-grass verges on both sides and gentle bumps on the track."""
    terrain = TerrainSpec(
        grass=[GrassPatch(-10.0, 65.0, 3.0, 9.0, 1.2), GrassPatch(-10.0, 65.0, -9.0, -3.0, 1.2)],
        bumps=[Bump(12.0, 1.5, 0.15, 1.5), Bump(27.0, -1.5, 0.15, 1.5), Bump(40.0, 1.0, 0.12, 2.0)],
    )
    cfg = ScenarioConfig(name="corridor", seed=11, duration=45.0, start=StartPose(0.0, 0.0, 0.0),
                         goal=GoalPoint(50.0, 0.0), cruise_speed=3.0, terrain=terrain)
    return _apply(cfg, overrides)


BUILTIN = {"empty_field": empty_field, "cone_field": cone_field, "corridor": corridor}


def _apply(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()


@dataclass
class ObstacleOnPath:
    """Fixed map, path and pose for comparing pure pursuit with trajectory sampling."""

    costmap: CostMap
    raw_costmap: CostMap
    path: np.ndarray
    robot: Pose2D
    sampler: SamplerConfig
    profiles: list


def obstacle_on_path(obstacle=(6.0, 0.0), obstacle_radius=0.5, goal=(20.0, 0.0),
                     inflation_radius=1.0, speed=4.5) -> ObstacleOnPath:
    """A post sits on the straight line from the robot to the goal.

    The terrain is flat and fully observed, so every free cell costs 0.  A*
    threads past the inflated post; pure pursuit with the T * V_max
    lookahead cuts the corner back toward the line and clips the post.
    """
    spec = GridSpec()
    half = spec.size // 2 * spec.resolution
    origin = Pose2D(-half, -half)
    centers = origin.x + (np.arange(spec.size) + 0.5) * spec.resolution
    xx, yy = np.meshgrid(centers, centers - origin.x + origin.y)
    cost = np.zeros((spec.size, spec.size))
    cost[(xx - obstacle[0]) ** 2 + (yy - obstacle[1]) ** 2 <= obstacle_radius ** 2] = LETHAL
    raw = CostMap(cost, spec, origin)
    cmap = inflate(raw, inflation_radius)
    robot = Pose2D(0.0, 0.0, 0.0)
    path = plan(cmap, cmap.world_to_cell(robot.x, robot.y), cmap.world_to_cell(*goal)).world_points.copy()
    path[0] = (robot.x, robot.y)
    cfg = SamplerConfig(speed=speed)
    profiles = sample_profiles(cfg.horizon, cfg.omega_max, cfg.samples, cfg.speed)
    return ObstacleOnPath(cmap, raw, path, robot, cfg, profiles)
