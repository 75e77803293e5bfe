"""Closed-loop scenario runner.

Stages fire on simulated clocks (sensor -> ingest, map fusion + cost map,
A*, trajectory sampler).  Between events the vehicle executes the latest
selected control profile from the pose where it was selected.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..astar import clamp_goal, plan
from ..costmap import CostMap, CostParams, build_costmap, inflate, relax_near
from ..errors import MapFullError, NoPathError
from ..fusion import MapBundle, build_bundle, gaussian_kernel_1d
from ..grid import GridSpec, LayerRingBuffer, Pose2D, RoiTracker
from ..sampler import (ControlProfile, CostWeights, SamplerConfig, Selection, evaluate,
                       lookahead_target, sample_profiles, stop_profile)
from ..scan import PointCloud, ingest_scan, mark_obstacles
from .config import ScenarioConfig
from .terrain import TerrainModel, raycast_scan
from .vehicle import VehicleModel, step_vehicle

log = logging.getLogger(__name__)

EXIT_GOAL = 0
EXIT_COLLISION = 2
EXIT_TIMEOUT = 3

MAX_SUBSTEP = 0.01  # s; collision and goal checks between events


@dataclass
class SelectionRecord:
    t: float
    start: Pose2D
    profile: ControlProfile
    endpoint: Pose2D
    score: float
    target: tuple[float, float, float]
    stopped: bool


@dataclass
class RunLog:
    name: str = ""
    poses: list[tuple[float, float, float, float]] = field(default_factory=list)
    selections: list[SelectionRecord] = field(default_factory=list)
    paths: list[tuple[float, np.ndarray]] = field(default_factory=list)
    timings: list[tuple[str, float, float]] = field(default_factory=list)  # stage, sim t, wall s
    events: list[tuple[float, str, str]] = field(default_factory=list)
    clouds: list[tuple[float, Pose2D, PointCloud]] = field(default_factory=list)
    candidates: list[tuple[float, Selection]] = field(default_factory=list)
    final_bundle: MapBundle | None = None  # last fused map, for optional dumps
    final_costmap: CostMap | None = None
    collision: bool = False
    goal_reached: bool = False
    termination: str = ""
    min_clearance: float = math.inf
    end_time: float = 0.0

    @property
    def exit_code(self) -> int:
        if self.goal_reached:
            return EXIT_GOAL
        if self.collision:
            return EXIT_COLLISION
        return EXIT_TIMEOUT

    @property
    def initial_path(self) -> np.ndarray | None:
        return self.paths[0][1] if self.paths else None

    def executed_path(self) -> np.ndarray:
        return np.array([p[1:3] for p in self.poses])

    def path_length(self) -> float:
        xy = self.executed_path()
        return float(np.hypot(*np.diff(xy, axis=0).T).sum()) if len(xy) > 1 else 0.0

    def fingerprint(self) -> str:
        """Hash of every simulated quantity (wall-clock timings excluded)."""
        h = hashlib.sha256()
        h.update(np.array(self.poses, dtype=float).tobytes())
        for s in self.selections:
            h.update(repr((s.t, s.start.as_tuple(), s.profile, s.endpoint.as_tuple(), s.score,
                           s.target, s.stopped)).encode())
        for t, pts in self.paths:
            h.update(repr(t).encode())
            h.update(np.ascontiguousarray(pts, dtype=float).tobytes())
        h.update(repr((self.events, self.collision, self.goal_reached, self.termination,
                       self.min_clearance, self.end_time)).encode())
        return h.hexdigest()

    def lateral_deviation(self) -> np.ndarray:
        """Distance from each executed pose to the initial A* path.

        Poses whose nearest path point is the final vertex (already past the
        end of the initial plan) are left out.
        """
        path = self.initial_path
        if path is None or len(path) < 2:
            return np.zeros(0)
        xy = self.executed_path()
        a = path[:-1]
        d = np.diff(path, axis=0)
        l2 = np.einsum("ij,ij->i", d, d)
        rel = xy[:, None, :] - a[None, :, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(l2 > 0, np.einsum("pij,ij->pi", rel, d) / l2, 0.0)
        t = np.clip(t, 0.0, 1.0)
        dist = np.hypot(*(rel - t[..., None] * d[None]).transpose(2, 0, 1))
        k = np.argmin(dist, axis=1)
        past_end = (k == len(d) - 1) & (t[np.arange(len(xy)), k] >= 1.0)
        return dist[np.arange(len(xy)), k][~past_end]

    def stage_stats(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for stage in sorted({s for s, _, _ in self.timings}):
            ms = np.array([w for s, _, w in self.timings if s == stage]) * 1e3
            out[stage] = {"count": int(ms.size), "mean_ms": float(ms.mean()),
                          "p50_ms": float(np.percentile(ms, 50)), "p95_ms": float(np.percentile(ms, 95))}
        return out

    def summary(self) -> dict:
        return {
            "name": self.name,
            "termination": self.termination,
            "exit_code": self.exit_code,
            "goal_reached": self.goal_reached,
            "collision": self.collision,
            "collisions": int(self.collision),
            "sim_time_s": self.end_time,
            "path_length_m": self.path_length(),
            "min_clearance_m": self.min_clearance,
            "mean_lateral_deviation_m": float(self.lateral_deviation().mean()) if self.paths else None,
            "astar_paths": len(self.paths),
            "selections": len(self.selections),
            "stages": self.stage_stats(),
            "fingerprint": self.fingerprint(),
        }

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "poses.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "heading"])
            w.writerows(self.poses)
        with open(out / "selections.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "start_x", "start_y", "start_heading", "first_turn", "omega", "t1", "t2", "t3",
                        "speed", "end_x", "end_y", "end_heading", "score", "target_x", "target_y",
                        "target_heading", "stopped"])
            for s in self.selections:
                p = s.profile
                w.writerow([s.t, *s.start.as_tuple(), p.first_turn, p.omega, p.t1, p.t2, p.t3, p.speed,
                            *s.endpoint.as_tuple(), s.score, *s.target, int(s.stopped)])
        with open(out / "astar_paths.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cycle", "t", "x", "y"])
            for k, (t, pts) in enumerate(self.paths):
                for x, y in pts:
                    w.writerow([k, t, x, y])
        with open(out / "timings.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage", "t", "wall_ms"])
            for stage, t, wall in self.timings:
                w.writerow([stage, t, wall * 1e3])
        with open(out / "events.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "kind", "detail"])
            w.writerows(self.events)
        (out / "summary.json").write_text(json.dumps(self.summary(), indent=2), encoding="utf-8")


@dataclass
class Pipeline:
    """Mapping and planning state shared by the scenario runner, bench and replay."""

    cfg: ScenarioConfig
    spec: GridSpec = None
    roi: RoiTracker = None
    buffer: LayerRingBuffer = None
    cost_params: CostParams = None
    sampler: SamplerConfig = None
    profiles: list = None
    kernel: np.ndarray = None
    bundle: MapBundle | None = None
    costmap: CostMap | None = None
    raw_costmap: CostMap | None = None
    path: np.ndarray | None = None

    def __post_init__(self):
        c = self.cfg
        self.spec = GridSpec(c.grid.size, c.grid.resolution)
        margin = c.vehicle.v_max / c.rates.sensor_hz
        self.roi = RoiTracker(self.spec, c.grid.roi_half_extent, margin,
                              Pose2D(c.start.x, c.start.y, c.start.heading))
        self.buffer = LayerRingBuffer(c.grid.buffer_depth, self.spec)
        self.cost_params = CostParams(c.cost.gradient_scale, c.cost.unknown_cost, c.cost.lethal_gradient,
                                      c.vehicle.radius + c.cost.inflation_margin)
        s = c.sampler
        self.sampler = SamplerConfig(s.horizon, c.vehicle.omega_max, s.samples, c.cruise_speed,
                                     c.vehicle.v_max, s.dt, CostWeights(s.alpha, s.beta, s.gamma))
        self.profiles = sample_profiles(s.horizon, c.vehicle.omega_max, s.samples, c.cruise_speed)
        self.kernel = gaussian_kernel_1d(c.mapping.fill_sigma, c.mapping.fill_radius)

    def ingest(self, cloud: PointCloud, pose: Pose2D) -> None:
        self.roi.advance(self.buffer.grids(), pose)
        layers = ingest_scan(cloud, pose, self.spec, self.roi)
        self.buffer.push(mark_obstacles(layers, self.cfg.mapping.obstacle_threshold))

    def update_map(self, pose: Pose2D, stamp: float = 0.0) -> CostMap:
        self.bundle = build_bundle(self.buffer, pose, self.roi, self.kernel, stamp)
        self.raw_costmap = build_costmap(self.bundle, self.cost_params, inflate_map=False)
        self.costmap = inflate(self.raw_costmap, self.cost_params.robot_radius)
        return self.costmap

    def working_map(self, pose: Pose2D) -> CostMap:
        """The cost map, relaxed around the robot when it sits in an inflated buffer."""
        cm = self.costmap
        c, r = cm.world_to_cell(pose.x, pose.y)
        if cm.in_bounds(c, r) and cm.is_lethal(c, r) and not self.raw_costmap.is_lethal(c, r):
            return relax_near(cm, self.raw_costmap, pose.x, pose.y, self.cost_params.robot_radius,
                              self.cfg.cost.escape_cost)
        return cm

    def goal_cell(self) -> tuple[int, int]:
        g = self.cfg.goal
        return clamp_goal((g.x, g.y), self.costmap)

    def replan(self, pose: Pose2D) -> np.ndarray | None:
        """A* from the robot cell to the clamped goal; keeps the old path on failure."""
        cm = self.working_map(pose)
        start = cm.world_to_cell(pose.x, pose.y)
        try:
            path = plan(cm, start, self.goal_cell())
        except (NoPathError, MapFullError) as exc:
            log.debug("A* failed: %s", exc)
            return None
        pts = path.world_points.copy()
        pts[0] = (pose.x, pose.y)
        self.path = pts
        return pts

    def target(self, pose: Pose2D) -> tuple[float, float, float]:
        if self.path is not None:
            return lookahead_target(self.path, pose, self.sampler.lookahead)
        try:
            gx, gy = self.costmap.cell_to_world(*self.goal_cell())
        except MapFullError:
            gx, gy = self.cfg.goal.x, self.cfg.goal.y
        return gx, gy, math.atan2(gy - pose.y, gx - pose.x)

    def select(self, pose: Pose2D) -> Selection:
        return evaluate(self.profiles, self.working_map(pose), self.target(pose), pose, self.sampler)


def _ticks(rate: float) -> Fraction:
    return 1 / Fraction(rate).limit_denominator(10**6)


def run_scenario(cfg: ScenarioConfig, record_clouds: bool = False, candidate_every: int = 0) -> RunLog:
    """Run one closed-loop scenario on simulated time.

    ``record_clouds`` keeps every simulated scan with its pose; a positive
    ``candidate_every`` keeps the full candidate set of every n-th sampler
    cycle (starting with the first) for plotting.
    """
    cfg.validate()
    terrain = TerrainModel(cfg.terrain)
    pipe = Pipeline(cfg)
    start = Pose2D(cfg.start.x, cfg.start.y, cfg.start.heading)
    vehicle = VehicleModel(start, cfg.vehicle.v_max, cfg.vehicle.omega_max, cfg.vehicle.radius)
    vehicle.command(stop_profile(cfg.sampler.horizon))
    goal = (cfg.goal.x, cfg.goal.y)
    runlog = RunLog(name=cfg.name)

    periods = {
        "sensor": _ticks(cfg.rates.sensor_hz),
        "map": _ticks(cfg.rates.map_hz),
        "astar": _ticks(cfg.rates.astar_hz),
        "traj": _ticks(cfg.rates.traj_hz),
    }
    order = ["sensor", "map", "astar", "traj"]
    counts = {k: 0 for k in order}
    duration = Fraction(cfg.duration).limit_denominator(10**6)
    now = Fraction(0)
    scan_index = 0

    def record_pose(t: float, pose: Pose2D) -> bool:
        runlog.poses.append((t, pose.x, pose.y, pose.heading))
        clearance = terrain.clearance(pose.x, pose.y) - vehicle.radius
        runlog.min_clearance = min(runlog.min_clearance, clearance)
        if clearance < 0:
            runlog.collision = True
            runlog.termination = "collision"
            runlog.events.append((t, "collision", f"{pose.x:.3f},{pose.y:.3f}"))
            return True
        if math.hypot(pose.x - goal[0], pose.y - goal[1]) <= cfg.goal_tolerance:
            runlog.goal_reached = True
            runlog.termination = "goal"
            runlog.events.append((t, "goal", f"{pose.x:.3f},{pose.y:.3f}"))
            return True
        return False

    done = record_pose(0.0, vehicle.pose)
    while not done:
        nxt = min(counts[k] * periods[k] for k in order)
        if nxt > duration:
            nxt = duration
        # drive to the next event time in bounded substeps
        while now < nxt and not done:
            n_sub = math.ceil(float(nxt - now) / MAX_SUBSTEP)
            dt = (nxt - now) / n_sub
            for _ in range(n_sub):
                now += dt
                pose = step_vehicle(vehicle, vehicle.commanded, float(dt))
                if record_pose(float(now), pose):
                    done = True
                    break
        if done:
            break
        if now >= duration:
            runlog.termination = "timeout"
            runlog.events.append((float(now), "timeout", ""))
            break
        t = float(now)
        pose = vehicle.pose
        for stage in order:
            if counts[stage] * periods[stage] != now:
                continue
            counts[stage] += 1
            w0 = time.perf_counter()
            if stage == "sensor":
                rng = np.random.default_rng([cfg.seed, scan_index])
                cloud = raycast_scan(terrain, cfg.sensor, pose, t, rng)
                w0 = time.perf_counter()  # time the ingest, not the simulated lidar
                pipe.ingest(cloud, pose)
                if record_clouds:
                    runlog.clouds.append((t, pose, cloud))
                scan_index += 1
            elif stage == "map":
                if len(pipe.buffer) == 0:
                    continue
                pipe.update_map(pose, t)
            elif stage == "astar":
                if pipe.costmap is None:
                    continue
                pts = pipe.replan(pose)
                if pts is None:
                    runlog.events.append((t, "astar_no_path", ""))
                else:
                    runlog.paths.append((t, pts))
            elif stage == "traj":
                if pipe.costmap is None:
                    continue
                sel = pipe.select(pose)
                if candidate_every > 0 and len(runlog.selections) % candidate_every == 0:
                    runlog.candidates.append((t, sel))
                best = sel.best
                vehicle.command(best.profile)
                runlog.selections.append(SelectionRecord(t, pose, best.profile, best.endpoint,
                                                         best.score, sel.target, sel.stopped))
                if sel.stopped:
                    runlog.events.append((t, "stop", "all candidates infeasible"))
            runlog.timings.append((stage, t, time.perf_counter() - w0))
    runlog.end_time = float(now)
    runlog.final_bundle = pipe.bundle
    runlog.final_costmap = pipe.costmap
    return runlog
