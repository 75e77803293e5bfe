"""Scenario configuration: a single JSON document with a versioned schema.

Top-level keys (all optional except ``schema``)::

    schema        1
    name          free text
    seed          integer, drives sensor noise
    duration      simulated seconds before timing out
    start         {x, y, heading}
    goal          {x, y}
    goal_tolerance  meters
    cruise_speed  m/s, constant sampler speed
    rates         {sensor_hz, map_hz, astar_hz, traj_hz}
    sensor        {rings, azimuths, min_elevation_deg, max_elevation_deg,
                   max_range, mount_height, noise_std}
    terrain       {base_z, slope_x, slope_y, ramps, bumps, grass, cylinders, boxes}
    grid          {size, resolution, roi_half_extent, buffer_depth}
    mapping       {obstacle_threshold, fill_sigma, fill_radius}
    cost          {gradient_scale, unknown_cost, lethal_gradient, inflation_margin,
                   escape_cost}
    sampler       {horizon, samples, dt, alpha, beta, gamma}
    vehicle       {v_max, omega_max, radius}
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from .terrain import Box, Bump, Cylinder, GrassPatch, Ramp, SensorSpec, TerrainSpec

SCHEMA_VERSION = 1


@dataclass
class StartPose:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0


@dataclass
class GoalPoint:
    x: float = 30.0
    y: float = 0.0


@dataclass
class Rates:
    sensor_hz: float = 10.0
    map_hz: float = 5.0
    astar_hz: float = 5.0
    traj_hz: float = 30.0


@dataclass
class GridConfig:
    size: int = 512
    resolution: float = 0.2
    roi_half_extent: float = 40.0
    buffer_depth: int = 5


@dataclass
class MappingConfig:
    obstacle_threshold: float = 0.5
    fill_sigma: float = 2.0
    fill_radius: int = 3


@dataclass
class CostConfig:
    gradient_scale: float = 10.0
    unknown_cost: float = 1.0
    lethal_gradient: float = 1.0
    inflation_margin: float = 0.3  # added to vehicle.radius to cover cell discretization
    escape_cost: float = 100.0  # finite cost of inflated cells around a robot already inside them


@dataclass
class SamplerSection:
    horizon: float = 3.0
    samples: int = 10
    dt: float = 0.05
    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 1.0


@dataclass
class VehicleConfig:
    v_max: float = 4.5
    omega_max: float = 1.0
    radius: float = 0.7


@dataclass
class ScenarioConfig:
    schema: int = SCHEMA_VERSION
    name: str = "scenario"
    seed: int = 0
    duration: float = 60.0
    start: StartPose = field(default_factory=StartPose)
    goal: GoalPoint = field(default_factory=GoalPoint)
    goal_tolerance: float = 1.0
    cruise_speed: float = 3.0
    rates: Rates = field(default_factory=Rates)
    sensor: SensorSpec = field(default_factory=SensorSpec)
    terrain: TerrainSpec = field(default_factory=TerrainSpec)
    grid: GridConfig = field(default_factory=GridConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)

    def validate(self) -> ScenarioConfig:
        def need(cond, fld, msg):
            if not cond:
                raise ConfigError(msg, field=fld)

        need(self.schema == SCHEMA_VERSION, "schema", f"unsupported schema {self.schema}, expected {SCHEMA_VERSION}")
        need(self.duration > 0, "duration", "must be > 0")
        for name in ("sensor_hz", "map_hz", "astar_hz", "traj_hz"):
            need(getattr(self.rates, name) > 0, f"rates.{name}", "rate must be > 0")
        need(math.hypot(self.goal.x - self.start.x, self.goal.y - self.start.y) > 0, "goal", "goal equals start")
        need(self.goal_tolerance > 0, "goal_tolerance", "must be > 0")
        need(0 < self.cruise_speed <= self.vehicle.v_max, "cruise_speed", "must be in (0, vehicle.v_max]")
        need(self.vehicle.omega_max > 0, "vehicle.omega_max", "must be > 0")
        need(self.vehicle.radius >= 0, "vehicle.radius", "must be >= 0")
        need(self.sensor.rings >= 0 and self.sensor.azimuths >= 0, "sensor", "beam counts must be >= 0")
        need(self.sensor.max_range > 0, "sensor.max_range", "must be > 0")
        need(self.sensor.noise_std >= 0, "sensor.noise_std", "must be >= 0")
        need(self.grid.size > 0, "grid.size", "must be > 0")
        need(self.grid.resolution > 0, "grid.resolution", "must be > 0")
        need(self.grid.buffer_depth >= 1, "grid.buffer_depth", "must be >= 1")
        margin = self.vehicle.v_max / self.rates.sensor_hz
        need(2 * self.grid.roi_half_extent + margin <= self.grid.size * self.grid.resolution,
             "grid.roi_half_extent", "ROI plus per-update travel must fit inside the map")
        need(self.grid.roi_half_extent > 0, "grid.roi_half_extent", "must be > 0")
        need(self.mapping.obstacle_threshold >= 0, "mapping.obstacle_threshold", "must be >= 0")
        need(self.mapping.fill_sigma > 0 and self.mapping.fill_radius >= 1, "mapping", "bad fill kernel")
        need(self.cost.lethal_gradient > 0, "cost.lethal_gradient", "must be > 0")
        need(self.cost.gradient_scale >= 0 and self.cost.unknown_cost >= 0, "cost", "weights must be >= 0")
        need(self.cost.inflation_margin >= 0, "cost.inflation_margin", "must be >= 0")
        need(0 <= self.cost.escape_cost < math.inf, "cost.escape_cost", "must be finite and >= 0")
        need(self.sampler.horizon > 0, "sampler.horizon", "must be > 0")
        need(self.sampler.samples >= 2, "sampler.samples", "must be >= 2")
        need(self.sampler.dt > 0, "sampler.dt", "must be > 0")
        need(min(self.sampler.alpha, self.sampler.beta, self.sampler.gamma) >= 0, "sampler", "weights must be >= 0")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_LIST_ITEMS = {
    "ramps": Ramp,
    "bumps": Bump,
    "grass": GrassPatch,
    "cylinders": Cylinder,
    "boxes": Box,
}


def _coerce(value, typ, path):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", field=path)
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not (isinstance(value, int) or (isinstance(value, float) and value.is_integer())):
            raise ConfigError(f"expected an integer, got {value!r}", field=path)
        return int(value)
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", field=path)
        return value
    if dataclasses.is_dataclass(typ):
        return _build(typ, value, path)
    raise ConfigError(f"unsupported field type {typ}", field=path)


def _build(cls, data, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", field=path or None)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", field=path or None)
    required = sorted(f.name for f in dataclasses.fields(cls)
                      if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING)
    missing = [name for name in required if name not in data]
    if missing:
        raise ConfigError(f"missing key(s) {missing}", field=path or None)
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        if name in _LIST_ITEMS and cls is TerrainSpec:
            if not isinstance(value, list):
                raise ConfigError("expected a list", field=sub)
            kwargs[name] = [_build(_LIST_ITEMS[name], v, f"{sub}[{i}]") for i, v in enumerate(value)]
        else:
            kwargs[name] = _coerce(value, hints[name], sub)
    return cls(**kwargs)


def _line_of(text: str, fld: str | None) -> int | None:
    if not fld:
        return None
    key = re.sub(r"\[\d+\]", "", fld).split(".")[-1]
    m = re.search(rf'"{re.escape(key)}"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def config_from_dict(data: dict) -> ScenarioConfig:
    if isinstance(data, dict) and "schema" not in data:
        raise ConfigError("missing required key", field="schema")
    return _build(ScenarioConfig, data).validate()


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        if exc.line is None:
            raise ConfigError(exc.message, field=exc.field, line=_line_of(text, exc.field)) from None
        raise


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
