from __future__ import annotations

from offroad_nav.sim.config import GoalPoint, GridConfig, ScenarioConfig, StartPose
from offroad_nav.sim.terrain import SensorSpec


def small_config(**overrides) -> ScenarioConfig:
    """A 128-cell map with a sparse sensor: fast enough for unit-level harness runs."""
    cfg = ScenarioConfig(name="small", seed=3, duration=8.0, start=StartPose(0.0, 0.0, 0.0),
                         goal=GoalPoint(8.0, 0.0),
                         sensor=SensorSpec(rings=16, azimuths=120, max_range=14.0),
                         grid=GridConfig(size=128, resolution=0.2, roi_half_extent=12.0))
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
