"""Offline mapping over recorded clouds: ingest, fusion and cost map per scan."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from ..costmap import CostMap
from ..errors import InvalidInputError
from ..fusion import MapBundle, recenter
from ..grid import Pose2D, RoiTracker
from ..gridio import GridDump, bundle_dumps, costmap_dump, write_grid
from ..scan import PointCloud, ScanLayerSet, read_cloud_csv, read_pose_csv
from .config import ScenarioConfig, StartPose
from .harness import Pipeline

SCAN_LAYERS = ("scan_max_height", "scan_min_height", "scan_certainty", "scan_obstacle")
BUNDLE_LAYERS = ("height", "height_filled", "gradient", "obstacle", "certainty", "certainty_raw")
ALL_LAYERS = SCAN_LAYERS + BUNDLE_LAYERS + ("cost",)


@dataclass
class ReplayStep:
    stamp: float
    pose: Pose2D
    scan: ScanLayerSet
    bundle: MapBundle
    costmap: CostMap
    roi: RoiTracker  # window geometry for recentering the raw scan layers

    def dumps(self, layers=None) -> list[GridDump]:
        names = list(ALL_LAYERS) if layers is None else list(layers)
        unknown = [n for n in names if n not in ALL_LAYERS]
        if unknown:
            raise InvalidInputError(f"unknown layer(s) {unknown}; choose from {list(ALL_LAYERS)}")
        res = self.bundle.spec.resolution
        out = []
        for name in names:
            if name in SCAN_LAYERS:
                grid = getattr(self.scan, name[len("scan_"):])
                values, origin = recenter(grid.cells, self.pose, self.roi, grid.fill_value)
                out.append(GridDump(name, values, res, origin, self.stamp))
            elif name == "cost":
                out.append(costmap_dump(self.costmap, "cost", self.stamp))
            else:
                out.extend(bundle_dumps(self.bundle, [name]))
        return out


def load_recording(cloud_paths: list[str | Path], pose_path: str | Path) -> list[tuple[PointCloud, Pose2D]]:
    """Pair cloud files with the lines of the pose file, in order."""
    poses = read_pose_csv(pose_path)
    if len(poses) != len(cloud_paths):
        raise InvalidInputError(f"{len(cloud_paths)} cloud file(s) but {len(poses)} pose line(s)")
    return [(read_cloud_csv(p, stamp), pose) for p, (stamp, pose) in zip(cloud_paths, poses)]


def replay(cfg: ScenarioConfig, recording: list[tuple[PointCloud, Pose2D]]) -> list[ReplayStep]:
    """Run ingest, fusion and cost map after every recorded scan.

    The first pose anchors the region of interest; later poses must stay
    within the per-update travel margin of their predecessor.
    """
    if not recording:
        raise InvalidInputError("recording is empty")
    first = recording[0][1]
    pipe = Pipeline(dataclasses.replace(cfg, start=StartPose(first.x, first.y, first.heading)))
    steps = []
    for cloud, pose in recording:
        if not all(math.isfinite(v) for v in pose.as_tuple()):
            raise InvalidInputError(f"non-finite pose {pose}")
        pipe.ingest(cloud, pose)
        pipe.update_map(pose, cloud.stamp)
        steps.append(ReplayStep(cloud.stamp, pose, pipe.buffer[0], pipe.bundle, pipe.costmap, pipe.roi))
    return steps


def write_replay(steps: list[ReplayStep], out_dir: str | Path, layers=None) -> list[Path]:
    out = Path(out_dir)
    written = []
    for k, step in enumerate(steps):
        d = out / f"scan_{k:04d}"
        d.mkdir(parents=True, exist_ok=True)
        for dump in step.dumps(layers):
            p = d / f"{dump.layer}.grid"
            write_grid(p, dump)
            written.append(p)
    return written
