from __future__ import annotations

from dataclasses import dataclass, field

from ..grid import Pose2D
from ..sampler import ControlProfile, pose_at, stop_profile


@dataclass
class VehicleModel:
    """Differential-drive vehicle that executes control profiles perfectly."""

    pose: Pose2D = field(default_factory=Pose2D)
    v_max: float = 4.5
    omega_max: float = 1.0
    radius: float = 0.7
    profile: ControlProfile | None = None
    commanded: ControlProfile | None = None
    profile_start: Pose2D | None = None
    elapsed: float = 0.0

    def command(self, profile: ControlProfile) -> None:
        """Start executing ``profile`` from the current pose."""
        self.commanded = profile
        speed = min(max(profile.speed, 0.0), self.v_max)
        omega = min(profile.omega, self.omega_max)
        if speed != profile.speed or omega != profile.omega:
            profile = ControlProfile(profile.first_turn, omega, profile.t1, profile.t2, profile.t3, speed)
        self.profile = profile
        self.profile_start = self.pose
        self.elapsed = 0.0


def step_vehicle(model: VehicleModel, profile: ControlProfile | None, dt: float) -> Pose2D:
    """Advance ``model`` by ``dt`` along ``profile``.

    A profile other than the one in progress is started from the current
    pose.  The pose is always evaluated in closed form from the profile's
    start, so stepping in pieces matches executing the profile in one go.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if profile is None:
        profile = model.commanded or stop_profile(1.0)
    if profile is not model.commanded:
        model.command(profile)
    model.elapsed += dt
    model.pose = pose_at(model.profile, model.profile_start, model.elapsed)
    return model.pose
