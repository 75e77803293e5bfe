"""Control-space trajectory sampling for a constant-speed differential drive.

Every candidate has the same shape: turn one way at rate omega for t1,
drive straight for t2, turn the other way at omega for t3, with
t1 + t2 + t3 equal to the horizon.  Candidates are rolled out with exact
arc kinematics and ranked by

    map_cost + alpha * omega / omega_max + beta * end_distance + gamma * heading_error

where map_cost sums the cost of every distinct cell the rollout passes
through (any LETHAL cell makes the candidate infeasible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .costmap import CostMap
from .grid import Pose2D, wrap_angle

LEFT_FIRST = 1
RIGHT_FIRST = -1


@dataclass(frozen=True)
class ControlProfile:
    first_turn: int  # +1: left-straight-right, -1: right-straight-left
    omega: float
    t1: float
    t2: float
    t3: float
    speed: float

    @property
    def horizon(self) -> float:
        return self.t1 + self.t2 + self.t3

    def segments(self) -> list[tuple[float, float]]:
        """(yaw_rate, duration) for the three phases."""
        w = self.first_turn * self.omega
        return [(w, self.t1), (0.0, self.t2), (-w, self.t3)]

    @property
    def is_straight(self) -> bool:
        return self.omega == 0.0 or (self.t1 == 0.0 and self.t3 == 0.0)


def stop_profile(horizon: float) -> ControlProfile:
    return ControlProfile(LEFT_FIRST, 0.0, 0.0, horizon, 0.0, 0.0)


@dataclass(frozen=True)
class CostWeights:
    alpha: float = 1.0  # per unit omega / omega_max
    beta: float = 0.5  # per meter
    gamma: float = 1.0  # per radian

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class SamplerConfig:
    horizon: float = 3.0
    omega_max: float = 1.0
    samples: int = 10
    speed: float = 3.0
    v_max: float = 4.5
    dt: float = 0.05
    weights: CostWeights = field(default_factory=CostWeights)

    @property
    def lookahead(self) -> float:
        return self.horizon * self.v_max


@dataclass
class Trajectory:
    profile: ControlProfile
    poses: np.ndarray  # (S, 3) x, y, heading
    times: np.ndarray
    score: float = math.nan

    @property
    def endpoint(self) -> Pose2D:
        x, y, h = self.poses[-1]
        return Pose2D(float(x), float(y), float(h))

    @property
    def start(self) -> Pose2D:
        x, y, h = self.poses[0]
        return Pose2D(float(x), float(y), float(h))


def sample_profiles(horizon: float, omega_max: float, k: int, speed: float,
                    dedup: bool = True) -> list[ControlProfile]:
    """Lattice over (first_turn, omega, t1, t2) with t1 + t2 <= horizon.

    With ``dedup`` the result holds one representative per distinct motion:
    every straight-line profile collapses onto a single omega = 0 entry,
    and single-arc profiles reachable from both turn orders are kept once.
    """
    if not (horizon > 0 and omega_max > 0 and k >= 2):
        raise ValueError("need horizon > 0, omega_max > 0 and k >= 2")
    omegas = np.linspace(0.0, omega_max, k)
    out: list[ControlProfile] = []
    seen: set = set()
    straight_done = False
    for first in (RIGHT_FIRST, LEFT_FIRST):
        for w in omegas:
            for i in range(k):
                for j in range(k - i):
                    t1 = horizon * i / (k - 1)
                    t2 = horizon * j / (k - 1)
                    t3 = horizon * (k - 1 - i - j) / (k - 1)
                    p = ControlProfile(first, float(w), t1, t2, t3, speed)
                    if not dedup:
                        out.append(p)
                        continue
                    if p.is_straight:
                        if not straight_done:
                            out.append(ControlProfile(first, 0.0, 0.0, horizon, 0.0, speed))
                            straight_done = True
                        continue
                    key = _motion_key(p)
                    if key not in seen:
                        seen.add(key)
                        out.append(p)
    return out


def _motion_key(p: ControlProfile) -> tuple:
    segs = [(round(w, 12), round(d, 12)) for w, d in p.segments() if d > 0]
    merged: list = []
    for w, d in segs:
        if merged and merged[-1][0] == w:
            merged[-1] = (w, round(merged[-1][1] + d, 12))
        else:
            merged.append((w, d))
    return tuple(merged)


def _sinc(a):
    return np.sinc(a / np.pi)


def _arc(x, y, th, v, w, tau):
    """Exact constant-rate arc; works on scalars or arrays."""
    half = 0.5 * w * tau
    chord = v * tau * _sinc(half)
    mid = th + half
    return x + chord * np.cos(mid), y + chord * np.sin(mid), th + w * tau


def pose_at(profile: ControlProfile, start: Pose2D, t: float) -> Pose2D:
    """Pose after executing ``profile`` for ``t`` seconds from ``start``."""
    x, y, th = start.x, start.y, start.heading
    remaining = max(0.0, min(t, profile.horizon))
    for w, d in profile.segments():
        tau = min(d, remaining)
        if tau > 0:
            x, y, th = _arc(x, y, th, profile.speed, w, tau)
        remaining -= tau
        if remaining <= 0:
            break
    return Pose2D(float(x), float(y), float(th))


def sample_times(horizon: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = math.ceil(horizon / dt - 1e-9)
    return np.minimum(np.arange(n + 1) * dt, horizon)


def profiles_to_arrays(profiles) -> np.ndarray:
    """(P, 6) array of first_turn, omega, t1, t2, t3, speed."""
    return np.array([(p.first_turn, p.omega, p.t1, p.t2, p.t3, p.speed) for p in profiles], dtype=float)


def rollout_batch(profiles, start: Pose2D, times: np.ndarray) -> np.ndarray:
    """Poses (P, S, 3) of every profile at every sample time.  Headings unwrapped."""
    a = profiles_to_arrays(profiles) if not isinstance(profiles, np.ndarray) else profiles
    sgn, w, t1, t2, t3, v = (a[:, k:k + 1] for k in range(6))
    rates = (sgn * w, np.zeros_like(w), -sgn * w)
    durs = (t1, t2, t3)
    # segment start poses
    x, y, th = (np.full_like(w, start.x), np.full_like(w, start.y), np.full_like(w, start.heading))
    seg_start = [(x, y, th)]
    for k in range(2):
        x, y, th = _arc(x, y, th, v, rates[k], durs[k])
        seg_start.append((x, y, th))
    t = times[None, :]
    b1 = t1
    b2 = t1 + t2
    seg = np.where(t <= b1, 0, np.where(t <= b2, 1, 2))
    t0 = np.where(seg == 0, 0.0, np.where(seg == 1, b1, b2))
    tau = np.minimum(t - t0, np.where(seg == 0, t1, np.where(seg == 1, t2, t3)))
    out = np.empty((a.shape[0], len(times), 3))
    for k in range(3):
        m = seg == k
        sx, sy, sth = (np.broadcast_to(c, seg.shape) for c in seg_start[k])
        rk = np.broadcast_to(rates[k], seg.shape)
        vk = np.broadcast_to(v, seg.shape)
        px, py, pth = _arc(sx[m], sy[m], sth[m], vk[m], rk[m], tau[m])
        out[..., 0][m] = px
        out[..., 1][m] = py
        out[..., 2][m] = pth
    return out


def rollout(profile: ControlProfile, start: Pose2D, dt: float) -> Trajectory:
    times = sample_times(profile.horizon, dt)
    poses = rollout_batch([profile], start, times)[0]
    poses[0] = (start.x, start.y, start.heading)
    return Trajectory(profile, poses, times)


@njit(cache=True)
def _visit(c, r, cost, stamp, tag):
    h, w = cost.shape
    if c < 0 or c >= w or r < 0 or r >= h:
        return np.inf
    idx = r * w + c
    if stamp[idx] == tag:
        return 0.0
    stamp[idx] = tag
    return cost[r, c]


@njit(cache=True)
def _segment_cells(x0, y0, x1, y1, cost, stamp, tag):
    """Supercover traversal of one segment in cell units; returns added cost."""
    c = int(math.floor(x0))
    r = int(math.floor(y0))
    total = _visit(c, r, cost, stamp, tag)
    dx = x1 - x0
    dy = y1 - y0
    sc = 1 if dx > 0 else (-1 if dx < 0 else 0)
    sr = 1 if dy > 0 else (-1 if dy < 0 else 0)
    if dx > 0:
        tmx = (c + 1 - x0) / dx
    elif dx < 0:
        tmx = (x0 - c) / -dx
    else:
        tmx = np.inf
    if dy > 0:
        tmy = (r + 1 - y0) / dy
    elif dy < 0:
        tmy = (y0 - r) / -dy
    else:
        tmy = np.inf
    tdx = 1.0 / abs(dx) if dx != 0 else np.inf
    tdy = 1.0 / abs(dy) if dy != 0 else np.inf
    while total < np.inf:
        if tmx < tmy:
            if tmx > 1.0:
                break
            c += sc
            tmx += tdx
        elif tmy < tmx:
            if tmy > 1.0:
                break
            r += sr
            tmy += tdy
        else:
            if tmx > 1.0:
                break
            # passes exactly through a corner: both side cells count
            total += _visit(c + sc, r, cost, stamp, tag)
            total += _visit(c, r + sr, cost, stamp, tag)
            c += sc
            r += sr
            tmx += tdx
            tmy += tdy
        total += _visit(c, r, cost, stamp, tag)
    return total


@njit(cache=True)
def _map_costs(u, v, cost):
    p_count, s_count = u.shape
    h, w = cost.shape
    stamp = np.zeros(h * w, dtype=np.int32)
    out = np.empty(p_count)
    for p in range(p_count):
        tag = p + 1
        total = 0.0
        if s_count == 1:
            total = _visit(int(math.floor(u[p, 0])), int(math.floor(v[p, 0])), cost, stamp, tag)
        for s in range(s_count - 1):
            total += _segment_cells(u[p, s], v[p, s], u[p, s + 1], v[p, s + 1], cost, stamp, tag)
            if total == np.inf:
                break
        out[p] = total
    return out


def _cell_coords(xy: np.ndarray, cmap: CostMap) -> tuple[np.ndarray, np.ndarray]:
    res = cmap.spec.resolution
    return ((xy[..., 0] - cmap.origin.x) / res, (xy[..., 1] - cmap.origin.y) / res)


def _lethal_as_inf(cmap: CostMap) -> np.ndarray:
    cost = np.ascontiguousarray(cmap.cost, dtype=np.float64)
    if cmap.lethal_threshold != math.inf:
        cost = np.where(cost >= cmap.lethal_threshold, np.inf, cost)
    return cost


def map_costs(poses: np.ndarray, cmap: CostMap) -> np.ndarray:
    """Sum of distinct traversed cell costs for each (S, 2+) polyline in ``poses`` (P, S, 2+).

    Leaving the map or touching a LETHAL cell yields inf.
    """
    u, v = _cell_coords(poses, cmap)
    return _map_costs(np.ascontiguousarray(u), np.ascontiguousarray(v), _lethal_as_inf(cmap))


def traversed_cells(points: np.ndarray, cmap: CostMap) -> set[tuple[int, int]]:
    """Set of (col, row) cells a polyline passes through (supercover)."""
    h, w = cmap.shape
    u, v = _cell_coords(np.asarray(points, dtype=float), cmap)
    stamp = np.zeros(h * w, dtype=np.int32)
    zero = np.zeros((h, w))
    _visit(int(math.floor(u[0])), int(math.floor(v[0])), zero, stamp, 1)
    for s in range(len(u) - 1):
        _segment_cells(u[s], v[s], u[s + 1], v[s + 1], zero, stamp, 1)
    return {(int(i % w), int(i // w)) for i in np.nonzero(stamp)[0]}


def _cumlen(path: np.ndarray) -> np.ndarray:
    seg = np.hypot(np.diff(path[:, 0]), np.diff(path[:, 1]))
    return np.concatenate([[0.0], np.cumsum(seg)])


def project_onto_path(path: np.ndarray, x: float, y: float) -> float:
    """Arc length of the closest point of the polyline to (x, y)."""
    if len(path) == 1:
        return 0.0
    a = path[:-1]
    d = np.diff(path, axis=0)
    l2 = np.einsum("ij,ij->i", d, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(l2 > 0, ((x - a[:, 0]) * d[:, 0] + (y - a[:, 1]) * d[:, 1]) / l2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    px = a[:, 0] + t * d[:, 0]
    py = a[:, 1] + t * d[:, 1]
    k = int(np.argmin((px - x) ** 2 + (py - y) ** 2))
    return float(_cumlen(path)[k] + t[k] * math.sqrt(l2[k]))


def lookahead_target(path: np.ndarray, robot: Pose2D, lookahead: float,
                     tangent_window: float = 1.0) -> tuple[float, float, float]:
    """Pure-pursuit style target: (x, y, path heading) ``lookahead`` meters down the path.

    The heading is the direction of the secant over the last
    ``tangent_window`` meters of path before the target point.
    """
    path = np.asarray(path, dtype=float)[:, :2]
    if len(path) == 0:
        raise ValueError("empty path")
    cum = _cumlen(path)
    s0 = project_onto_path(path, robot.x, robot.y)
    j = int(np.searchsorted(cum, s0 + lookahead - 1e-9))
    j = min(j, len(path) - 1)
    tx, ty = path[j]
    if len(path) == 1:
        dx, dy = tx - robot.x, ty - robot.y
        heading = math.atan2(dy, dx) if (dx or dy) else robot.heading
        return float(tx), float(ty), heading
    back = max(cum[j] - tangent_window, 0.0)
    i = min(int(np.searchsorted(cum, back, side="right")) - 1, j)
    if i == j:
        i, j = (j - 1, j) if j > 0 else (0, 1)
    dx, dy = path[j] - path[i]
    return float(tx), float(ty), math.atan2(dy, dx)


def score_components(poses: np.ndarray, profiles_arr: np.ndarray, cmap: CostMap,
                     goal: tuple[float, float, float], weights: CostWeights, omega_max: float
                     ) -> np.ndarray:
    """Weighted cost of each rolled-out profile; inf when infeasible."""
    mc = map_costs(poses, cmap)
    end = poses[:, -1, :]
    dist = np.hypot(end[:, 0] - goal[0], end[:, 1] - goal[1])
    herr = np.abs(np.angle(np.exp(1j * (end[:, 2] - goal[2]))))
    curv = profiles_arr[:, 1] / omega_max
    return mc + weights.alpha * curv + weights.beta * dist + weights.gamma * herr


def score(traj: Trajectory, cmap: CostMap, goal: tuple[float, float, float],
          weights: CostWeights, omega_max: float) -> float:
    arr = profiles_to_arrays([traj.profile])
    return float(score_components(traj.poses[None], arr, cmap, goal, weights, omega_max)[0])


@dataclass
class Selection:
    best: Trajectory
    poses: np.ndarray  # all candidate rollouts (P, S, 3)
    scores: np.ndarray
    profiles: list
    target: tuple[float, float, float]
    stopped: bool = False

    def lowest(self, count: int) -> list[int]:
        """Indices of the ``count`` best feasible candidates."""
        order = np.argsort(self.scores, kind="stable")
        return [int(i) for i in order[:count] if math.isfinite(self.scores[i])]


def evaluate(profiles, cmap: CostMap, target: tuple[float, float, float], robot: Pose2D,
             cfg: SamplerConfig) -> Selection:
    times = sample_times(cfg.horizon, cfg.dt)
    arr = profiles_to_arrays(profiles)
    poses = rollout_batch(arr, robot, times)
    poses[:, 0, :] = (robot.x, robot.y, robot.heading)
    scores = score_components(poses, arr, cmap, target, cfg.weights, cfg.omega_max)
    k = int(np.argmin(scores))
    if not math.isfinite(scores[k]):
        stop = stop_profile(cfg.horizon)
        still = np.tile([robot.x, robot.y, robot.heading], (len(times), 1))
        best = Trajectory(stop, still, times, math.inf)
        return Selection(best, poses, scores, list(profiles), target, stopped=True)
    best = Trajectory(profiles[k], poses[k].copy(), times, float(scores[k]))
    return Selection(best, poses, scores, list(profiles), target)


def select_best(profiles, cmap: CostMap, path: np.ndarray, robot: Pose2D,
                weights: CostWeights | None = None, cfg: SamplerConfig | None = None) -> Trajectory:
    """Lowest-scoring rollout toward the lookahead point on ``path``.

    Ties go to the earlier profile.  If every candidate is infeasible the
    zero-speed stop profile is returned with an infinite score.
    """
    cfg = cfg or SamplerConfig()
    if weights is not None:
        cfg = SamplerConfig(cfg.horizon, cfg.omega_max, cfg.samples, cfg.speed, cfg.v_max, cfg.dt, weights)
    target = lookahead_target(path, robot, cfg.lookahead)
    return evaluate(profiles, cmap, target, robot, cfg).best


def pure_pursuit_rollout(path: np.ndarray, start: Pose2D, speed: float, lookahead: float,
                         omega_max: float, horizon: float, dt: float) -> np.ndarray:
    """Track ``path`` with a pure-pursuit controller; returns poses (S, 3).

    Curvature toward the lookahead point is 2 sin(alpha) / distance, with the
    yaw rate clipped to +-omega_max.
    """
    times = sample_times(horizon, dt)
    x, y, th = start.x, start.y, start.heading
    out = [(x, y, th)]
    for k in range(1, len(times)):
        step = times[k] - times[k - 1]
        tx, ty, _ = lookahead_target(path, Pose2D(x, y, th), lookahead)
        dist = math.hypot(tx - x, ty - y)
        if dist < 1e-9:
            w = 0.0
        else:
            alpha = wrap_angle(math.atan2(ty - y, tx - x) - th)
            w = speed * 2.0 * math.sin(alpha) / dist
            w = max(-omega_max, min(omega_max, w))
        x, y, th = (float(c) for c in _arc(x, y, th, speed, w, step))
        out.append((x, y, th))
    return np.array(out)
