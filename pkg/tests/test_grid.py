from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from offroad_nav.errors import InvalidInputError, RoiOverrunError, SpecMismatchError
from offroad_nav.grid import (GridSpec, LayerRingBuffer, Pose2D, RoiTracker, WrapGrid, buffer_push,
                              roi_advance, world_to_cell, world_to_cells, wrap_angle)
from offroad_nav.scan import ScanLayerSet

SPEC = GridSpec()


def test_default_spec_extent():
    assert SPEC.size == 512 and SPEC.resolution == 0.2
    assert SPEC.extent == pytest.approx(102.4)


def test_world_to_cell_examples():
    assert world_to_cell((0.0, 0.0), SPEC) == (0, 0)
    assert world_to_cell((0.19, 0.39), SPEC) == (0, 1)
    assert world_to_cell((-0.2, 0.0), SPEC) == (511, 0)
    assert world_to_cell((102.4, 0.0), SPEC) == (0, 0)


def test_world_to_cell_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        world_to_cell((math.nan, 0.0), SPEC)
    with pytest.raises(InvalidInputError):
        world_to_cells(np.array([[0.0, math.inf]]), SPEC)


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.integers(-5, 5))
def test_world_to_cell_periodic(x, y, k):
    # shift by whole cells' worth so float rounding of k * extent cannot cross a boundary
    gx, gy = math.floor(x / 0.2), math.floor(y / 0.2)
    cx, cy = (gx + 0.5) * 0.2, (gy + 0.5) * 0.2
    assert world_to_cell((cx, cy), SPEC) == world_to_cell((cx + k * SPEC.extent, cy - k * SPEC.extent), SPEC)


def test_world_to_cells_matches_scalar():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-300, 300, size=(500, 2))
    cols, rows = world_to_cells(pts, SPEC)
    for (x, y), c, r in zip(pts, cols, rows):
        assert world_to_cell((x, y), SPEC) == (c, r)


def test_wrap_angle_range():
    for a in np.linspace(-20, 20, 401):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)


def test_grid_spec_validation():
    with pytest.raises(InvalidInputError):
        GridSpec(0, 0.2)
    with pytest.raises(InvalidInputError):
        GridSpec(64, -1.0)


def test_wrapgrid_get_set_and_alias():
    g = WrapGrid(GridSpec(8, 1.0), 0.0)
    g.set(1.5, 2.5, 7.0)
    assert g.get(1.5, 2.5) == 7.0
    assert g.get(9.5, -5.5) == 7.0  # same memory cell one extent away
    with pytest.raises(SpecMismatchError):
        WrapGrid(GridSpec(8, 1.0), 0.0, np.zeros((4, 4)))


def test_roi_rejects_oversized_window():
    with pytest.raises(InvalidInputError):
        RoiTracker(GridSpec(64, 0.2), roi_half_extent=10.0)


def test_roi_default_geometry():
    roi = RoiTracker(SPEC)
    assert roi.half_cells == 200
    assert roi.window(Pose2D(0.0, 0.0)) == (-200, 200, -200, 200)
    assert roi.margin == pytest.approx(0.45)


def test_roi_advance_no_motion_clears_nothing():
    roi = RoiTracker(SPEC)
    g = WrapGrid(SPEC, 0.0)
    g.cells[:] = 1.0
    assert roi_advance([g], Pose2D(), Pose2D(), roi) == 0
    assert g.cells.min() == 1.0


def test_roi_advance_one_column():
    roi = RoiTracker(SPEC)
    g = WrapGrid(SPEC, 0.0)
    g.cells[:] = 1.0
    n = roi_advance([g], Pose2D(0.1, 0.1), Pose2D(0.3, 0.1), roi)
    assert n == SPEC.size  # exactly one column strip
    cleared = np.argwhere(g.cells == 0.0)
    assert set(cleared[:, 1]) == {(-200) % 512}
    # the trailing column of the old window is gone, the new leading column is untouched
    assert g.cells[:, 201].min() == 1.0


def test_roi_advance_overrun():
    roi = RoiTracker(SPEC)
    with pytest.raises(RoiOverrunError):
        roi_advance([WrapGrid(SPEC)], Pose2D(0, 0), Pose2D(0.5, 0.0), roi)


def test_roi_advance_idempotent():
    roi = RoiTracker(SPEC)
    rng = np.random.default_rng(1)
    g = WrapGrid(SPEC, -1.0, rng.normal(size=(512, 512)))
    roi_advance([g], Pose2D(0, 0), Pose2D(0.3, -0.3), roi)
    snap = g.cells.copy()
    roi_advance([g], Pose2D(0.3, -0.3), Pose2D(0.3, -0.3), roi)
    np.testing.assert_array_equal(g.cells, snap)


def test_roi_advance_spec_mismatch():
    roi = RoiTracker(SPEC)
    with pytest.raises(SpecMismatchError):
        roi_advance([WrapGrid(GridSpec(256, 0.4))], Pose2D(0, 0), Pose2D(0.3, 0), roi)


def wrap_equivalence_walk(steps: int, seed: int, spec=GridSpec(128, 0.2), half_extent=8.0) -> int:
    """Drive a random walk, writing random values near the robot into a wrapped grid and
    an unbounded reference dict that forgets cells leaving the ROI.  After every step each
    in-ROI cell of the grid must equal the reference.  Returns the number of cells compared."""
    rng = np.random.default_rng(seed)
    roi = RoiTracker(spec, half_extent, margin=0.45)
    grid = WrapGrid(spec, math.nan)
    ref: dict[tuple[int, int], float] = {}
    pose = Pose2D(rng.uniform(-50, 50), rng.uniform(-50, 50))
    roi.last_pose = pose
    checked = 0
    for _ in range(steps):
        ang = rng.uniform(-math.pi, math.pi)
        dist = rng.uniform(0, roi.margin)
        pose = Pose2D(pose.x + dist * math.cos(ang), pose.y + dist * math.sin(ang))
        roi.advance([grid], pose)
        c0, c1, r0, r1 = roi.window(pose)
        ref = {k: v for k, v in ref.items() if c0 <= k[0] <= c1 and r0 <= k[1] <= r1}
        for _ in range(20):
            x = pose.x + rng.uniform(-half_extent, half_extent) * 0.99
            y = pose.y + rng.uniform(-half_extent, half_extent) * 0.99
            v = float(rng.normal())
            grid.set(x, y, v)
            ref[(spec.global_index(x), spec.global_index(y))] = v
        want = np.full((r1 - r0 + 1, c1 - c0 + 1), math.nan)
        for (gx, gy), v in ref.items():
            want[gy - r0, gx - c0] = v
        cols = np.arange(c0, c1 + 1) % spec.size
        rows = np.arange(r0, r1 + 1) % spec.size
        got = grid.cells[np.ix_(rows, cols)]
        np.testing.assert_array_equal(got, want)  # NaN compares equal to NaN here
        checked += want.size
    return checked


def test_wrap_equivalence_short_walk():
    wrap_equivalence_walk(200, seed=5)


def test_ring_buffer_semantics():
    spec = GridSpec(8, 1.0)
    buf = LayerRingBuffer(3, spec)
    sets = [ScanLayerSet.empty(spec, stamp=float(i)) for i in range(4)]
    buffer_push(buf, sets[0])
    assert len(buf) == 1 and buf[0] is sets[0]
    for s in sets[1:]:
        buf.push(s)
    assert len(buf) == 3
    assert [x.stamp for x in buf] == [3.0, 2.0, 1.0]
    with pytest.raises(IndexError):
        buf[3]
    with pytest.raises(SpecMismatchError):
        buf.push(ScanLayerSet.empty(GridSpec(16, 1.0)))
    with pytest.raises(InvalidInputError):
        LayerRingBuffer(0, spec)


def test_ring_buffer_grids_share_clearing():
    spec = GridSpec(64, 0.2)
    roi = RoiTracker(spec, 4.0, 0.45)
    buf = LayerRingBuffer(2, spec)
    for _ in range(2):
        s = ScanLayerSet.empty(spec)
        for g in s.grids():
            g.cells[:] = 5.0
        buf.push(s)
    roi.advance(buf.grids(), Pose2D(0.2, 0.0))
    for g in buf.grids():
        # every layer of every slot forgot the same memory column
        assert np.all(g.cells[:, (-20) % 64] == g.fill_value)


@settings(max_examples=30, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
def test_roi_advance_clears_exactly_outside(x, y, dx, dy):
    spec = GridSpec(64, 0.2)
    roi = RoiTracker(spec, 5.0, 0.45)
    g = WrapGrid(spec, 0.0, np.ones((64, 64)))
    old, new = Pose2D(x, y), Pose2D(x + dx, y + dy)
    # cells outside the old window are by contract already at the fill value
    oc0, oc1, or0, or1 = roi.window(old)
    inside_old = np.zeros((64, 64), dtype=bool)
    for gx in range(oc0, oc1 + 1):
        for gy in range(or0, or1 + 1):
            inside_old[gy % 64, gx % 64] = True
    g.cells[~inside_old] = 0.0
    roi_advance([g], old, new, roi)
    nc0, nc1, nr0, nr1 = roi.window(new)
    for gx in range(nc0, nc1 + 1):
        for gy in range(nr0, nr1 + 1):
            inside_both = oc0 <= gx <= oc1 and or0 <= gy <= or1
            assert g.cells[gy % 64, gx % 64] == (1.0 if inside_both else 0.0)
    both = sum(1 for gx in range(max(oc0, nc0), min(oc1, nc1) + 1) for gy in range(max(or0, nr0), min(or1, nr1) + 1))
    assert int(g.cells.sum()) == both
