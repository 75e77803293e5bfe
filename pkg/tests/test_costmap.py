from __future__ import annotations

import math

import numpy as np
import pytest

from oracles import dilate_disc, max_filter_disc
from offroad_nav.costmap import LETHAL, CostMap, CostParams, build_costmap, disc_footprint, inflate, relax_near
from offroad_nav.errors import InvalidInputError
from offroad_nav.fusion import MapBundle
from offroad_nav.grid import GridSpec, Pose2D

SPEC = GridSpec(32, 0.2)


def bundle(grad, cert, obst=None):
    grad = np.asarray(grad, dtype=float)
    obst = np.zeros_like(grad) if obst is None else np.asarray(obst, dtype=float)
    h = np.zeros_like(grad)
    return MapBundle(GridSpec(grad.shape[0], 0.2), Pose2D(-1.0, -1.0), h, h, grad, obst,
                     np.asarray(cert, dtype=float), np.asarray(cert, dtype=float), 0.0)


def raw(grad, cert, obst=None, **kw):
    return build_costmap(bundle(grad, cert, obst), CostParams(**kw), inflate_map=False)


def test_cost_examples():
    z = np.zeros((4, 4))
    one = np.ones((4, 4))
    obst = z.copy()
    obst[0, 0] = 1
    cm = raw(z, one, obst)
    assert cm.cost[0, 0] == LETHAL
    assert cm.cost[1, 1] == 0.0
    assert raw(np.full((4, 4), 0.2), one).cost[2, 2] == pytest.approx(2.0)
    assert raw(z, np.zeros((4, 4))).cost[2, 2] == 1.0
    assert raw(np.full((4, 4), 1.0), one).cost[0, 0] == LETHAL  # slope at the cutoff
    assert raw(np.full((4, 4), 5.0), one, lethal_gradient=math.inf).cost[0, 0] == 50.0


def test_nan_gradient_costs_only_uncertainty():
    cm = raw(np.full((4, 4), math.nan), np.full((4, 4), 0.25))
    np.testing.assert_allclose(cm.cost, 0.75)


def test_cost_monotone_in_gradient_antitone_in_certainty():
    rng = np.random.default_rng(0)
    g = rng.uniform(0, 0.9, (16, 16))
    c = rng.uniform(0, 1, (16, 16))
    base = raw(g, c).cost
    assert np.all(raw(g + rng.uniform(0, 0.05, g.shape), c).cost >= base)
    assert np.all(raw(g, np.clip(c + rng.uniform(0, 0.2, c.shape), 0, 1)).cost <= base)


def test_costs_non_negative_and_lethal_dominates():
    rng = np.random.default_rng(1)
    cm = raw(rng.uniform(0, 2, (16, 16)), rng.uniform(0, 1, (16, 16)), rng.random((16, 16)) < 0.1)
    finite = cm.cost[np.isfinite(cm.cost)]
    assert finite.min() >= 0 and LETHAL > finite.max()


def test_params_validation():
    with pytest.raises(InvalidInputError):
        CostParams(gradient_scale=-1)
    with pytest.raises(InvalidInputError):
        CostParams(lethal_gradient=0)


def test_inflate_radius_zero_identity():
    cm = CostMap(np.random.default_rng(2).uniform(0, 3, (8, 8)), GridSpec(8, 0.2), Pose2D())
    assert inflate(cm, 0.0) is cm


def test_single_lethal_cell_disc_of_13():
    cost = np.zeros((11, 11))
    cost[5, 5] = LETHAL
    out = inflate(CostMap(cost, GridSpec(11, 0.2), Pose2D()), 0.4)
    assert int(np.isinf(out.cost).sum()) == 13
    np.testing.assert_array_equal(np.isinf(out.cost), dilate_disc(np.isinf(cost), 2))


def test_gap_closes():
    cost = np.zeros((9, 15))
    cost[4, 4] = LETHAL
    cost[4, 8] = LETHAL  # gap of three free cells, narrower than two radii
    out = inflate(CostMap(cost, GridSpec(15, 0.2), Pose2D()), 0.4)
    assert np.all(np.isinf(out.cost[4, 4:9]))


def test_inflation_matches_oracles_on_random_maps():
    rng = np.random.default_rng(3)
    for size in (16, 40, 128):
        cost = rng.uniform(0, 5, (size, size))
        cost[rng.random((size, size)) < 0.02] = LETHAL
        for radius in (0.2, 0.45, 0.7):
            r = math.ceil(radius / 0.2 - 1e-9)
            out = inflate(CostMap(cost, GridSpec(size, 0.2), Pose2D()), radius)
            np.testing.assert_array_equal(np.isinf(out.cost), dilate_disc(np.isinf(cost), r))
            if size <= 40:
                np.testing.assert_array_equal(out.cost, max_filter_disc(cost, r))


def test_inflation_extensive_and_monotone():
    rng = np.random.default_rng(4)
    cost = rng.uniform(0, 5, (48, 48))
    cost[rng.random((48, 48)) < 0.03] = LETHAL
    cm = CostMap(cost, GridSpec(48, 0.2), Pose2D())
    prev = cm.cost
    for radius in (0.2, 0.4, 0.7, 1.0):
        out = inflate(cm, radius).cost
        assert np.all(out >= cost)
        assert np.all(out >= prev)
        prev = out


def test_disc_footprint_counts():
    assert disc_footprint(0).sum() == 1
    assert disc_footprint(2).sum() == 13
    assert disc_footprint(4).sum() == 49


def test_build_costmap_inflates_by_default():
    obst = np.zeros((32, 32))
    obst[16, 16] = 1
    cm = build_costmap(bundle(np.zeros((32, 32)), np.ones((32, 32)), obst), CostParams(robot_radius=0.7))
    assert int(cm.lethal_mask().sum()) == int(disc_footprint(4).sum())


def test_world_cell_conversions():
    cm = CostMap(np.zeros((10, 10)), GridSpec(10, 0.2), Pose2D(-1.0, -1.0))
    assert cm.world_to_cell(-1.0, -1.0) == (0, 0)
    assert cm.world_to_cell(0.05, -0.81) == (5, 0)
    assert cm.cell_to_world(5, 0) == pytest.approx((0.1, -0.9))
    assert cm.in_bounds(9, 9) and not cm.in_bounds(10, 0) and not cm.in_bounds(0, -1)


def test_relax_near_keeps_raw_lethal():
    cost = np.zeros((21, 21))
    cost[10, 13] = LETHAL
    spec = GridSpec(21, 0.2)
    rawm = CostMap(cost, spec, Pose2D())
    infl = inflate(rawm, 0.8)
    x, y = infl.cell_to_world(10, 10)
    assert infl.is_lethal(10, 10)
    rel = relax_near(infl, rawm, x, y, 0.8, penalty=50.0)
    assert rel.cost[10, 10] == 50.0
    assert rel.is_lethal(13, 10)  # the obstacle itself
    far = infl.lethal_mask() & ~rel.lethal_mask()
    rows, cols = np.nonzero(far)
    assert np.all(np.hypot(cols - 10, rows - 10) * 0.2 <= 0.8 + 1e-9)
    assert relax_near(infl, rawm, 0.1, 0.1, 0.8) is infl  # nothing lethal nearby
