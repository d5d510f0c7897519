import math
import random

import numpy as np
import pytest

from tactilenav.costmap import (
    InflationParams,
    ProxemicParams,
    SocialCostTable,
    build_obstacle_layer,
    build_semantic_obstacle_layer,
    build_static_layer,
    clear_disc,
    inflate_layer,
    inflation_cost,
    proxemic_field,
    proxemic_layer,
)
from tactilenav.geometry import Pose
from tactilenav.grid import INSCRIBED, LETHAL, CostLayer, GridSpec
from tactilenav.sensors import HumanEstimate, LaserScan

from oracles import inflate_all_pairs, proxemic_point, random_cost_grid

DEFAULT = InflationParams()


# -- inflation -----------------------------------------------------------


def test_inflation_cost_frozen_values():
    """Hand-checked points of the band model, zero tolerance."""
    p = DEFAULT  # r_ins 0.3, r_infl 1.5, alpha 3.0
    assert inflation_cost(0.0, 255, p) == 255
    assert inflation_cost(0.15, 255, p) == 254
    assert inflation_cost(0.3, 255, p) == 254
    # round(254 * exp(-3 * (0.531 - 0.3))) = round(127.08...) = 127
    assert inflation_cost(0.531, 255, p) == 127
    # round(254 * exp(-3 * 0.2)) = round(139.398...) = 139
    assert inflation_cost(0.5, 255, p) == 139
    assert inflation_cost(1.5, 255, p) == 7  # round(254 * exp(-3.6))
    assert inflation_cost(1.6, 255, p) == 0
    assert inflation_cost(0.2, 100, p) == 99
    with pytest.raises(ValueError):
        inflation_cost(-0.1, 255, p)
    with pytest.raises(ValueError):
        inflation_cost(0.1, 0, p)


def test_inflation_params_validation():
    with pytest.raises(ValueError):
        InflationParams(r_ins=0.0)
    with pytest.raises(ValueError):
        InflationParams(r_ins=2.0, r_infl=1.0)
    with pytest.raises(ValueError):
        InflationParams(alpha=0.0)


def test_single_source_band_shape():
    """Isolated 255 source: exact band, monotone decay, zero past cutoff.

    Bands are classified by the exact integer squared cell distance
    ((r_ins/res)^2 = 9, (r_infl/res)^2 = 225, boundaries inclusive).
    """
    spec = GridSpec(41, 41, 0.1)
    cost = np.zeros((41, 41), dtype=np.int32)
    cost[20, 20] = LETHAL
    out = inflate_layer(CostLayer(spec, cost), DEFAULT).cost
    by_d = {}
    for cy in range(41):
        for cx in range(41):
            d2 = (cx - 20) ** 2 + (cy - 20) ** 2
            c = int(out[cy, cx])
            if d2 == 0:
                assert c == 255
            elif d2 <= 9:
                assert c == 254
            elif d2 > 225:
                assert c == 0
            else:
                assert 0 < c <= 254
            by_d.setdefault(d2, c)
    ds = sorted(by_d)
    costs = [by_d[d] for d in ds]
    assert all(a >= b for a, b in zip(costs, costs[1:])), "decay must be monotone"


def test_inflation_keeps_larger_existing_cost():
    # a permeable cell near a weak source keeps its own higher cost
    spec = GridSpec(9, 9, 0.1)
    cost = np.zeros((9, 9), dtype=np.int32)
    cost[4, 4] = 40
    cost[4, 5] = 200
    out = inflate_layer(CostLayer(spec, cost), DEFAULT).cost
    assert out[4, 5] == 200
    assert out[4, 4] >= 40


def test_inflate_matches_all_pairs_oracle():
    """Random small grids against the quadratic scalar reference."""
    rng = random.Random(20)
    for trial in range(300):
        grid = random_cost_grid(rng, max_side=12)
        res = rng.choice([0.05, 0.1, 0.25])
        p = InflationParams(
            r_ins=rng.choice([0.1, 0.3, 0.5]),
            r_infl=rng.choice([0.6, 1.0, 1.5]),
            alpha=rng.choice([1.0, 3.0, 5.0]),
        )
        spec = GridSpec(len(grid[0]), len(grid), res)
        got = inflate_layer(CostLayer(spec, np.array(grid)), p).cost
        want = inflate_all_pairs(grid, res, p.r_ins, p.r_infl, p.alpha)
        assert got.tolist() == want, f"trial {trial} diverged from the oracle"


def test_inflate_empty_grid_is_noop():
    spec = GridSpec(6, 6, 0.1)
    out = inflate_layer(CostLayer(spec), DEFAULT)
    assert out.cost.sum() == 0


# -- static / obstacle / clearing ---------------------------------------


def test_static_layer_marks_occupied_cells():
    spec = GridSpec(3, 2, 0.1)
    occ = np.array([[True, False, False], [False, False, True]])
    layer = build_static_layer(occ, spec)
    assert layer.cost.tolist() == [[255, 0, 0], [0, 0, 255]]
    with pytest.raises(ValueError):
        build_static_layer(np.zeros((3, 3), dtype=bool), spec)


def test_obstacle_layer_rasterizes_hits():
    spec = GridSpec(20, 20, 0.1)
    pose = Pose(1.0, 1.0, 0.0)
    # single beam along +x returning 0.55 -> hit point (1.55, 1.0), cell (15, 10)
    scan = LaserScan(angle_min=0.0, angle_increment=2 * math.pi, ranges=[0.55], range_max=6.0)
    layer = build_obstacle_layer(scan, pose, spec)
    assert layer.at(15, 10) == LETHAL
    assert layer.cost.sum() == LETHAL


def test_obstacle_layer_skips_no_returns_and_outside_hits():
    spec = GridSpec(20, 20, 0.1)
    pose = Pose(1.0, 1.0, 0.0)
    scan = LaserScan(0.0, math.pi, [math.inf, 50.0], 6.0)
    layer = build_obstacle_layer(scan, pose, spec)
    assert layer.cost.sum() == 0
    with pytest.raises(ValueError):
        build_obstacle_layer(scan, Pose(99.0, 99.0, 0.0), spec)


def test_clear_disc_zeroes_inside_only():
    spec = GridSpec(20, 20, 0.1)
    layer = CostLayer(spec, np.full((20, 20), 100))
    clear_disc(layer, (1.0, 1.0), 0.3)
    for cy in range(20):
        for cx in range(20):
            x, y = spec.center_of(cx, cy)
            d = math.hypot(x - 1.0, y - 1.0)
            if d <= 0.3:
                assert layer.at(cx, cy) == 0
            else:
                assert layer.at(cx, cy) == 100


# -- semantic ------------------------------------------------------------


def _est(hid, x, y, cls, heading=0.0, speed=0.0, radius=0.3):
    return HumanEstimate(hid, (x, y), heading, speed, radius, cls)


def test_semantic_layer_class_discs():
    spec = GridSpec(30, 30, 0.1)
    table = SocialCostTable()
    layer = build_semantic_obstacle_layer(
        [_est("h1", 1.0, 1.0, "adult"), _est("h2", 2.0, 2.0, "vulnerable")],
        [],
        table,
        spec,
    )
    assert layer.at(*spec.cell_of(1.0, 1.0)) == 120
    assert layer.at(*spec.cell_of(2.0, 2.0)) == 200
    assert layer.at(*spec.cell_of(1.0, 2.0)) == 0
    # permeable everywhere without an escalation
    assert layer.cost.max() < INSCRIBED


def test_semantic_layer_escalation_is_lethal():
    spec = GridSpec(30, 30, 0.1)

    class Rec:
        anchor = (1.5, 1.5)
        footprint_radius = 0.3

    layer = build_semantic_obstacle_layer([], [Rec()], SocialCostTable(), spec)
    assert layer.at(*spec.cell_of(1.5, 1.5)) == LETHAL


def test_semantic_layer_overlap_takes_max():
    spec = GridSpec(30, 30, 0.1)
    layer = build_semantic_obstacle_layer(
        [_est("h1", 1.0, 1.0, "staff"), _est("h2", 1.05, 1.0, "vulnerable")],
        [],
        SocialCostTable(),
        spec,
    )
    assert layer.at(*spec.cell_of(1.0, 1.0)) == 200


def test_social_table_rejects_bad_costs():
    with pytest.raises(ValueError):
        SocialCostTable(costs={"adult": 254})
    with pytest.raises(ValueError):
        SocialCostTable(costs={"adult": 0})
    with pytest.raises(ValueError):
        SocialCostTable(costs={"adult": 120}, default_class="ghost")
    with pytest.raises(KeyError):
        SocialCostTable().assign("ghost")


# -- proxemic ------------------------------------------------------------


def test_proxemic_frozen_values():
    """0.5 m behind an adult: 120 * exp(-2) -> 16; 0.5 m ahead at speed 1
    with beta 1: 120 * exp(-0.5) -> 73."""
    spec = GridSpec(40, 40, 0.1)
    p = ProxemicParams()  # sigma0 0.25, beta 1.0
    pos = spec.center_of(20, 20)
    still = proxemic_field(pos, 0.0, 0.0, 120, p, spec)
    assert still.at(15, 20) == 16  # 0.5 m behind
    assert still.at(25, 20) == 16  # symmetric at speed 0
    moving = proxemic_field(pos, 0.0, 1.0, 120, p, spec)
    assert moving.at(15, 20) == 16
    assert moving.at(25, 20) == 73  # forward lobe stretched
    assert moving.at(20, 20) == 120  # peak is the class cost


def test_proxemic_matches_scalar_oracle():
    rng = random.Random(21)
    spec = GridSpec(25, 25, 0.1)
    p = ProxemicParams()
    for _ in range(40):
        pos = (rng.uniform(0.8, 1.7), rng.uniform(0.8, 1.7))
        heading = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(0.0, 1.5)
        c_h = rng.choice([80, 120, 200])
        field = proxemic_field(pos, heading, speed, c_h, p, spec)
        for cy in range(25):
            for cx in range(25):
                x, y = spec.center_of(cx, cy)
                want = proxemic_point(x - pos[0], y - pos[1], heading, speed, c_h, 0.25, 1.0)
                assert field.at(cx, cy) == want, (cx, cy, pos, heading, speed)


def test_proxemic_stays_permeable():
    spec = GridSpec(30, 30, 0.1)
    field = proxemic_field((1.5, 1.5), 0.0, 2.0, 253, ProxemicParams(), spec)
    assert field.cost.max() < INSCRIBED
    with pytest.raises(ValueError):
        proxemic_field((1.5, 1.5), 0.0, 0.0, 254, ProxemicParams(), spec)
    with pytest.raises(ValueError):
        proxemic_field((1.5, 1.5), 0.0, -0.1, 120, ProxemicParams(), spec)


def test_proxemic_layer_combines_humans_by_max():
    spec = GridSpec(30, 30, 0.1)
    humans = [_est("h1", 1.5, 1.5, "adult"), _est("h2", 1.6, 1.5, "vulnerable")]
    layer = proxemic_layer(humans, SocialCostTable(), ProxemicParams(), spec)
    a = proxemic_field((1.5, 1.5), 0.0, 0.0, 120, ProxemicParams(), spec).cost
    b = proxemic_field((1.6, 1.5), 0.0, 0.0, 200, ProxemicParams(), spec).cost
    assert np.array_equal(layer.cost, np.maximum(a, b))
