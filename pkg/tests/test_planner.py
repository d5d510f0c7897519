import math
import random
from fractions import Fraction

import numpy as np
import pytest

from tactilenav.geometry import Pose
from tactilenav.grid import CostLayer, GridSpec, INSCRIBED, LETHAL
from tactilenav.planner import (
    Path,
    PlannerConfig,
    StartBlockedError,
    local_follow,
    path_blocked,
    path_progress,
    plan_global,
)

from oracles import cmp_pair, dijkstra_pairs, path_pair, random_cost_grid

RES = 0.1


def _layer(grid, res=RES):
    h, w = len(grid), len(grid[0])
    return CostLayer(GridSpec(w, h, res), np.array(grid))


def _plan_cells(grid, start, goal, cfg, res=RES):
    layer = _layer(grid, res)
    return plan_global(
        layer, layer.spec.center_of(*start), layer.spec.center_of(*goal), cfg
    )


def _passable_cells(grid):
    return [
        (x, y)
        for y in range(len(grid))
        for x in range(len(grid[0]))
        if grid[y][x] < INSCRIBED
    ]


def _connected(cells):
    return all(
        max(abs(x1 - x0), abs(y1 - y0)) == 1
        for (x0, y0), (x1, y1) in zip(cells, cells[1:])
    )


def test_plan_matches_dijkstra_oracle():
    """Reachability, exact total cost, and path optimality against the
    brute-force pair search on random grids and cost weights."""
    rng = random.Random(0xD1985)
    weights = [25.0, 12.5, 1.0, 0.0]
    planned = 0
    for trial in range(400):
        grid = random_cost_grid(rng, max_side=12)
        free = _passable_cells(grid)
        if not free:
            continue
        start = rng.choice(free)
        goal = (
            rng.randrange(len(grid[0])),
            rng.randrange(len(grid)),
        )
        wt = weights[trial % len(weights)]
        frac = Fraction(wt)
        p, q = frac.numerator, frac.denominator
        result = _plan_cells(grid, start, goal, PlannerConfig(cost_weight=wt))
        oracle = dijkstra_pairs(grid, start, goal, p, q)
        if oracle is None:
            assert result is None, (trial, start, goal)
            continue
        assert result is not None, (trial, start, goal)
        a, b = oracle
        assert result.total_cost == (a + b * math.sqrt(2.0)) * RES / (510.0 * q)
        assert result.cells[0] == start
        assert result.cells[-1] == goal
        assert _connected(result.cells)
        assert all(grid[y][x] < INSCRIBED for x, y in result.cells)
        # the concrete path costs exactly the optimal amount
        pa, pb = path_pair(result.cells, grid, p, q)
        assert cmp_pair(pa, pb, a, b) == 0, (trial, start, goal)
        planned += 1
    assert planned > 150


def test_free_grid_prefers_diagonal():
    result = _plan_cells([[0] * 3 for _ in range(3)], (0, 0), (2, 2), PlannerConfig())
    assert result.cells == [(0, 0), (1, 1), (2, 2)]
    assert result.total_cost == pytest.approx(2 * RES * math.sqrt(2.0))


def test_equal_cost_tie_breaks_lexicographically():
    """Straight-then-diagonal and diagonal-then-straight cost the same;
    the reported path is the lexicographically smaller cell sequence."""
    result = _plan_cells([[0] * 3 for _ in range(3)], (0, 0), (2, 1), PlannerConfig())
    assert result.cells == [(0, 0), (1, 0), (2, 1)]


def test_cost_weight_zero_is_pure_geometry():
    grid = [[0, 253, 0], [0, 253, 0], [0, 253, 0]]
    result = _plan_cells(grid, (0, 1), (2, 1), PlannerConfig(cost_weight=0.0))
    assert result.cells == [(0, 1), (1, 1), (2, 1)]
    assert result.total_cost == pytest.approx(2 * RES)


def test_expensive_corridor_detoured_when_weighted():
    grid = [[0, 253, 0], [0, 253, 0], [0, 0, 0]]
    result = _plan_cells(grid, (0, 0), (2, 0), PlannerConfig(cost_weight=25.0))
    assert (1, 0) not in result.cells
    assert (1, 1) not in result.cells


def test_start_blocked_raises():
    grid = [[INSCRIBED, 0], [0, 0]]
    with pytest.raises(StartBlockedError):
        _plan_cells(grid, (0, 0), (1, 1), PlannerConfig())
    grid[0][0] = LETHAL
    with pytest.raises(StartBlockedError):
        _plan_cells(grid, (0, 0), (1, 1), PlannerConfig())


def test_unreachable_and_blocked_goal_return_none():
    walled = [[0, LETHAL, 0], [0, LETHAL, 0], [0, LETHAL, 0]]
    assert _plan_cells(walled, (0, 0), (2, 2), PlannerConfig()) is None
    # goal cell itself impassable counts as no path, even when adjacent
    assert _plan_cells([[0, INSCRIBED]], (0, 0), (1, 0), PlannerConfig()) is None


def test_endpoints_off_grid_raise():
    layer = _layer([[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        plan_global(layer, (-1.0, 0.05), (0.15, 0.15), PlannerConfig())
    with pytest.raises(ValueError):
        plan_global(layer, (0.05, 0.05), (5.0, 0.05), PlannerConfig())


def test_start_equals_goal():
    layer = _layer([[0, 0], [0, 0]])
    goal = (0.04, 0.07)
    result = plan_global(layer, (0.02, 0.09), goal, PlannerConfig())
    assert result.cells == [(0, 0)]
    assert result.waypoints == [goal]
    assert result.total_cost == 0.0


def test_waypoints_are_cell_centers_except_goal():
    layer = _layer([[0] * 4 for _ in range(4)])
    goal = (0.33, 0.31)
    result = plan_global(layer, (0.05, 0.05), goal, PlannerConfig())
    for cell, wp in zip(result.cells[:-1], result.waypoints[:-1]):
        assert wp == layer.spec.center_of(*cell)
    assert result.waypoints[-1] == goal


def test_path_blocked_checks_remaining_cells():
    grid = [[0] * 5]
    layer = _layer(grid)
    result = plan_global(layer, (0.05, 0.05), (0.45, 0.05), PlannerConfig())
    assert not path_blocked(result, layer)
    blocked = _layer([[0, 0, LETHAL, 0, 0]])
    assert path_blocked(result, blocked)
    assert not path_blocked(result, blocked, from_index=3)


def test_path_progress_picks_nearest_waypoint():
    path = Path(
        [(0, 0), (1, 0), (2, 0)],
        [(0.05, 0.05), (0.15, 0.05), (0.25, 0.05)],
        0.2,
        (0.25, 0.05),
    )
    assert path_progress(path, 0.0, 0.0) == 0
    assert path_progress(path, 0.16, 0.2) == 1
    assert path_progress(path, 9.0, 0.0) == 2


def _straight_path(length=2.0, step=0.1):
    n = int(round(length / step))
    wps = [(i * step, 0.0) for i in range(n + 1)]
    cells = [(i, 0) for i in range(n + 1)]
    return Path(cells, wps, length, wps[-1])


def test_follow_stops_inside_goal_tol():
    path = _straight_path()
    cmd = local_follow(path, Pose(1.9, 0.0, 0.3), PlannerConfig())
    assert (cmd.vx, cmd.vy, cmd.omega) == (0.0, 0.0, 0.0)


def test_follow_drives_along_path_at_v_max():
    cfg = PlannerConfig()
    cmd = local_follow(_straight_path(), Pose(0.2, 0.0, 0.0), cfg)
    assert cmd.vx == pytest.approx(cfg.v_max)
    assert cmd.vy == pytest.approx(0.0, abs=1e-9)
    assert cmd.omega == pytest.approx(0.0, abs=1e-9)


def test_follow_tapers_near_goal():
    cfg = PlannerConfig()
    cmd = local_follow(_straight_path(), Pose(1.7, 0.0, 0.0), cfg)
    # 0.3 m out with a 0.6 m taper window: half speed
    assert cmd.speed() == pytest.approx(0.5 * cfg.v_max)


def test_follow_turn_rate_clipped():
    cfg = PlannerConfig()
    cmd = local_follow(_straight_path(), Pose(0.2, 0.0, math.pi), cfg)
    assert abs(cmd.omega) == cfg.omega_max


def test_follow_on_empty_path_raises():
    with pytest.raises(ValueError):
        local_follow(Path([], [], 0.0, (0.0, 0.0)), Pose(0.0, 0.0), PlannerConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(cost_weight=-1.0)
    with pytest.raises(ValueError):
        PlannerConfig(v_max=0.0)
