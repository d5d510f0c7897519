"""Global grid planning over the composite costmap plus a local carrot
follower.

Edge costs mix geometry and cell cost:

    cost(a, b) = step_length + w * (resolution / 255) * (c_a + c_b) / 2

with step_length = resolution (straight) or resolution * sqrt(2)
(diagonal).  Every path cost is therefore q1 + q2 * sqrt(2) for rationals
q1, q2, and the search carries that form as a pair of exact integers (the
common rational scale cancels in comparisons).  That removes float
summation order from the result entirely: optimal paths, tie-breaks, and
reported totals are reproducible bit for bit, and the documented
tie-break (fewest cells, then lexicographically smallest cell sequence)
is honored exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from heapq import heappop, heappush

from .geometry import VelocityCommand, wrap_angle
from .grid import INSCRIBED, CostLayer

_SQRT2 = math.sqrt(2.0)

_NEIGHBORS = (
    (-1, -1), (0, -1), (1, -1),
    (-1, 0), (1, 0),
    (-1, 1), (0, 1), (1, 1),
)


class PlannerError(Exception):
    pass


class StartBlockedError(PlannerError):
    """Start cell is impassable; distinct from there being no route."""


@dataclass(frozen=True)
class PlannerConfig:
    cost_weight: float = 25.0
    goal_tol: float = 0.15
    lookahead: float = 0.5
    v_max: float = 0.8
    omega_max: float = 1.5
    retry_period: float = 1.0

    def __post_init__(self):
        if self.cost_weight < 0.0:
            raise ValueError("cost_weight must be >= 0")
        if min(self.goal_tol, self.lookahead, self.v_max, self.omega_max) <= 0.0:
            raise ValueError("tolerances and limits must be > 0")


@dataclass
class Path:
    """Planned route: grid cells, world waypoints, and exact total cost.

    waypoints are cell centers except the last, which is the exact goal
    point the caller asked for.
    """

    cells: list[tuple[int, int]]
    waypoints: list[tuple[float, float]]
    total_cost: float
    goal: tuple[float, float]


def _cmp_sqrt2(a1: int, b1: int, a2: int, b2: int) -> int:
    """Exact comparison of a1 + b1*sqrt(2) vs a2 + b2*sqrt(2)."""
    da = a1 - a2
    db = b1 - b2
    if da == 0 and db == 0:
        return 0
    if da >= 0 and db >= 0:
        return 1
    if da <= 0 and db <= 0:
        return -1
    # mixed signs; sqrt(2) irrational so da^2 == 2 db^2 cannot happen
    if da > 0:
        return 1 if da * da > 2 * db * db else -1
    return -1 if da * da > 2 * db * db else 1


class _Key:
    """Heap key holding an exact a + b*sqrt(2) scaled cost."""

    __slots__ = ("a", "b")

    def __init__(self, a: int, b: int):
        self.a = a
        self.b = b

    def __lt__(self, other: "_Key") -> bool:
        return _cmp_sqrt2(self.a, self.b, other.a, other.b) < 0

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, _Key) and self.a == other.a and self.b == other.b
        )


def plan_global(
    costmap: CostLayer,
    start: tuple[float, float],
    goal: tuple[float, float],
    cfg: PlannerConfig,
) -> Path | None:
    """Minimum-cost 8-connected path from start to goal, or None (NoPath).

    Cells with cost >= INSCRIBED are impassable.  Raises
    StartBlockedError when the start cell itself is impassable and
    ValueError when either endpoint is off the grid.  Ties resolve to the
    fewest-cell path and then the lexicographically smallest cell
    sequence (cells compared as (cx, cy) tuples).

    The search is rooted at the goal so the same exact distance field
    drives both the optimal cost and the deterministic forward
    reconstruction.
    """
    spec = costmap.spec
    s_cell = spec.cell_of(start[0], start[1])
    g_cell = spec.cell_of(goal[0], goal[1])
    if not spec.in_bounds(*s_cell):
        raise ValueError("start outside the grid")
    if not spec.in_bounds(*g_cell):
        raise ValueError("goal outside the grid")
    cost = costmap.cost
    if cost[s_cell[1], s_cell[0]] >= INSCRIBED:
        raise StartBlockedError(f"start cell {s_cell} has impassable cost")
    if s_cell == g_cell:
        return Path([s_cell], [goal], 0.0, goal)
    if cost[g_cell[1], g_cell[0]] >= INSCRIBED:
        return None

    w = Fraction(cfg.cost_weight)
    p, q = w.numerator, w.denominator
    unit = 510 * q  # scaled length of one straight step

    # dist: cell -> (a, b, hops), exact scaled cost-to-goal once settled
    dist: dict[tuple[int, int], tuple[int, int, int]] = {g_cell: (0, 0, 0)}
    settled: set[tuple[int, int]] = set()
    heap: list = [(_Key(0, 0), 0, g_cell)]
    width, height = spec.width, spec.height

    while heap:
        key, hops, cell = heappop(heap)
        if cell in settled:
            continue
        settled.add(cell)
        if cell == s_cell:
            break
        ca = int(cost[cell[1], cell[0]])
        for dx, dy in _NEIGHBORS:
            nx, ny = cell[0] + dx, cell[1] + dy
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            cb = int(cost[ny, nx])
            if cb >= INSCRIBED:
                continue
            n = (nx, ny)
            if n in settled:
                continue
            if dx and dy:
                na = key.a + p * (ca + cb)
                nb = key.b + unit
            else:
                na = key.a + p * (ca + cb) + unit
                nb = key.b
            nh = hops + 1
            old = dist.get(n)
            if old is not None:
                c = _cmp_sqrt2(na, nb, old[0], old[1])
                if c > 0 or (c == 0 and nh >= old[2]):
                    continue
            dist[n] = (na, nb, nh)
            heappush(heap, (_Key(na, nb), nh, n))

    if s_cell not in settled:
        return None

    # forward walk: at each step take the lexicographically smallest
    # neighbor that sits on some optimal (cost, hops) path; exact integer
    # equality makes the test sound
    cells = [s_cell]
    u = s_cell
    while u != g_cell:
        ua, ub, uh = dist[u]
        cu = int(cost[u[1], u[0]])
        best = None
        for dx, dy in _NEIGHBORS:
            nx, ny = u[0] + dx, u[1] + dy
            n = (nx, ny)
            if n not in settled:
                continue
            cb = int(cost[ny, nx])
            if cb >= INSCRIBED:
                continue
            if dx and dy:
                ea, eb = p * (cu + cb), unit
            else:
                ea, eb = p * (cu + cb) + unit, 0
            na, nb, nh = dist[n]
            if na + ea == ua and nb + eb == ub and nh + 1 == uh:
                if best is None or n < best:
                    best = n
        if best is None:  # pragma: no cover - guarded by Dijkstra invariants
            raise PlannerError("path reconstruction lost the distance field")
        cells.append(best)
        u = best

    a_tot, b_tot, _ = dist[s_cell]
    total = (a_tot + b_tot * _SQRT2) * spec.resolution / (510.0 * q)
    waypoints = [spec.center_of(cx, cy) for cx, cy in cells]
    waypoints[-1] = goal
    return Path(cells, waypoints, total, goal)


def path_blocked(path: Path, costmap: CostLayer, from_index: int = 0) -> bool:
    """True iff any remaining path cell is now impassable.

    from_index selects where "remaining" starts (progress along the path
    is the caller's knowledge, not the path's).
    """
    cost = costmap.cost
    for cx, cy in path.cells[max(0, from_index):]:
        if cost[cy, cx] >= INSCRIBED:
            return True
    return False


def path_progress(path: Path, x: float, y: float) -> int:
    """Index of the path cell whose waypoint segment is closest to (x, y)."""
    best_i = 0
    best_d = math.inf
    for i, (wx, wy) in enumerate(path.waypoints):
        d = (wx - x) ** 2 + (wy - y) ** 2
        if d < best_d:
            best_d = d
            best_i = i
    return best_i


def _project_arc(path: Path, x: float, y: float) -> tuple[float, list[float]]:
    """Arc length of the closest polyline point plus cumulative lengths."""
    wps = path.waypoints
    cum = [0.0]
    for i in range(1, len(wps)):
        cum.append(
            cum[-1]
            + math.hypot(wps[i][0] - wps[i - 1][0], wps[i][1] - wps[i - 1][1])
        )
    best_s = 0.0
    best_d = math.inf
    for i in range(len(wps) - 1):
        ax, ay = wps[i]
        bx, by = wps[i + 1]
        ex, ey = bx - ax, by - ay
        ln2 = ex * ex + ey * ey
        if ln2 <= 0.0:
            t = 0.0
        else:
            t = min(1.0, max(0.0, ((x - ax) * ex + (y - ay) * ey) / ln2))
        px, py = ax + t * ex, ay + t * ey
        d = (px - x) ** 2 + (py - y) ** 2
        if d < best_d:
            best_d = d
            best_s = cum[i] + t * math.sqrt(ln2)
    if len(wps) == 1:
        best_s = 0.0
    return best_s, cum


def local_follow(path: Path, pose, cfg: PlannerConfig) -> VelocityCommand:
    """Carrot follower: head for the point `lookahead` meters further
    along the path than the closest polyline point.

    Speed is capped at v_max, tapers linearly inside goal_tol * 4 of the
    goal, and drops to a full stop inside goal_tol.  The heading turns
    toward the motion direction at a rate clipped to omega_max.  Output
    is continuous in the pose except at the goal-reached switch.
    """
    if not path.waypoints:
        raise ValueError("path has no waypoints")
    gx, gy = path.waypoints[-1]
    d_goal = math.hypot(gx - pose.x, gy - pose.y)
    if d_goal <= cfg.goal_tol:
        return VelocityCommand(0.0, 0.0, 0.0)
    s, cum = _project_arc(path, pose.x, pose.y)
    target_s = min(s + cfg.lookahead, cum[-1])
    # locate the carrot point at arc length target_s
    wps = path.waypoints
    cx, cy = wps[-1]
    for i in range(1, len(wps)):
        if cum[i] >= target_s:
            seg = cum[i] - cum[i - 1]
            t = 1.0 if seg <= 0.0 else (target_s - cum[i - 1]) / seg
            cx = wps[i - 1][0] + t * (wps[i][0] - wps[i - 1][0])
            cy = wps[i - 1][1] + t * (wps[i][1] - wps[i - 1][1])
            break
    dx, dy = cx - pose.x, cy - pose.y
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        dx, dy, dist = gx - pose.x, gy - pose.y, d_goal
    speed = cfg.v_max * min(1.0, d_goal / (4.0 * cfg.goal_tol))
    vwx, vwy = dx / dist * speed, dy / dist * speed
    bvx, bvy = pose.world_to_body(vwx, vwy)
    err = wrap_angle(math.atan2(vwy, vwx) - pose.theta)
    omega = min(max(2.5 * err, -cfg.omega_max), cfg.omega_max)
    return VelocityCommand(bvx, bvy, omega)
