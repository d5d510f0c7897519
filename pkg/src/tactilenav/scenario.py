"""Scenario documents: schema, validation, and the bundled registry.

A scenario is a JSON object describing one closed-loop run: grid and
static occupancy, robot spawn, optional goal, humans with policies,
named exit regions, config overrides, seed, and tick budget.  Loading
is strict: unknown fields and invariant violations are rejected with
the offending field path in the message.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .behavior import BehaviorConfig
from .costmap import InflationParams, ProxemicParams, SocialCostTable
from .geometry import Pose
from .grid import GridSpec
from .planner import PlannerConfig
from .proximity import FilterConfig
from .world import (
    BlockPersistPolicy,
    HumanAgent,
    RobotState,
    StaticPolicy,
    TeleopPolicy,
    WaypointPolicy,
    World,
    YieldAfterTouchPolicy,
    _cell_closest_point,
)


class ScenarioError(ValueError):
    """A scenario document failed validation; the message names the field."""


@dataclass(frozen=True)
class SimParams:
    """Fixed-timestep simulation knobs shared by runner and server."""

    dt: float = 0.05
    lidar_beams: int = 360
    lidar_range: float = 6.0
    camera_fov: float = math.radians(70.0)
    camera_range: float = 4.0
    k_c: float = 300.0
    noise_sigma: float = 0.0
    # how long a human stays semantically known after leaving the camera
    # view; coasting on the last estimate keeps the costmap stable while
    # the robot's heading sweeps during path following
    track_persist: float = 1.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")


@dataclass(frozen=True)
class RobotSpec:
    x: float
    y: float
    theta: float = 0.0
    radius: float = 0.3
    v_max: float = 0.8
    omega_max: float = 1.5


@dataclass(frozen=True)
class Goal:
    x: float
    y: float
    tol: float = 0.15


@dataclass(frozen=True)
class HumanSpec:
    id: str
    x: float
    y: float
    theta: float = 0.0
    radius: float = 0.3
    cls: str = "adult"
    # policy kept as a plain dict; build_world creates a fresh mutable
    # policy object per world so repeated runs never share state
    policy: dict = field(default_factory=lambda: {"type": "static"})


@dataclass(frozen=True)
class ScenarioConfigs:
    sim: SimParams
    filter: FilterConfig
    planner: PlannerConfig
    behavior: BehaviorConfig
    inflation: InflationParams
    proxemic: ProxemicParams
    social: SocialCostTable


@dataclass
class Scenario:
    name: str
    spec: GridSpec
    occupancy: np.ndarray
    robot: RobotSpec
    goal: Goal | None
    humans: list[HumanSpec]
    exit_regions: dict[str, tuple[float, float, float, float]]
    seed: int
    max_ticks: int
    configs: ScenarioConfigs


def _fail(path: str, msg: str):
    raise ScenarioError(f"{path}: {msg}")


def _obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        _fail(path, "expected an object")
    return value


def _keys(obj: dict, allowed: set[str], path: str):
    for k in obj:
        if k not in allowed:
            _fail(f"{path}.{k}" if path else k, "unknown field")


def _num(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "expected a number")
    if not math.isfinite(value):
        _fail(path, "must be finite")
    return float(value)


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "expected an integer")
    return value


def _str(value, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, "expected a string")
    return value


_POLICY_FIELDS = {
    "static": set(),
    "block_persist": set(),
    "yield_after_touch": {"delay", "retreat", "speed", "side", "direction"},
    "waypoint": {"points", "speed"},
    "teleop": {"v_max"},
}


def _check_policy(raw, path: str) -> dict:
    pol = _obj(raw, path)
    ptype = _str(pol.get("type", ""), f"{path}.type")
    if ptype not in _POLICY_FIELDS:
        _fail(f"{path}.type", f"unknown policy type {ptype!r}")
    _keys(pol, _POLICY_FIELDS[ptype] | {"type"}, path)
    out = {"type": ptype}
    if ptype == "yield_after_touch":
        out["delay"] = _num(pol.get("delay", 0.5), f"{path}.delay")
        out["retreat"] = _num(pol.get("retreat", 1.0), f"{path}.retreat")
        out["speed"] = _num(pol.get("speed", 0.6), f"{path}.speed")
        side = _int(pol.get("side", 1), f"{path}.side")
        if side not in (-1, 1):
            _fail(f"{path}.side", "must be 1 or -1")
        out["side"] = side
        out["direction"] = None
        if pol.get("direction") is not None:
            vec = pol["direction"]
            if not isinstance(vec, list) or len(vec) != 2:
                _fail(f"{path}.direction", "expected [dx, dy]")
            dx = _num(vec[0], f"{path}.direction[0]")
            dy = _num(vec[1], f"{path}.direction[1]")
            if math.hypot(dx, dy) < 1e-9:
                _fail(f"{path}.direction", "must be non-zero")
            out["direction"] = (dx, dy)
    elif ptype == "waypoint":
        pts = pol.get("points")
        if not isinstance(pts, list) or not pts:
            _fail(f"{path}.points", "expected a non-empty list of [x, y]")
        out["points"] = []
        for i, p in enumerate(pts):
            if not isinstance(p, list) or len(p) != 2:
                _fail(f"{path}.points[{i}]", "expected [x, y]")
            out["points"].append(
                (_num(p[0], f"{path}.points[{i}][0]"), _num(p[1], f"{path}.points[{i}][1]"))
            )
        out["speed"] = _num(pol.get("speed", 0.6), f"{path}.speed")
    elif ptype == "teleop":
        out["v_max"] = _num(pol.get("v_max", 1.5), f"{path}.v_max")
    return out


def _parse_occupancy(raw, width: int, height: int, path: str) -> np.ndarray:
    """Inline rows, top row first: '#' occupied, '.' free."""
    if not isinstance(raw, list) or len(raw) != height:
        _fail(path, f"expected {height} row strings")
    occ = np.zeros((height, width), dtype=bool)
    for i, row in enumerate(raw):
        row = _str(row, f"{path}[{i}]")
        if len(row) != width:
            _fail(f"{path}[{i}]", f"expected {width} characters")
        for j, ch in enumerate(row):
            if ch == "#":
                occ[height - 1 - i, j] = True
            elif ch != ".":
                _fail(f"{path}[{i}]", f"invalid character {ch!r}")
    return occ


def _build_configs(robot: RobotSpec, ov: dict) -> ScenarioConfigs:
    sim_ov = dict(ov.get("sim", {}))
    if "camera_fov_deg" in sim_ov:
        sim_ov["camera_fov"] = math.radians(sim_ov.pop("camera_fov_deg"))
    filt = {"v_max": robot.v_max}
    filt.update(ov.get("filter", {}))
    plan = {"v_max": robot.v_max, "omega_max": robot.omega_max}
    plan.update(ov.get("planner", {}))
    behav = {"omega_max": robot.omega_max}
    behav.update(ov.get("behavior", {}))
    infl = {"r_ins": robot.radius}
    infl.update(ov.get("inflation", {}))
    social_ov = dict(ov.get("social", {}))
    default_class = social_ov.pop("default_class", "adult")
    costs = {"adult": 120, "vulnerable": 200, "staff": 80}
    costs.update(social_ov)
    try:
        return ScenarioConfigs(
            sim=SimParams(**sim_ov),
            filter=FilterConfig(**filt),
            planner=PlannerConfig(**plan),
            behavior=BehaviorConfig(**behav),
            inflation=InflationParams(**infl),
            proxemic=ProxemicParams(**ov.get("proxemic", {})),
            social=SocialCostTable(costs, default_class),
        )
    except ValueError as e:
        raise ScenarioError(f"overrides: {e}") from None


_OVERRIDE_FIELDS = {
    "sim": {"dt", "lidar_beams", "lidar_range", "camera_fov_deg", "camera_range", "k_c", "noise_sigma", "track_persist"},
    "filter": {"d0", "k_rep", "f_thresh", "v_rep", "t_repulse", "t_wait", "eps_static", "v_max"},
    "planner": {"cost_weight", "goal_tol", "lookahead", "v_max", "omega_max", "retry_period"},
    "behavior": {"turn_tol", "rho", "omega_max"},
    "inflation": {"r_ins", "r_infl", "alpha"},
    "proxemic": {"sigma0", "beta"},
}


def _check_overrides(raw, path: str) -> dict:
    ov = _obj(raw, path)
    _keys(ov, set(_OVERRIDE_FIELDS) | {"social"}, path)
    out = {}
    for section, allowed in _OVERRIDE_FIELDS.items():
        if section not in ov:
            continue
        sec = _obj(ov[section], f"{path}.{section}")
        _keys(sec, allowed, f"{path}.{section}")
        vals = {}
        for k, v in sec.items():
            if k == "lidar_beams":
                vals[k] = _int(v, f"{path}.{section}.{k}")
            else:
                vals[k] = _num(v, f"{path}.{section}.{k}")
        out[section] = vals
    if "social" in ov:
        sec = _obj(ov["social"], f"{path}.social")
        vals = {}
        for k, v in sec.items():
            if k == "default_class":
                vals[k] = _str(v, f"{path}.social.{k}")
            else:
                vals[k] = _int(v, f"{path}.social.{k}")
        out["social"] = vals
    return out


def _disc_hits_wall(occ: np.ndarray, spec: GridSpec, x: float, y: float, r: float) -> bool:
    r_cells = int(math.ceil(r / spec.resolution)) + 1
    cx, cy = spec.cell_of(x, y)
    for iy in range(max(0, cy - r_cells), min(spec.height, cy + r_cells + 1)):
        for ix in range(max(0, cx - r_cells), min(spec.width, cx + r_cells + 1)):
            if not occ[iy, ix]:
                continue
            qx, qy = _cell_closest_point(spec, ix, iy, x, y)
            if math.hypot(x - qx, y - qy) < r - 1e-9:
                return True
    return False


def load_scenario(source: str | dict, name: str | None = None) -> Scenario:
    """Parse and validate a scenario document (JSON text or parsed object)."""
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"invalid JSON: {e}") from None
    else:
        doc = source
    doc = _obj(doc, "scenario")
    _keys(
        doc,
        {"name", "seed", "max_ticks", "grid", "robot", "goal", "humans", "exit_regions", "overrides"},
        "",
    )

    sc_name = _str(doc.get("name", name or "scenario"), "name")

    grid = _obj(doc.get("grid"), "grid")
    _keys(grid, {"width", "height", "resolution", "origin", "occupancy"}, "grid")
    width = _int(grid.get("width"), "grid.width")
    height = _int(grid.get("height"), "grid.height")
    resolution = _num(grid.get("resolution", 0.1), "grid.resolution")
    origin_raw = grid.get("origin", [0.0, 0.0])
    if not isinstance(origin_raw, list) or len(origin_raw) != 2:
        _fail("grid.origin", "expected [x, y]")
    origin = (_num(origin_raw[0], "grid.origin[0]"), _num(origin_raw[1], "grid.origin[1]"))
    try:
        spec = GridSpec(width, height, resolution, origin)
    except ValueError as e:
        raise ScenarioError(f"grid: {e}") from None
    occ = _parse_occupancy(grid.get("occupancy", []), width, height, "grid.occupancy")

    robot_raw = _obj(doc.get("robot"), "robot")
    _keys(robot_raw, {"x", "y", "theta", "radius", "v_max", "omega_max"}, "robot")
    robot = RobotSpec(
        x=_num(robot_raw.get("x"), "robot.x"),
        y=_num(robot_raw.get("y"), "robot.y"),
        theta=_num(robot_raw.get("theta", 0.0), "robot.theta"),
        radius=_num(robot_raw.get("radius", 0.3), "robot.radius"),
        v_max=_num(robot_raw.get("v_max", 0.8), "robot.v_max"),
        omega_max=_num(robot_raw.get("omega_max", 1.5), "robot.omega_max"),
    )
    if robot.radius <= 0.0 or robot.v_max <= 0.0 or robot.omega_max <= 0.0:
        _fail("robot", "radius, v_max, omega_max must be > 0")
    if not spec.in_bounds(*spec.cell_of(robot.x, robot.y)):
        _fail("robot.pose", "spawn outside the grid")
    if _disc_hits_wall(occ, spec, robot.x, robot.y, robot.radius):
        _fail("robot.pose", "spawn overlaps a wall")

    goal = None
    if doc.get("goal") is not None:
        goal_raw = _obj(doc["goal"], "goal")
        _keys(goal_raw, {"x", "y", "tol"}, "goal")
        goal = Goal(
            x=_num(goal_raw.get("x"), "goal.x"),
            y=_num(goal_raw.get("y"), "goal.y"),
            tol=_num(goal_raw.get("tol", 0.15), "goal.tol"),
        )
        if goal.tol <= 0.0:
            _fail("goal.tol", "must be > 0")
        if not spec.in_bounds(*spec.cell_of(goal.x, goal.y)):
            _fail("goal", "outside the grid")

    overrides = _check_overrides(doc.get("overrides", {}), "overrides")
    configs = _build_configs(robot, overrides)

    humans: list[HumanSpec] = []
    seen_ids: set[str] = set()
    raw_humans = doc.get("humans", [])
    if not isinstance(raw_humans, list):
        _fail("humans", "expected a list")
    for i, raw in enumerate(raw_humans):
        path = f"humans[{i}]"
        h = _obj(raw, path)
        _keys(h, {"id", "x", "y", "theta", "radius", "class", "policy"}, path)
        hid = _str(h.get("id"), f"{path}.id")
        if hid in seen_ids:
            _fail(f"{path}.id", f"duplicate id {hid!r}")
        seen_ids.add(hid)
        cls = _str(h.get("class", configs.social.default_class), f"{path}.class")
        if cls not in configs.social.costs:
            _fail(f"{path}.class", f"unknown class {cls!r}")
        hs = HumanSpec(
            id=hid,
            x=_num(h.get("x"), f"{path}.x"),
            y=_num(h.get("y"), f"{path}.y"),
            theta=_num(h.get("theta", 0.0), f"{path}.theta"),
            radius=_num(h.get("radius", 0.3), f"{path}.radius"),
            cls=cls,
            policy=_check_policy(h.get("policy", {"type": "static"}), f"{path}.policy"),
        )
        if hs.radius <= 0.0:
            _fail(f"{path}.radius", "must be > 0")
        if not spec.in_bounds(*spec.cell_of(hs.x, hs.y)):
            _fail(path, "outside the grid")
        humans.append(hs)

    exit_regions: dict[str, tuple[float, float, float, float]] = {}
    raw_regions = _obj(doc.get("exit_regions", {}), "exit_regions")
    for rname, rect in raw_regions.items():
        rpath = f"exit_regions.{rname}"
        if not isinstance(rect, list) or len(rect) != 4:
            _fail(rpath, "expected [x0, y0, x1, y1]")
        x0, y0, x1, y1 = (_num(v, f"{rpath}[{j}]") for j, v in enumerate(rect))
        if x0 >= x1 or y0 >= y1:
            _fail(rpath, "must have x0 < x1 and y0 < y1")
        exit_regions[rname] = (x0, y0, x1, y1)

    seed = _int(doc.get("seed", 0), "seed")
    max_ticks = _int(doc.get("max_ticks", 2000), "max_ticks")
    if max_ticks < 1:
        _fail("max_ticks", "must be >= 1")

    return Scenario(
        name=sc_name,
        spec=spec,
        occupancy=occ,
        robot=robot,
        goal=goal,
        humans=humans,
        exit_regions=exit_regions,
        seed=seed,
        max_ticks=max_ticks,
        configs=configs,
    )


def _make_policy(pol: dict):
    ptype = pol["type"]
    if ptype == "static":
        return StaticPolicy()
    if ptype == "block_persist":
        return BlockPersistPolicy()
    if ptype == "yield_after_touch":
        return YieldAfterTouchPolicy(
            delay=pol["delay"],
            retreat=pol["retreat"],
            speed=pol["speed"],
            side=pol["side"],
            direction=pol["direction"],
        )
    if ptype == "waypoint":
        return WaypointPolicy(points=list(pol["points"]), speed=pol["speed"])
    if ptype == "teleop":
        return TeleopPolicy(v_max=pol["v_max"])
    raise ScenarioError(f"unknown policy type {ptype!r}")


def build_world(sc: Scenario) -> World:
    """Fresh world for one run; policies are new objects every call."""
    robot = RobotState(
        pose=Pose(sc.robot.x, sc.robot.y, sc.robot.theta),
        radius=sc.robot.radius,
        v_max=sc.robot.v_max,
        omega_max=sc.robot.omega_max,
    )
    humans = [
        HumanAgent(
            id=h.id,
            pose=Pose(h.x, h.y, h.theta),
            radius=h.radius,
            cls=h.cls,
            policy=_make_policy(h.policy),
        )
        for h in sc.humans
    ]
    return World(spec=sc.spec, occupancy=sc.occupancy.copy(), robot=robot, humans=humans)


def list_scenarios() -> list[str]:
    """Names of the bundled scenarios."""
    pkg = resources.files("tactilenav") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def bundled_text(name: str) -> str:
    """Raw JSON of a bundled scenario."""
    pkg = resources.files("tactilenav") / "scenarios"
    candidate = pkg / f"{name}.json"
    if not candidate.is_file():
        raise ScenarioError(f"unknown bundled scenario {name!r}")
    return candidate.read_text(encoding="utf-8")


def load_bundled(name: str) -> Scenario:
    return load_scenario(bundled_text(name), name=name)
