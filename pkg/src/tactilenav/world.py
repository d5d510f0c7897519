"""Deterministic fixed-timestep world: an omnidirectional robot plus
scripted human agents on a static occupancy grid.

The robot may interpenetrate humans (that is how tactile contact arises)
but is pushed out of static cells every tick.  Humans follow their
policies and are not collision-checked against the walls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, VelocityCommand, wrap_angle
from .grid import GridSpec

PLATE_COUNT = 6
PLATE_ARC = 2.0 * math.pi / PLATE_COUNT


def plate_index(azimuth: float) -> int:
    """Body-frame azimuth -> tactile plate index.

    Plates are centered at k*60 deg and partition the circle into arcs
    [k*60 - 30, k*60 + 30); e.g. a contact at 90 deg lands on plate
    floor((90 + 30) / 60) = 2.
    """
    a = math.fmod(azimuth + PLATE_ARC / 2.0, 2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    return int(a // PLATE_ARC) % PLATE_COUNT


def plate_normal(index: int) -> tuple[float, float]:
    """Outward body-frame normal of a plate."""
    ang = index * PLATE_ARC
    return (math.cos(ang), math.sin(ang))


@dataclass
class RobotState:
    pose: Pose
    velocity: VelocityCommand = VelocityCommand()
    radius: float = 0.3
    v_max: float = 0.8
    omega_max: float = 1.5


@dataclass
class StaticPolicy:
    """Stands still."""


@dataclass
class BlockPersistPolicy:
    """Stands still and never yields, regardless of touch."""


@dataclass
class YieldAfterTouchPolicy:
    """After the first touch, waits delay seconds then side-steps.

    The retreat direction is the +90 deg perpendicular of the robot-to-
    human axis (times side), frozen when the retreat starts; motion stops
    once retreat meters have been covered.
    """

    delay: float = 0.5
    retreat: float = 1.0
    speed: float = 0.6
    side: int = 1
    # explicit world-frame retreat direction; when unset, steps
    # perpendicular to the robot->human axis (side picks which way)
    direction: tuple[float, float] | None = None
    touch_time: float | None = None
    retreat_dir: tuple[float, float] | None = None
    retreated: float = 0.0


@dataclass
class WaypointPolicy:
    """Tracks a cyclic list of world points at constant speed."""

    points: list[tuple[float, float]]
    speed: float = 0.6
    index: int = 0


@dataclass
class TeleopPolicy:
    """World-frame velocity set externally (operator control)."""

    vx: float = 0.0
    vy: float = 0.0
    v_max: float = 1.5


Policy = StaticPolicy | BlockPersistPolicy | YieldAfterTouchPolicy | WaypointPolicy | TeleopPolicy


@dataclass
class HumanAgent:
    id: str
    pose: Pose
    radius: float = 0.3
    cls: str = "adult"
    policy: Policy = field(default_factory=StaticPolicy)
    # achieved world-frame velocity, updated each tick for the camera model
    vel: tuple[float, float] = (0.0, 0.0)

    @property
    def speed(self) -> float:
        return math.hypot(self.vel[0], self.vel[1])

    @property
    def heading(self) -> float:
        if self.speed > 0.0:
            return math.atan2(self.vel[1], self.vel[0])
        return self.pose.theta


@dataclass
class World:
    spec: GridSpec
    occupancy: np.ndarray
    robot: RobotState
    humans: list[HumanAgent] = field(default_factory=list)
    tick: int = 0

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.shape != (self.spec.height, self.spec.width):
            raise ValueError("occupancy shape does not match grid spec")

    def human_by_id(self, hid: str) -> HumanAgent:
        for h in self.humans:
            if h.id == hid:
                return h
        raise KeyError(f"no human with id {hid!r}")


def _cell_closest_point(spec: GridSpec, cx: int, cy: int, px: float, py: float):
    """Closest point of a cell's square to a world point."""
    x0 = spec.origin[0] + cx * spec.resolution
    y0 = spec.origin[1] + cy * spec.resolution
    qx = min(max(px, x0), x0 + spec.resolution)
    qy = min(max(py, y0), y0 + spec.resolution)
    return qx, qy


def _occupied_cells_near(world: World, px: float, py: float, radius: float):
    """Occupied cells whose square could intersect a disc, row-major order."""
    spec = world.spec
    r_cells = int(math.ceil(radius / spec.resolution)) + 1
    cx, cy = spec.cell_of(px, py)
    out = []
    for iy in range(max(0, cy - r_cells), min(spec.height, cy + r_cells + 1)):
        for ix in range(max(0, cx - r_cells), min(spec.width, cx + r_cells + 1)):
            if world.occupancy[iy, ix]:
                out.append((ix, iy))
    return out


def resolve_static_overlap(world: World, px: float, py: float, radius: float):
    """Push a disc center out of static cells along minimum penetration.

    Resolves the deepest overlap first and iterates; with per-tick motion
    well below a cell size a few passes always converge.
    """
    for _ in range(8):
        worst = None
        for ix, iy in _occupied_cells_near(world, px, py, radius):
            qx, qy = _cell_closest_point(world.spec, ix, iy, px, py)
            dx, dy = px - qx, py - qy
            d = math.hypot(dx, dy)
            pen = radius - d
            if pen <= 1e-12:
                continue
            if worst is None or pen > worst[0]:
                if d > 1e-12:
                    nx, ny = dx / d, dy / d
                else:
                    # center inside the cell: push toward the nearest face
                    spec = world.spec
                    x0 = spec.origin[0] + ix * spec.resolution
                    y0 = spec.origin[1] + iy * spec.resolution
                    lx = px - x0
                    rx = x0 + spec.resolution - px
                    ly = py - y0
                    ry = y0 + spec.resolution - py
                    m = min(lx, rx, ly, ry)
                    if m == lx:
                        nx, ny, pen = -1.0, 0.0, radius + lx
                    elif m == rx:
                        nx, ny, pen = 1.0, 0.0, radius + rx
                    elif m == ly:
                        nx, ny, pen = 0.0, -1.0, radius + ly
                    else:
                        nx, ny, pen = 0.0, 1.0, radius + ry
                worst = (pen, nx, ny)
        if worst is None:
            return px, py
        pen, nx, ny = worst
        px += nx * pen
        py += ny * pen
    return px, py


def overlap_depth(world: World, human: HumanAgent) -> float:
    """Penetration depth between the robot disc and a human disc (>= 0)."""
    r = world.robot
    d = math.hypot(human.pose.x - r.pose.x, human.pose.y - r.pose.y)
    return max(0.0, r.radius + human.radius - d)


def policy_step(human: HumanAgent, world: World, touched: bool, dt: float) -> None:
    """Advance one human by its policy; updates pose and achieved velocity."""
    pol = human.policy
    old = human.pose
    nx, ny, nth = old.x, old.y, old.theta

    if isinstance(pol, (StaticPolicy, BlockPersistPolicy)):
        pass
    elif isinstance(pol, TeleopPolicy):
        sp = math.hypot(pol.vx, pol.vy)
        k = pol.v_max / sp if sp > pol.v_max else 1.0
        nx = old.x + pol.vx * k * dt
        ny = old.y + pol.vy * k * dt
        if sp > 0.0:
            nth = math.atan2(pol.vy, pol.vx)
    elif isinstance(pol, WaypointPolicy):
        if pol.points:
            tx, ty = pol.points[pol.index % len(pol.points)]
            dx, dy = tx - old.x, ty - old.y
            dist = math.hypot(dx, dy)
            step = pol.speed * dt
            if dist <= step:
                nx, ny = tx, ty
                pol.index = (pol.index + 1) % len(pol.points)
            else:
                nx = old.x + dx / dist * step
                ny = old.y + dy / dist * step
            if dist > 1e-9:
                nth = math.atan2(dy, dx)
    elif isinstance(pol, YieldAfterTouchPolicy):
        now = world.tick * dt
        if touched and pol.touch_time is None:
            pol.touch_time = now
        if (
            pol.touch_time is not None
            and now - pol.touch_time >= pol.delay
            and pol.retreated < pol.retreat
        ):
            if pol.retreat_dir is None:
                if pol.direction is not None:
                    dx, dy = pol.direction
                    n = math.hypot(dx, dy)
                    pol.retreat_dir = (dx / n, dy / n)
                else:
                    ax = old.x - world.robot.pose.x
                    ay = old.y - world.robot.pose.y
                    n = math.hypot(ax, ay)
                    if n < 1e-9:
                        ax, ay, n = 1.0, 0.0, 1.0
                    # +90 deg perpendicular of the robot->human axis
                    pol.retreat_dir = (-ay / n * pol.side, ax / n * pol.side)
            step = min(pol.speed * dt, pol.retreat - pol.retreated)
            nx = old.x + pol.retreat_dir[0] * step
            ny = old.y + pol.retreat_dir[1] * step
            pol.retreated += step
            if step > 1e-9:
                nth = math.atan2(pol.retreat_dir[1], pol.retreat_dir[0])
    else:
        raise TypeError(f"unknown policy {type(pol).__name__}")

    human.vel = ((nx - old.x) / dt, (ny - old.y) / dt)
    human.pose = Pose(nx, ny, nth)


def step(world: World, cmd: VelocityCommand, dt: float) -> None:
    """Advance the world one tick under a body-frame robot command.

    Order: clamp and integrate the robot, resolve static overlap, then
    advance each human (ascending id) with its touched flag computed
    against the new robot pose.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    r = world.robot
    c = cmd.clamped(r.v_max, r.omega_max)
    wx, wy = r.pose.body_to_world(c.vx, c.vy)
    px = r.pose.x + wx * dt
    py = r.pose.y + wy * dt
    th = wrap_angle(r.pose.theta + c.omega * dt)
    px, py = resolve_static_overlap(world, px, py, r.radius)
    r.pose = Pose(px, py, th)
    r.velocity = c
    for h in sorted(world.humans, key=lambda h: h.id):
        policy_step(h, world, overlap_depth(world, h) > 0.0, dt)
    world.tick += 1
