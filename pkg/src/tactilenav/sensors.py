"""Sensor models: 360-degree lidar, a forward camera that identifies
humans, and six tactile plates around the robot body.

All models are exact (ray-grid and ray-circle intersections, not sampled)
so test oracles can be computed by hand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

import numpy as np

from .geometry import wrap_angle
from .world import (
    PLATE_COUNT,
    World,
    _cell_closest_point,
    _occupied_cells_near,
    plate_index,
)


@dataclass
class LaserScan:
    """Planar scan in the robot body frame; inf marks a no-return beam."""

    angle_min: float
    angle_increment: float
    ranges: np.ndarray
    range_max: float


@dataclass
class TactileFrame:
    """Normal force per plate in newtons, indexed by plate."""

    forces: list[float]

    def __post_init__(self):
        if len(self.forces) != PLATE_COUNT:
            raise ValueError(f"expected {PLATE_COUNT} plate forces")


@dataclass(frozen=True)
class HumanEstimate:
    """Camera output for one identified human."""

    id: str
    position: tuple[float, float]
    heading: float
    speed: float
    radius: float
    cls: str


def raycast_static(
    world: World,
    ox: float,
    oy: float,
    dirs: np.ndarray,
    max_d: float,
) -> np.ndarray:
    """Distance from (ox, oy) to the first occupied cell along each ray.

    Works by slicing every ray at its grid-line crossings and testing the
    cell containing each slab's midpoint, which is exact for axis-aligned
    cells.  Rays that exit the grid or exceed max_d report inf.
    """
    spec = world.spec
    res = spec.resolution
    b = dirs.shape[0]
    ux = dirs[:, 0:1]
    uy = dirs[:, 1:2]
    xs = spec.origin[0] + np.arange(spec.width + 1) * res
    ys = spec.origin[1] + np.arange(spec.height + 1) * res
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = (xs[None, :] - ox) / ux
        ty = (ys[None, :] - oy) / uy
    t = np.concatenate(
        [np.zeros((b, 1)), np.full((b, 1), max_d), tx, ty], axis=1
    )
    t[~np.isfinite(t)] = -1.0
    t[(t < 0.0) | (t > max_d)] = -1.0
    t = np.sort(t, axis=1)
    mids = (t[:, :-1] + t[:, 1:]) / 2.0
    valid = (t[:, :-1] >= 0.0) & (t[:, 1:] > t[:, :-1])
    mx = ox + mids * ux
    my = oy + mids * uy
    cx = np.floor((mx - spec.origin[0]) / res).astype(np.int64)
    cy = np.floor((my - spec.origin[1]) / res).astype(np.int64)
    inb = (cx >= 0) & (cx < spec.width) & (cy >= 0) & (cy < spec.height)
    occ = np.zeros_like(valid)
    occ[inb & valid] = world.occupancy[cy[inb & valid], cx[inb & valid]]
    hit = occ & valid
    first = hit.argmax(axis=1)
    out = np.where(hit.any(axis=1), t[np.arange(b), first], np.inf)
    return out


def _ray_circle(ox, oy, dirs, cx, cy, r):
    """Smallest strictly positive intersection parameter per ray, else inf."""
    fx = ox - cx
    fy = oy - cy
    bq = dirs[:, 0] * fx + dirs[:, 1] * fy
    cq = fx * fx + fy * fy - r * r
    disc = bq * bq - cq
    out = np.full(dirs.shape[0], np.inf)
    ok = disc >= 0.0
    s = np.sqrt(np.maximum(disc, 0.0))
    t_near = -bq - s
    t_far = -bq + s
    t = np.where(t_near > 0.0, t_near, np.where(t_far > 0.0, t_far, np.inf))
    out[ok] = t[ok]
    return out


def lidar_scan(
    world: World,
    beam_count: int = 360,
    range_max: float = 6.0,
) -> LaserScan:
    """Scan from the robot center; beams cover [0, 2pi) in the body frame.

    Humans are ordinary obstacles to the lidar.  Returns satisfy
    0 < range <= range_max except the degenerate sensor-in-wall case.
    """
    if beam_count < 1:
        raise ValueError("beam_count must be >= 1")
    if range_max <= 0.0:
        raise ValueError("range_max must be > 0")
    pose = world.robot.pose
    inc = 2.0 * math.pi / beam_count
    angles = pose.theta + inc * np.arange(beam_count)
    dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    best = raycast_static(world, pose.x, pose.y, dirs, range_max)
    for h in sorted(world.humans, key=lambda h: h.id):
        t = _ray_circle(pose.x, pose.y, dirs, h.pose.x, h.pose.y, h.radius)
        best = np.minimum(best, t)
    ranges = np.where(best <= range_max, best, np.inf)
    return LaserScan(0.0, inc, ranges, range_max)


def camera_detect(
    world: World,
    fov: float = math.radians(70.0),
    cam_range: float = 4.0,
    rng: Random | None = None,
    noise_sigma: float = 0.0,
) -> list[HumanEstimate]:
    """Identify humans whose center is in range, inside the field of view,
    and not occluded by static occupancy along the sight line.

    Estimates are ground truth plus zero-mean Gaussian noise on position,
    heading, and speed (sigma 0 by default).  Emitted in ascending id
    order; humans never occlude each other.
    """
    if not (0.0 < fov < 2.0 * math.pi):
        raise ValueError("fov must be in (0, 2pi)")
    if cam_range <= 0.0:
        raise ValueError("cam_range must be > 0")
    pose = world.robot.pose
    out: list[HumanEstimate] = []
    for h in sorted(world.humans, key=lambda h: h.id):
        dx = h.pose.x - pose.x
        dy = h.pose.y - pose.y
        dist = math.hypot(dx, dy)
        if dist > cam_range:
            continue
        bearing = wrap_angle(math.atan2(dy, dx) - pose.theta)
        if abs(bearing) > fov / 2.0:
            continue
        if dist > 1e-9:
            d = np.array([[dx / dist, dy / dist]])
            block = raycast_static(world, pose.x, pose.y, d, dist)[0]
            if block < dist:
                continue
        px, py = h.pose.x, h.pose.y
        heading = h.heading
        speed = h.speed
        if rng is not None and noise_sigma > 0.0:
            px += rng.gauss(0.0, noise_sigma)
            py += rng.gauss(0.0, noise_sigma)
            heading = wrap_angle(heading + rng.gauss(0.0, noise_sigma))
            speed = max(0.0, speed + rng.gauss(0.0, noise_sigma))
        out.append(HumanEstimate(h.id, (px, py), heading, speed, h.radius, h.cls))
    return out


def tactile_sample(world: World, k_c: float = 300.0) -> TactileFrame:
    """Spring-model contact forces on the six plates.

    Every static cell and every human disc overlapping the robot disc
    contributes k_c * penetration to the plate containing its contact
    azimuth; static cells accumulate first (row-major), then humans by id.
    """
    r = world.robot
    pose = r.pose
    forces = [0.0] * PLATE_COUNT
    for ix, iy in _occupied_cells_near(world, pose.x, pose.y, r.radius):
        qx, qy = _cell_closest_point(world.spec, ix, iy, pose.x, pose.y)
        d = math.hypot(qx - pose.x, qy - pose.y)
        pen = r.radius - d
        if pen <= 0.0:
            continue
        az = wrap_angle(math.atan2(qy - pose.y, qx - pose.x) - pose.theta)
        forces[plate_index(az)] += k_c * pen
    for h in sorted(world.humans, key=lambda h: h.id):
        d = math.hypot(h.pose.x - pose.x, h.pose.y - pose.y)
        pen = r.radius + h.radius - d
        if pen <= 0.0:
            continue
        az = wrap_angle(math.atan2(h.pose.y - pose.y, h.pose.x - pose.x) - pose.theta)
        forces[plate_index(az)] += k_c * pen
    return TactileFrame(forces)
