"""Layer builders: static walls, lidar obstacles, semantic human costs,
exponential inflation, and the speed-stretched proxemic field.

All cost discretization rounds halves away from zero.  Distances between
cells are Euclidean between cell centers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np
from scipy.ndimage import distance_transform_edt

from .geometry import Pose, round_half_away
from .grid import COST_DTYPE, FREE, INSCRIBED, LETHAL, CostLayer, GridSpec


@dataclass(frozen=True)
class InflationParams:
    """Inscribed radius, inflation cutoff, and decay rate (all meters / 1/m)."""

    r_ins: float = 0.3
    r_infl: float = 1.5
    alpha: float = 3.0

    def __post_init__(self):
        if not (0.0 < self.r_ins <= self.r_infl):
            raise ValueError("need 0 < r_ins <= r_infl")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be > 0")


@dataclass(frozen=True)
class ProxemicParams:
    """Base spread sigma0 (m) and forward stretch beta (s/m)."""

    sigma0: float = 0.25
    beta: float = 1.0

    def __post_init__(self):
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be > 0")
        if self.beta < 0.0:
            raise ValueError("beta must be >= 0")


@dataclass
class SocialCostTable:
    """Per-class permeable base costs; every entry must stay below INSCRIBED."""

    costs: dict[str, int] = field(
        default_factory=lambda: {"adult": 120, "vulnerable": 200, "staff": 80}
    )
    default_class: str = "adult"

    def __post_init__(self):
        for cls, c in self.costs.items():
            if not (1 <= c < INSCRIBED):
                raise ValueError(f"class {cls!r} cost {c} outside [1, {INSCRIBED - 1}]")
        if self.default_class not in self.costs:
            raise ValueError(f"default class {self.default_class!r} not in table")

    def assign(self, cls: str) -> int:
        """Cost for a class; unknown classes are rejected by name."""
        try:
            return self.costs[cls]
        except KeyError:
            raise KeyError(f"unknown human class {cls!r}") from None


class EscalationLike(Protocol):
    """What the semantic builder needs from an escalation record."""

    anchor: tuple[float, float]
    footprint_radius: float


def build_static_layer(occupancy: np.ndarray, spec: GridSpec) -> CostLayer:
    """Boolean occupancy -> LETHAL cells, everything else free."""
    occ = np.asarray(occupancy, dtype=bool)
    if occ.shape != (spec.height, spec.width):
        raise ValueError(
            f"occupancy shape {occ.shape} does not match grid "
            f"{spec.height}x{spec.width}"
        )
    cost = np.where(occ, LETHAL, FREE).astype(COST_DTYPE)
    return CostLayer(spec, cost, "static")


def build_obstacle_layer(scan, robot_pose: Pose, spec: GridSpec) -> CostLayer:
    """Rasterize lidar returns: hit cells become LETHAL.

    Conceptually each beam also clears the cells it traverses up to the hit
    (or max range for no-returns); on a freshly zeroed layer that clearing
    writes nothing, and marking wins where a hit and a traversal collide,
    so only the hit cells are touched.  Beams that land outside the grid
    are clamped (their out-of-grid hit is simply not marked).
    """
    cx0, cy0 = spec.cell_of(robot_pose.x, robot_pose.y)
    if not spec.in_bounds(cx0, cy0):
        raise ValueError("robot pose outside the grid")
    cost = np.zeros((spec.height, spec.width), dtype=COST_DTYPE)
    # nudge hit points into the cell the beam was entering; without it a
    # hit exactly on a cell face can rasterize into the neighbor cell
    eps_cells = 1e-7
    for i, rng in enumerate(scan.ranges):
        if not math.isfinite(rng):
            continue
        ang = robot_pose.theta + scan.angle_min + i * scan.angle_increment
        dx, dy = math.cos(ang), math.sin(ang)
        d = max(rng, 0.0)
        hx = robot_pose.x + d * dx
        hy = robot_pose.y + d * dy
        ux = (hx - spec.origin[0]) / spec.resolution
        uy = (hy - spec.origin[1]) / spec.resolution
        cx = int(math.floor(ux + math.copysign(eps_cells, dx)))
        cy = int(math.floor(uy + math.copysign(eps_cells, dy)))
        if spec.in_bounds(cx, cy):
            cost[cy, cx] = LETHAL
    return CostLayer(spec, cost, "obstacle")


def clear_disc(layer: CostLayer, center: tuple[float, float], radius: float) -> None:
    """Zero all cells whose center is within radius of a world point.

    Used to strip a detected human's lidar returns out of the obstacle
    layer so the semantic layer owns that region's cost.
    """
    spec = layer.spec
    r_cells = int(math.ceil(radius / spec.resolution)) + 1
    cx, cy = spec.cell_of(center[0], center[1])
    x_lo, x_hi = max(0, cx - r_cells), min(spec.width - 1, cx + r_cells)
    y_lo, y_hi = max(0, cy - r_cells), min(spec.height - 1, cy + r_cells)
    if x_lo > x_hi or y_lo > y_hi:
        return
    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    wx = spec.origin[0] + (xs + 0.5) * spec.resolution - center[0]
    wy = spec.origin[1] + (ys + 0.5) * spec.resolution - center[1]
    d2 = wy[:, None] ** 2 + wx[None, :] ** 2
    patch = layer.cost[y_lo : y_hi + 1, x_lo : x_hi + 1]
    patch[d2 <= radius * radius] = FREE


def _fill_disc(cost: np.ndarray, spec: GridSpec, center: tuple[float, float],
               radius: float, value: int) -> None:
    """Raise cells whose center lies inside the disc to at least value."""
    r_cells = int(math.ceil(radius / spec.resolution)) + 1
    cx, cy = spec.cell_of(center[0], center[1])
    x_lo, x_hi = max(0, cx - r_cells), min(spec.width - 1, cx + r_cells)
    y_lo, y_hi = max(0, cy - r_cells), min(spec.height - 1, cy + r_cells)
    if x_lo > x_hi or y_lo > y_hi:
        return
    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    wx = spec.origin[0] + (xs + 0.5) * spec.resolution - center[0]
    wy = spec.origin[1] + (ys + 0.5) * spec.resolution - center[1]
    d2 = wy[:, None] ** 2 + wx[None, :] ** 2
    patch = cost[y_lo : y_hi + 1, x_lo : x_hi + 1]
    np.maximum(patch, np.where(d2 <= radius * radius, value, 0), out=patch)


def build_semantic_obstacle_layer(
    humans: Sequence,
    escalations: Sequence[EscalationLike],
    table: SocialCostTable,
    spec: GridSpec,
) -> CostLayer:
    """Permeable per-class discs for identified humans; LETHAL discs for
    active escalations (the escalated footprint is treated as occupied).

    Overlaps resolve by maximum.  humans need .position, .radius, .cls.
    """
    cost = np.zeros((spec.height, spec.width), dtype=COST_DTYPE)
    for h in humans:
        c = table.assign(h.cls)
        _fill_disc(cost, spec, h.position, h.radius, c)
    for rec in escalations:
        _fill_disc(cost, spec, rec.anchor, rec.footprint_radius, LETHAL)
    return CostLayer(spec, cost, "semantic")


def inflation_cost(d: float, source_cost: int, p: InflationParams) -> int:
    """Cost contributed by a source of source_cost at distance d.

    Band model: the source cell keeps its own cost, anything within the
    inscribed radius is source_cost - 1, then an exponential decay
    round((source_cost - 1) * exp(-alpha * (d - r_ins))) out to r_infl,
    and zero beyond.
    """
    if d < 0.0:
        raise ValueError("distance must be >= 0")
    if not (1 <= source_cost <= LETHAL):
        raise ValueError("source cost must be in [1, 255]")
    if d == 0.0:
        return source_cost
    if d <= p.r_ins:
        return source_cost - 1
    if d <= p.r_infl:
        return round_half_away((source_cost - 1) * math.exp(-p.alpha * (d - p.r_ins)))
    return 0


def _decay_lut(value: int, spec: GridSpec, p: InflationParams) -> np.ndarray:
    """inflation_cost sampled over integer squared cell distances.

    Index s holds the cost at center distance sqrt(s) * resolution; the
    last index is guaranteed zero so callers can clip into it.
    """
    cap = int(math.ceil((p.r_infl / spec.resolution) ** 2)) + 2
    lut = np.zeros(cap + 1, dtype=COST_DTYPE)
    for s in range(cap + 1):
        lut[s] = inflation_cost(math.sqrt(s) * spec.resolution, value, p)
    if lut[cap] != 0:
        raise AssertionError("decay LUT cap does not reach zero")
    return lut


def inflate_layer(layer: CostLayer, p: InflationParams) -> CostLayer:
    """Each cell takes the max inflation contribution over all source cells.

    Implemented per distinct source value: an exact Euclidean feature
    transform finds each cell's nearest source of that value, and the band
    model is applied through an integer squared-distance LUT, which keeps
    the arithmetic identical to the scalar inflation_cost.
    """
    spec = layer.spec
    src = layer.cost
    out = src.copy()
    values = [int(v) for v in np.unique(src) if v >= 1]
    if values:
        rows = np.arange(spec.height)[:, None]
        cols = np.arange(spec.width)[None, :]
        for v in values:
            mask = src == v
            ind = distance_transform_edt(
                ~mask, return_distances=False, return_indices=True
            )
            dy = rows - ind[0]
            dx = cols - ind[1]
            d2 = dy * dy + dx * dx
            lut = _decay_lut(v, spec, p)
            contrib = lut[np.minimum(d2, lut.size - 1)]
            np.maximum(out, contrib, out=out)
    return CostLayer(spec, out, "inflation")


def proxemic_field(
    position: tuple[float, float],
    heading: float,
    speed: float,
    c_h: int,
    p: ProxemicParams,
    spec: GridSpec,
) -> CostLayer:
    """Anisotropic Gaussian comfort field around one human.

    In the human frame (x' forward along heading) the lateral spread is
    sigma0 while the forward spread grows with speed:
    sigma_x = sigma0 * (1 + beta * speed) for x' >= 0, sigma0 behind.
    Raw values below 1 are cut to zero, which bounds the field's support;
    at speed 0 the field is rotationally symmetric.
    """
    if not (1 <= c_h < INSCRIBED):
        raise ValueError("c_h must be a permeable cost in [1, 253]")
    if speed < 0.0:
        raise ValueError("speed must be >= 0")
    cost = np.zeros((spec.height, spec.width), dtype=COST_DTYPE)
    sig_y = p.sigma0
    sig_fwd = p.sigma0 * (1.0 + p.beta * speed)
    # support ends where c_h * exp(-r^2 / (2 sig^2)) drops below 1
    reach = max(sig_fwd, sig_y) * math.sqrt(2.0 * math.log(max(c_h, 2))) + spec.resolution
    r_cells = int(math.ceil(reach / spec.resolution)) + 1
    cx, cy = spec.cell_of(position[0], position[1])
    x_lo, x_hi = max(0, cx - r_cells), min(spec.width - 1, cx + r_cells)
    y_lo, y_hi = max(0, cy - r_cells), min(spec.height - 1, cy + r_cells)
    if x_lo > x_hi or y_lo > y_hi:
        return CostLayer(spec, cost, "proxemic")
    xs = np.arange(x_lo, x_hi + 1)
    ys = np.arange(y_lo, y_hi + 1)
    wx = spec.origin[0] + (xs + 0.5) * spec.resolution - position[0]
    wy = spec.origin[1] + (ys + 0.5) * spec.resolution - position[1]
    dx = np.broadcast_to(wx[None, :], (ys.size, xs.size))
    dy = np.broadcast_to(wy[:, None], (ys.size, xs.size))
    ch, sh = math.cos(heading), math.sin(heading)
    xp = ch * dx + sh * dy
    yp = -sh * dx + ch * dy
    sx = np.where(xp >= 0.0, sig_fwd, sig_y)
    raw = c_h * np.exp(-(xp * xp / (2.0 * sx * sx) + yp * yp / (2.0 * sig_y * sig_y)))
    vals = np.floor(raw + 0.5).astype(COST_DTYPE)
    vals[raw < 1.0] = 0
    cost[y_lo : y_hi + 1, x_lo : x_hi + 1] = vals
    return CostLayer(spec, cost, "proxemic")


def proxemic_layer(
    humans: Iterable,
    table: SocialCostTable,
    p: ProxemicParams,
    spec: GridSpec,
) -> CostLayer:
    """Max-combined proxemic fields for a set of human estimates."""
    cost = np.zeros((spec.height, spec.width), dtype=COST_DTYPE)
    for h in humans:
        f = proxemic_field(h.position, h.heading, h.speed, table.assign(h.cls), p, spec)
        np.maximum(cost, f.cost, out=cost)
    return CostLayer(spec, cost, "proxemic")
