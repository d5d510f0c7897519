"""Reactive proximity filter: laser repulsion plus a tactile override.

The filter sits between the local planner and the base.  In Pass it adds
an artificial-potential-field repulsion term from close lidar returns
(suppressed while the commanded velocity is static).  A resolved tactile
contact overrides everything: back away from the contact for T_repulse
seconds, hold still until T_wait since the contact, then pass through
again.  Headings: omega passes through except in Repulsing/Waiting,
where it is zeroed.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import VelocityCommand
from .world import PLATE_COUNT, plate_normal

log = logging.getLogger(__name__)


class FilterPhase(enum.Enum):
    PASS = "Pass"
    REPULSING = "Repulsing"
    WAITING = "Waiting"


@dataclass(frozen=True)
class FilterConfig:
    d0: float = 1.0
    k_rep: float = 0.05
    f_thresh: float = 2.0
    v_rep: float = 0.3
    t_repulse: float = 1.0
    t_wait: float = 5.0
    eps_static: float = 0.01
    v_max: float = 0.8

    def __post_init__(self):
        if self.t_wait < self.t_repulse:
            raise ValueError("t_wait must be >= t_repulse")
        if min(self.d0, self.v_rep, self.f_thresh) <= 0.0:
            raise ValueError("d0, v_rep, f_thresh must be > 0")


@dataclass
class FilterState:
    """Phase plus time-in-phase; phase_ticks resets on every transition.

    phase_elapsed is derived as phase_ticks * dt (a product, not a running
    float sum) so phase durations come out as exact tick counts.
    """

    phase: FilterPhase = FilterPhase.PASS
    phase_ticks: int = 0
    phase_elapsed: float = 0.0
    contact_azimuth: float = 0.0


@dataclass(frozen=True)
class ContactEvent:
    """Resolved tactile contact: body-frame azimuth, net force magnitude."""

    azimuth: float
    magnitude: float


@dataclass(frozen=True)
class TimeoutExpired:
    """Emitted once when the post-contact wait completes."""


def laser_repulsion(scan, cfg: FilterConfig) -> tuple[float, float]:
    """Body-frame repulsion velocity from beams closer than d0.

    Each return inside d0 contributes
    k_rep * (1/d - 1/d0) * (1/d^2) along the beam's reverse direction;
    non-positive and no-return readings are discarded.  Beams sum in
    index order.
    """
    ranges = np.asarray(scan.ranges, dtype=float)
    idx = np.arange(ranges.size)
    ok = np.isfinite(ranges) & (ranges > 0.0) & (ranges < cfg.d0)
    if not ok.any():
        return (0.0, 0.0)
    d = ranges[ok]
    mag = cfg.k_rep * (1.0 / d - 1.0 / cfg.d0) / (d * d)
    ang = scan.angle_min + scan.angle_increment * idx[ok]
    fx = float(np.sum(-mag * np.cos(ang)))
    fy = float(np.sum(-mag * np.sin(ang)))
    return (fx, fy)


def contact_resolve(frame, cfg: FilterConfig) -> ContactEvent | None:
    """Vector-sum plates above threshold into one contact event.

    Returns None when no plate exceeds f_thresh, or when opposing plates
    cancel so far that the summed magnitude no longer clears the
    threshold (no resolvable azimuth; logged).
    """
    vx = vy = 0.0
    any_over = False
    for j in range(PLATE_COUNT):
        f = frame.forces[j]
        if f > cfg.f_thresh:
            nx, ny = plate_normal(j)
            vx += f * nx
            vy += f * ny
            any_over = True
    if not any_over:
        return None
    mag = math.hypot(vx, vy)
    if mag <= cfg.f_thresh:
        log.warning("tactile contact with no resolvable azimuth ignored")
        return None
    return ContactEvent(math.atan2(vy, vx), mag)


def filter_step(
    cmd_in: VelocityCommand,
    scan,
    frame,
    state: FilterState,
    cfg: FilterConfig,
    dt: float,
) -> tuple[VelocityCommand, FilterState, list]:
    """One tick of the filter; returns (cmd_out, new state, events).

    Phase walk per call: an expired Repulsing rolls into Waiting; Waiting
    restarts on a fresh contact or expires into Pass (emitting
    TimeoutExpired); Pass enters Repulsing on contact.  The resulting
    schedule after an isolated contact is exactly ceil(t_repulse/dt)
    repulse ticks followed by zeros until ceil(t_wait/dt) ticks, then
    pass-through.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    events: list = []
    phase = state.phase
    ticks = state.phase_ticks
    azimuth = state.contact_azimuth

    if phase is FilterPhase.REPULSING and ticks * dt >= cfg.t_repulse:
        phase, ticks = FilterPhase.WAITING, 0

    if phase is FilterPhase.WAITING:
        ev = contact_resolve(frame, cfg)
        if ev is not None:
            phase, ticks, azimuth = FilterPhase.REPULSING, 0, ev.azimuth
            events.append(ev)
        elif ticks * dt >= cfg.t_wait - cfg.t_repulse:
            phase, ticks = FilterPhase.PASS, 0
            events.append(TimeoutExpired())

    if phase is FilterPhase.PASS:
        ev = contact_resolve(frame, cfg)
        if ev is not None:
            phase, ticks, azimuth = FilterPhase.REPULSING, 0, ev.azimuth
            events.append(ev)

    if phase is FilterPhase.REPULSING:
        out = VelocityCommand(
            -cfg.v_rep * math.cos(azimuth), -cfg.v_rep * math.sin(azimuth), 0.0
        )
    elif phase is FilterPhase.WAITING:
        out = VelocityCommand(0.0, 0.0, 0.0)
    else:
        if cmd_in.speed() < cfg.eps_static:
            # static robot: laser term suppressed, command untouched
            out = cmd_in
        else:
            fx, fy = laser_repulsion(scan, cfg)
            vx, vy = cmd_in.vx + fx, cmd_in.vy + fy
            sp = math.hypot(vx, vy)
            if sp > cfg.v_max:
                vx, vy = vx * cfg.v_max / sp, vy * cfg.v_max / sp
            out = VelocityCommand(vx, vy, cmd_in.omega)

    ticks += 1
    new_state = FilterState(phase, ticks, ticks * dt, azimuth)
    return out, new_state, events
